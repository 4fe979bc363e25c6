"""Monte Carlo harnesses that check the asymptotic theory at desk scale.

Each study simulates replicate trajectories with deterministic per-replicate
seeds (master seed + replicate index), estimates parameters over a grid of
mode counts, and reports empirical error curves next to the theoretically
predicted decay.  Everything is reproducible bitwise from (config, seed), and
replicate results are aggregated in index order regardless of execution order.
"""

from __future__ import annotations

import dataclasses
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimate import (
    EstimationProblem,
    RankDeficientError,
    assemble_normal_equations,
    plain_diffusivity,
    solve_least_squares,
)
from .noise import NoiseSpec
from .simulate import BlowUpError, DriftDictionary, DriftTermKind, FHNParams, simulate
from .spectral import Domain, GridFrameSeries, ModeTrajectory, modes_to_grid, project_frames_to_modes
from .uncertainty import RatePrediction, confidence_interval, predicted_rate
from .estimate import stability_index


@dataclass
class GeneratorSpec:
    """Everything needed to draw one trajectory of the data-generating model."""

    model: DriftDictionary | FHNParams
    noise: NoiseSpec
    domain: Domain
    T: float
    dt: float
    N_sim: int
    include_zero_mode: bool = True
    initial: np.ndarray | None = None

    def dictionary(self) -> DriftDictionary:
        return self.model.dictionary() if isinstance(self.model, FHNParams) else self.model

    def draw(self, seed: int, store_modes: int) -> ModeTrajectory:
        return simulate(
            self.model,
            self.noise,
            self.domain,
            self.N_sim,
            self.T,
            self.dt,
            seed,
            initial=self.initial,
            include_zero_mode=self.include_zero_mode,
            store_modes=store_modes,
        )


@dataclass
class RateStudyConfig:
    """Rate study: replicate simulations, estimation over an ascending N grid."""

    generator: GeneratorSpec
    problems: dict[str, EstimationProblem]
    N_list: list[int]
    replicates: int
    seed: int
    drop_first_for_fit: bool = True
    dt_control: bool = False
    misspec_eta: float | None = None

    def __post_init__(self):
        self.N_list = [int(n) for n in self.N_list]
        if sorted(self.N_list) != self.N_list or len(set(self.N_list)) != len(self.N_list):
            raise ValueError("N_list must be strictly ascending")
        if max(self.N_list) > self.generator.N_sim / 2:
            raise ValueError("max(N_list) must not exceed N_sim / 2")
        if self.replicates < 20:
            raise ValueError("rate studies need at least 20 replicates")


@dataclass
class ParamCurve:
    """Empirical error curve of one estimated parameter across the N grid."""

    problem: str
    label: str
    truth: float
    rmse: np.ndarray
    bias: np.ndarray
    slope: float
    slope_stderr: float
    predicted: RatePrediction | None


@dataclass
class RateStudyResult:
    N_list: list[int]
    curves: list[ParamCurve]
    estimates: dict[str, np.ndarray]  # problem -> (replicates, len(N_list), p)
    seeds: list[int]
    dt_control_shift: dict[str, np.ndarray] | None = None
    notes: list[str] = field(default_factory=list)

    def curve(self, problem: str, label: str) -> ParamCurve:
        for c in self.curves:
            if c.problem == problem and c.label == label:
                return c
        raise KeyError(f"no curve for ({problem!r}, {label!r})")

    def to_csv(self, path) -> None:
        write_rate_csv(self, path)


def _fit_slope(N_values, rmse) -> tuple[float, float]:
    x = np.log(np.asarray(N_values, dtype=float))
    y = np.log(np.asarray(rmse, dtype=float))
    keep = np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2:
        return float("nan"), float("nan")
    xc = x - x.mean()
    slope = float((xc * y).sum() / (xc**2).sum())
    intercept = float(y.mean() - slope * x.mean())
    if x.size > 2:
        resid = y - slope * x - intercept
        stderr = float(np.sqrt((resid**2).sum() / (x.size - 2) / (xc**2).sum()))
    else:
        stderr = float("nan")
    return slope, stderr


def _truth_for(term, generator_dict: DriftDictionary) -> float:
    for t in generator_dict.terms + list(generator_dict.fixed_terms):
        if t.signature == term.signature:
            return t.intensity
    return float("nan")


def _solve_problem(traj, problem, N):
    prob = dataclasses.replace(problem, n_modes=N)
    A, b = assemble_normal_equations(traj, prob)
    theta, _ = solve_least_squares(A, b, labels=[t.label for t in prob.dictionary.unknown_terms()])
    return theta


def _run_replicate(config: RateStudyConfig, rep: int, store_modes: int):
    seed = config.seed + rep
    try:
        traj = config.generator.draw(seed, store_modes)
    except BlowUpError as exc:
        raise BlowUpError(exc.step, exc.value, exc.limit, context=f"replicate {rep} (seed {seed})") from None
    out = {}
    for name, problem in config.problems.items():
        out[name] = np.array([_solve_problem(traj, problem, N) for N in config.N_list])
    return out


def run_rate_study(config: RateStudyConfig, threads: int = 1) -> RateStudyResult:
    """Empirical RMSE(N) and log-log slope for every unknown of every problem."""
    store_modes = max(config.N_list)
    gen_dict = config.generator.dictionary()
    R = config.replicates

    estimates = {
        name: np.empty((R, len(config.N_list), len(problem.dictionary.unknown_terms())))
        for name, problem in config.problems.items()
    }
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _run_replicate(config, r, store_modes), range(R)))
    else:
        results = [_run_replicate(config, r, store_modes) for r in range(R)]
    for r, res in enumerate(results):
        for name in config.problems:
            estimates[name][r] = res[name]

    d = config.generator.domain.d
    curves = []
    fit_N = config.N_list[1:] if config.drop_first_for_fit and len(config.N_list) > 3 else config.N_list
    fit_idx = [config.N_list.index(n) for n in fit_N]
    for name, problem in config.problems.items():
        unknowns = problem.dictionary.unknown_terms()
        for i, term in enumerate(unknowns):
            truth = _truth_for(term, gen_dict)
            err = estimates[name][:, :, i] - truth
            rmse = np.sqrt(np.mean(err**2, axis=0))
            bias = np.mean(err, axis=0)
            slope, stderr = _fit_slope(np.array(config.N_list)[fit_idx], rmse[fit_idx])
            if term.kind is DriftTermKind.DIFFUSION:
                predicted = predicted_rate("diffusivity", d, misspec_eta=config.misspec_eta)
            else:
                predicted = predicted_rate("reaction", d)
            curves.append(ParamCurve(name, term.label, truth, rmse, bias, slope, stderr, predicted))

    shift = None
    if config.dt_control:
        fine_gen = dataclasses.replace(config.generator, dt=config.generator.dt / 4.0)
        traj_fine = fine_gen.draw(config.seed, store_modes)
        traj_base = config.generator.draw(config.seed, store_modes)
        shift = {}
        for name, problem in config.problems.items():
            N = config.N_list[-1]
            shift[name] = _solve_problem(traj_fine, problem, N) - _solve_problem(traj_base, problem, N)

    return RateStudyResult(
        N_list=config.N_list,
        curves=curves,
        estimates=estimates,
        seeds=[config.seed + r for r in range(R)],
        dt_control_shift=shift,
    )


def derive_misspec_eta(generator_dict: DriftDictionary, estimator_dict: DriftDictionary) -> float | None:
    """Stability index of the generator components missing from the estimator."""
    have = {t.signature for t in estimator_dict.terms}
    dropped = [
        t
        for t in generator_dict.terms[1:] + list(generator_dict.fixed_terms)
        if t.signature not in have
    ]
    if not dropped:
        return None
    return stability_index(dropped)


def run_misspecification_study(config: RateStudyConfig, threads: int = 1) -> RateStudyResult:
    """Rate study with generator drift (or noise) absent from the estimator.

    The theoretical exponent attached to the diffusivity curve comes from the
    stability index of the dropped drift components; a purely noise-level
    misspecification has no such prediction.
    """
    if config.misspec_eta is None:
        etas = [
            derive_misspec_eta(config.generator.dictionary(), p.dictionary)
            for p in config.problems.values()
        ]
        etas = [e for e in etas if e is not None]
        eta = min(etas) if etas else None
        config = dataclasses.replace(config, misspec_eta=eta)
    result = run_rate_study(config, threads=threads)
    if config.misspec_eta is None:
        result.notes.append("no drift misspecification detected: no rate prediction applies")
    return result


@dataclass
class CoverageConfig:
    generator: GeneratorSpec
    problem: EstimationProblem
    N: int
    replicates: int
    seed: int


@dataclass
class CoverageResult:
    coverage: float
    truth: float
    estimates: np.ndarray
    intervals: np.ndarray  # (replicates, 2)
    seeds: list[int]


def run_coverage_study(config: CoverageConfig, threads: int = 1) -> CoverageResult:
    """Fraction of replicates whose diffusivity interval contains the truth."""
    gen_dict = config.generator.dictionary()
    truth = gen_dict.theta0
    d = config.generator.domain.d
    from .uncertainty import weyl_constant

    Lambda = weyl_constant(config.generator.domain)

    def one(rep: int):
        traj = config.generator.draw(config.seed + rep, config.N)
        theta = _solve_problem(traj, config.problem, config.N)
        i = [t.kind for t in config.problem.dictionary.unknown_terms()].index(DriftTermKind.DIFFUSION)
        est = float(theta[i])
        n_eff = int((traj.truncated(config.N).basis.eigenvalues > 0).sum())
        lo, hi = confidence_interval(est, d, traj.T, Lambda, n_eff)
        return est, lo, hi

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(config.replicates)))
    else:
        rows = [one(r) for r in range(config.replicates)]
    est = np.array([r[0] for r in rows])
    iv = np.array([[r[1], r[2]] for r in rows])
    coverage = float(np.mean((iv[:, 0] <= truth) & (truth <= iv[:, 1])))
    return CoverageResult(coverage, truth, est, iv, [config.seed + r for r in range(config.replicates)])


def run_smoothing_invariance(
    data: GridFrameSeries | ModeTrajectory,
    sigma_f_list,
    n_modes: int,
    grid_shape=None,
    weight_alpha: float = 0.0,
) -> list[tuple[float, float, float]]:
    """Diffusivity estimates after spatial Gaussian smoothing of the frames.

    Returns rows (sigma_f, theta0_hat, relative deviation from the unsmoothed
    estimate).  Bandwidths are in the domain's length units.
    """
    from .simulate import smooth_frames
    from .spectral import build_basis

    if isinstance(data, ModeTrajectory):
        if grid_shape is None:
            raise ValueError("synthesizing a trajectory needs a grid shape")
        frames = modes_to_grid(data, grid_shape)
    else:
        frames = data
    basis = build_basis(frames.domain, n_modes, include_zero_mode=False)
    min_pixel = min(frames.pixel_sizes)
    baseline = plain_diffusivity(project_frames_to_modes(frames, basis), weight_alpha)
    rows = []
    for s in sigma_f_list:
        if 0 < s < min_pixel:
            warnings.warn(f"smoothing bandwidth {s} is below the pixel size {min_pixel:.3g}; near no-op")
        if s == 0:
            theta = baseline
        else:
            theta = plain_diffusivity(project_frames_to_modes(smooth_frames(frames, s), basis), weight_alpha)
        rows.append((float(s), float(theta), float(abs(theta - baseline) / abs(baseline))))
    return rows


_VARIANT_UNKNOWNS = {
    "lin": 1,  # diffusivity only, reaction formally zero
    "2": 2,  # diffusivity + first reaction coefficient
    "3": 3,
    "4": 4,
}


def fhn_variant_problem(fhn_dictionary: DriftDictionary, variant: str, weight_alpha: float = 0.0) -> EstimationProblem:
    """The four classic diffusivity estimators on activator-inhibitor data.

    'lin' drops all reaction terms; variants '2'..'4' free the first 1..3
    reaction coefficients and keep the rest fixed at their supplied values.
    """
    if variant not in _VARIANT_UNKNOWNS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(_VARIANT_UNKNOWNS)}")
    n_unknown = _VARIANT_UNKNOWNS[variant]
    terms = fhn_dictionary.terms
    if variant == "lin":
        dictionary = DriftDictionary([dataclasses.replace(terms[0], known=False)])
    else:
        new_terms = [
            dataclasses.replace(t, known=(i >= n_unknown)) for i, t in enumerate(terms)
        ]
        dictionary = DriftDictionary(new_terms, fixed_terms=list(fhn_dictionary.fixed_terms))
    return EstimationProblem(dictionary, weight_alpha=weight_alpha)


@dataclass
class ComparisonResult:
    N_grid: list[int]
    diffusivity: dict[str, np.ndarray]  # variant -> theta0_hat per N (nan on failure)
    failures: list[str]
    notes: list[str]

    def to_csv(self, path) -> None:
        write_comparison_csv(self, path)


def run_estimator_comparison(
    traj: ModeTrajectory,
    fhn_dictionary: DriftDictionary,
    N_grid=None,
    weight_alpha: float = 0.0,
) -> ComparisonResult:
    """Diffusivity from the four nested estimator variants over an N grid."""
    if N_grid is None:
        if traj.basis.N < 25:
            raise ValueError("default comparison grid starts at N = 25; pass N_grid explicitly")
        N_grid = [int(n) for n in np.unique(np.geomspace(25, traj.basis.N, 6).astype(int))]
    N_grid = [int(n) for n in N_grid]
    out = {}
    failures = []
    for variant in _VARIANT_UNKNOWNS:
        problem = fhn_variant_problem(fhn_dictionary, variant, weight_alpha)
        vals = np.full(len(N_grid), np.nan)
        for i, N in enumerate(N_grid):
            try:
                theta = _solve_problem(traj, problem, N)
                vals[i] = theta[0]
            except RankDeficientError as exc:
                failures.append(f"variant {variant}, N={N}: {exc}")
        out[variant] = vals
    notes = ["estimates computed on simulated activator-inhibitor data, not on recordings"]
    return ComparisonResult(N_grid, out, failures, notes)


def write_rate_csv(result: RateStudyResult, path) -> None:
    lines = [
        "# problem,param,N,rmse,bias,slope_fit,slope_stderr,predicted_exponent,predicted_kind"
    ]
    for c in result.curves:
        if c.predicted is None:
            kind, expo = "none", ""
        elif c.predicted.logarithmic:
            kind, expo = "logarithmic", ""
        elif not c.predicted.valid:
            kind, expo = "no-decay", ""
        else:
            kind, expo = "power", repr(float(c.predicted.exponent))
        for N, rmse, bias in zip(result.N_list, c.rmse, c.bias):
            lines.append(
                f"{c.problem},{c.label},{N},{rmse!r},{bias!r},{c.slope!r},{c.slope_stderr!r},{expo},{kind}"
            )
    for note in result.notes:
        lines.append(f"# note: {note}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_comparison_csv(result: ComparisonResult, path) -> None:
    lines = ["# variant,N,theta0_hat"]
    for note in result.notes:
        lines.append(f"# note: {note}")
    for variant, vals in result.diffusivity.items():
        for N, v in zip(result.N_grid, vals):
            lines.append(f"{variant},{N},{v!r}")
    for f in result.failures:
        lines.append(f"# failure: {f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
