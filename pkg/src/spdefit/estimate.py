"""Least-squares estimation of drift parameters from observed mode trajectories.

The estimator solves the normal equations A theta = b where
A_ij = sum_m <G_i(t_m), G_j(t_m)> dt and b_i = sum_m <G_i(t_m), dX_m - G_*(t_m) dt>,
with G_i the mode representation of the i-th dictionary term evaluated on the
observed N-mode field at the left endpoint of each step, and <.,.> the
mode-space (Parseval) inner product.  Left-endpoint evaluation is essential:
any other rule correlates the integrand with the increment and shifts the
result by a quadratic-variation term.

Weighted estimation multiplies every regression term (and the increments) by
lambda_k**alpha, the spectral action of a fractional Laplacian power.
Eigenvalues are nonnegative (eigenvalues of -Laplacian), so the diffusion term
contributes -lambda_k * X_k in mode space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .simulate import (
    DriftDictionary,
    DriftTerm,
    DriftTermKind,
    _TermEvaluator,
    _is_diagonal,
    inhibitor_convolution,
)
from .spectral import ModeTrajectory


class RankDeficientError(RuntimeError):
    """The Gram matrix is numerically singular."""


class DegenerateDataError(RuntimeError):
    """The data carries no information for the requested quantity."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""


@dataclass
class EstimationProblem:
    """What to estimate: dictionary with known/unknown flags, weighting, windows."""

    dictionary: DriftDictionary
    weight_alpha: float = 0.0
    n_modes: int | None = None  # restrict to the first n modes of the trajectory
    time_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.weight_alpha < 0:
            raise ValueError("weight exponent alpha must be >= 0")
        if not self.dictionary.unknown_terms():
            raise ValueError("at least one dictionary term must be unknown")


@dataclass
class EstimationResult:
    """Solved normal equations plus uncertainty for the diffusivity coordinate."""

    labels: list[str]
    theta_hat: np.ndarray
    gram: np.ndarray
    rhs: np.ndarray
    condition_number: float
    std_err: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    N_used: int
    T_used: float
    dt: float
    weight_alpha: float = 0.0

    def to_report(self) -> dict:
        def _clean(x):
            return [None if not np.isfinite(v) else float(v) for v in np.atleast_1d(x)]

        return {
            "labels": list(self.labels),
            "theta_hat": [float(v) for v in self.theta_hat],
            "std_err": _clean(self.std_err),
            "ci_low": _clean(self.ci_low),
            "ci_high": _clean(self.ci_high),
            "gram_condition": float(self.condition_number),
            "N": int(self.N_used),
            "T": float(self.T_used),
            "dt": float(self.dt),
            "weight_alpha": float(self.weight_alpha),
        }


def _window_indices(traj: ModeTrajectory, time_range) -> tuple[int, int]:
    if time_range is None:
        return 0, traj.times.size - 1
    t_a, t_b = time_range
    a = int(np.searchsorted(traj.times, t_a - 1e-12, side="left"))
    b = int(np.searchsorted(traj.times, t_b + 1e-12, side="right")) - 1
    if b - a < 1:
        raise ValueError(f"time range {time_range} selects fewer than two observations")
    return a, b


def _term_mode_values(term: DriftTerm, traj: ModeTrajectory, evaluator, chunk_rows: int) -> np.ndarray:
    """(M+1, N) array of the term's mode coefficients along the trajectory."""
    if _is_diagonal(term):
        return evaluator.term_block(term, traj.coeffs)
    if term.kind is DriftTermKind.INHIBITOR:
        return inhibitor_convolution(traj, term.inhibitor_dv, term.inhibitor_eps).coeffs
    out = np.empty_like(traj.coeffs)
    for start in range(0, traj.coeffs.shape[0], chunk_rows):
        stop = min(start + chunk_rows, traj.coeffs.shape[0])
        out[start:stop] = evaluator.term_block(term, traj.coeffs[start:stop])
    return out


def _prepare(traj: ModeTrajectory, problem: EstimationProblem):
    if problem.n_modes is not None:
        traj = traj.truncated(problem.n_modes)
    dt = traj.uniform_dt()
    a, b = _window_indices(traj, problem.time_range)
    unknowns = problem.dictionary.unknown_terms()
    knowns = problem.dictionary.known_contributions()
    grid_terms = [
        t
        for t in unknowns + knowns
        if not _is_diagonal(t) and t.kind is not DriftTermKind.INHIBITOR
    ]
    evaluator = _TermEvaluator(grid_terms, traj.basis)
    chunk_rows = max(1, (1 << 22) // max(evaluator.transform.ntot if evaluator.transform else traj.basis.N, 1))
    return traj, dt, a, b, unknowns, knowns, evaluator, chunk_rows


def assemble_normal_equations(traj: ModeTrajectory, problem: EstimationProblem) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix and right-hand side of the weighted least-squares system.

    All terms are evaluated on the observed truncated field at the left
    endpoints of the time grid; sums run in ascending time order.
    """
    traj, dt, a, b, unknowns, knowns, evaluator, chunk_rows = _prepare(traj, problem)
    w = traj.basis.eigenvalues**problem.weight_alpha if problem.weight_alpha != 0 else None

    G = [_term_mode_values(t, traj, evaluator, chunk_rows)[a:b] for t in unknowns]
    resid = traj.coeffs[a + 1 : b + 1] - traj.coeffs[a:b]
    if knowns:
        for t in knowns:
            resid = resid - (t.intensity * dt) * _term_mode_values(t, traj, evaluator, chunk_rows)[a:b]
    if w is not None:
        G = [g * w for g in G]
        resid = resid * w

    p = len(G)
    A = np.empty((p, p))
    rhs = np.empty(p)
    for i in range(p):
        rhs[i] = float(np.einsum("mk,mk->", G[i], resid))
        for j in range(i, p):
            A[i, j] = A[j, i] = dt * float(np.einsum("mk,mk->", G[i], G[j]))
    return A, rhs


def solve_least_squares(A: np.ndarray, b: np.ndarray, labels=None) -> tuple[np.ndarray, float]:
    """Solve the symmetric system A theta = b; returns (theta, condition number).

    Raises RankDeficientError naming the (near-)collinear terms when A is
    numerically singular.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
        raise ValueError("A must be square and b conformable")
    if not np.allclose(A, A.T, rtol=1e-10, atol=0.0):
        raise ValueError("A must be symmetric")
    evals = scipy.linalg.eigvalsh(A)
    lam_max = float(evals[-1])
    lam_min = float(evals[0])
    cond = np.inf if lam_min <= 0 else lam_max / lam_min
    if lam_min <= lam_max * 1e-13 or lam_max == 0.0:
        _, vecs = scipy.linalg.eigh(A)
        null = np.abs(vecs[:, 0])
        names = labels or [f"term{i}" for i in range(A.shape[0])]
        involved = [n for n, v in zip(names, null) if v > 0.3 * null.max()]
        raise RankDeficientError(
            "the Gram matrix is singular; collinear terms: " + ", ".join(involved)
        )
    theta = scipy.linalg.solve(A, b, assume_a="pos")
    return theta, cond


def estimate(traj: ModeTrajectory, problem: EstimationProblem) -> EstimationResult:
    """Assemble, solve, and attach confidence information for the diffusivity."""
    from . import uncertainty

    A, b = assemble_normal_equations(traj, problem)
    unknowns = problem.dictionary.unknown_terms()
    labels = [t.label for t in unknowns]
    theta, cond = solve_least_squares(A, b, labels=labels)

    traj_used = traj.truncated(problem.n_modes) if problem.n_modes is not None else traj
    a, bb = _window_indices(traj_used, problem.time_range)
    T_used = float(traj_used.times[bb] - traj_used.times[a])
    N_used = int((traj_used.basis.eigenvalues > 0).sum())

    p = len(theta)
    std_err = np.full(p, np.nan)
    ci_low = np.full(p, np.nan)
    ci_high = np.full(p, np.nan)
    for i, t in enumerate(unknowns):
        if t.kind is DriftTermKind.DIFFUSION and theta[i] > 0:
            d = traj_used.basis.domain.d
            lam_const = uncertainty.clt_variance(theta[i], d, T_used, uncertainty.weyl_constant(traj_used.basis.domain))
            std_err[i] = np.sqrt(lam_const / N_used ** (1.0 + 2.0 / d))
            ci_low[i], ci_high[i] = uncertainty.confidence_interval(
                theta[i], d, T_used, uncertainty.weyl_constant(traj_used.basis.domain), N_used
            )
    return EstimationResult(
        labels=labels,
        theta_hat=theta,
        gram=A,
        rhs=b,
        condition_number=cond,
        std_err=std_err,
        ci_low=ci_low,
        ci_high=ci_high,
        N_used=N_used,
        T_used=T_used,
        dt=traj_used.uniform_dt(),
        weight_alpha=problem.weight_alpha,
    )


def plain_diffusivity(traj: ModeTrajectory, weight_alpha: float = 0.0) -> float:
    """Diffusivity estimate that treats every other drift term as absent.

    Mode-space form of the ratio of int (Lap X) dX over int (Lap X)^2 dt with
    left-point increments and lambda**alpha weighting.
    """
    if weight_alpha < 0:
        raise ValueError("weight exponent alpha must be >= 0")
    dt = traj.uniform_dt()
    lam = traj.basis.eigenvalues
    X = traj.coeffs[:-1]
    dX = np.diff(traj.coeffs, axis=0)
    num = -float(np.einsum("k,mk,mk->", lam ** (1.0 + 2.0 * weight_alpha), X, dX))
    den = dt * float(np.einsum("k,mk,mk->", lam ** (2.0 + 2.0 * weight_alpha), X, X))
    if den == 0.0:
        raise DegenerateDataError("constant field: the diffusivity denominator vanishes")
    return num / den


def riemann_numerator(traj: ModeTrajectory, rule: str = "left") -> float:
    """Discretized int (Lap X) dX/dt dt numerator; exposes the endpoint rule.

    The left rule is the Ito-consistent one; the right rule differs by the
    summed quadratic variation and is provided for diagnostics.
    """
    lam = traj.basis.eigenvalues
    dX = np.diff(traj.coeffs, axis=0)
    if rule == "left":
        X = traj.coeffs[:-1]
    elif rule == "right":
        X = traj.coeffs[1:]
    else:
        raise ValueError(f"unknown endpoint rule {rule!r}")
    return -float(np.einsum("k,mk,mk->", lam, X, dX))


def ito_numerator_closed_form(traj: ModeTrajectory, sigma: float, gamma: float = 0.0) -> float:
    """Closed form of the diffusivity numerator for white-in-time noise.

    Ito's formula turns int X dX into endpoint values minus half the quadratic
    variation sigma^2 lambda^(-2 gamma) T per mode, so no time discretization
    enters.  The overall sign follows the nonnegative eigenvalue convention and
    was pinned against the left-point Riemann discretization.
    """
    lam = traj.basis.eigenvalues
    T = traj.T
    x0 = traj.coeffs[0]
    xT = traj.coeffs[-1]
    nz = lam > 0
    qv = sigma**2 * lam[nz] ** (-2.0 * gamma) * T
    return -0.5 * float(np.sum(lam[nz] * (xT[nz] ** 2 - x0[nz] ** 2 - qv)))


def identify_noise_parameters(traj: ModeTrajectory, T: float | None = None) -> tuple[float, float]:
    """Recover (sigma, gamma) from realized quadratic variations.

    The summed squared increments of mode k converge to sigma^2 lambda_k^(-2
    gamma) T; comparing the two smallest distinct nonzero eigenvalues (averaging
    over equal-eigenvalue modes) identifies both parameters.
    """
    lam = traj.basis.eigenvalues
    if T is None:
        T = traj.T
    Q = (np.diff(traj.coeffs, axis=0) ** 2).sum(axis=0)

    positive = np.flatnonzero(lam > 0)
    if positive.size == 0:
        raise ValueError("need modes with nonzero eigenvalue")
    groups: list[list[int]] = []
    values: list[float] = []
    for k in positive:
        if values and np.isclose(lam[k], values[-1], rtol=1e-9):
            groups[-1].append(k)
        else:
            values.append(float(lam[k]))
            groups.append([k])
    if len(values) < 2:
        raise ValueError("need at least two distinct nonzero eigenvalues")
    lam_a, lam_b = values[0], values[1]
    Qa = float(np.mean(Q[groups[0]]))
    Qb = float(np.mean(Q[groups[1]]))
    if Qa <= 0 or Qb <= 0:
        raise DegenerateDataError("vanishing quadratic variation: the data looks noiseless")
    gamma_hat = np.log(Qa / Qb) / (2.0 * np.log(lam_b / lam_a))
    sigma_hat = np.sqrt(Qa * lam_a ** (2.0 * gamma_hat) / T)
    return float(sigma_hat), float(gamma_hat)


def default_lambda_grid(A: np.ndarray, b: np.ndarray, penalize=None, n_points: int = 25, decades: float = 4.0) -> np.ndarray:
    """Descending regularization grid from the all-zero threshold down to 0."""
    penalize = _penalty_mask(len(b), penalize)
    free = ~penalize
    r = np.asarray(b, dtype=float).copy()
    if free.any():
        sub = scipy.linalg.solve(A[np.ix_(free, free)], b[free], assume_a="pos")
        r = b - A[:, free] @ sub
    lam_max = float(np.max(np.abs(r[penalize]))) if penalize.any() else 1.0
    if lam_max == 0.0:
        lam_max = 1.0
    grid = lam_max * np.logspace(0.0, -decades, n_points)
    return np.concatenate([grid, [0.0]])


def _penalty_mask(p, penalize):
    if penalize is None:
        return np.ones(p, dtype=bool)
    penalize = np.asarray(penalize)
    if penalize.dtype != bool:
        mask = np.zeros(p, dtype=bool)
        mask[penalize] = True
        return mask
    return penalize


def lasso_path(
    A: np.ndarray,
    b: np.ndarray,
    lambda_grid=None,
    penalize=None,
    tol: float = 1e-10,
    max_iter: int = 20000,
) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate descent for 0.5 theta'A theta - b'theta + lam * sum |theta_i|.

    ``penalize`` selects the penalized coordinates (mask or index list); the
    diffusivity coordinate is typically left unpenalized.  Solutions are warm
    started along the descending grid.  Returns (lambda_grid, coefficients)
    with one coefficient row per grid value.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    p = len(b)
    mask = _penalty_mask(p, penalize)
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(A, b, penalize=mask)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if np.any(lambda_grid < 0) or np.any(np.diff(lambda_grid) > 0):
        raise ValueError("lambda grid must be nonnegative and descending")
    diag = np.diag(A).copy()
    if np.any(diag <= 0):
        raise RankDeficientError("coordinate descent needs positive Gram diagonal entries")

    theta = np.zeros(p)
    path = np.empty((len(lambda_grid), p))
    for g, lam in enumerate(lambda_grid):
        for it in range(max_iter):
            delta = 0.0
            for i in range(p):
                r = b[i] - (A[i] @ theta - diag[i] * theta[i])
                if mask[i] and lam > 0:
                    new = np.sign(r) * max(abs(r) - lam, 0.0) / diag[i]
                else:
                    new = r / diag[i]
                delta = max(delta, abs(new - theta[i]))
                theta[i] = new
            if delta < tol:
                break
        else:
            raise ConvergenceError(
                f"coordinate descent did not converge at lambda={lam:.3e}; last max change {delta:.3e}"
            )
        path[g] = theta
    return lambda_grid, path


_STABILITY_BY_KIND = {
    DriftTermKind.POLY: 2.0,
    DriftTermKind.POINTWISE_FHN_F1: 2.0,
    DriftTermKind.POINTWISE_FHN_F2: 2.0,
    DriftTermKind.ADVECTION: 1.0,
    DriftTermKind.INHIBITOR: 4.0,
}


def stability_index(component) -> float:
    """Misspecification stability index of a drift component (or their minimum).

    Pointwise reaction terms score 2, advection 1, the inhibitor convolution 4,
    and fractional diffusion of order alpha scores 2 - alpha.  A composite model
    is as stable as its least stable component.
    """
    if isinstance(component, (list, tuple)) and not (
        len(component) == 2 and isinstance(component[0], (DriftTermKind, str))
    ):
        values = [stability_index(c) for c in component]
        if not values:
            raise ValueError("empty component list")
        return min(values)
    alpha = None
    if isinstance(component, DriftTerm):
        alpha = component.alpha
        kind = component.kind
    elif isinstance(component, (list, tuple)):
        kind, alpha = component
        kind = DriftTermKind(kind) if isinstance(kind, str) else kind
    else:
        kind = DriftTermKind(component) if isinstance(component, str) else component
    if not isinstance(kind, DriftTermKind):
        raise ValueError(f"unrecognized drift component {component!r}")
    if kind is DriftTermKind.FRACTIONAL_DIFFUSION:
        if alpha is None or not 0 < alpha < 2:
            raise ValueError("fractional diffusion stability needs its exponent in (0, 2)")
        return 2.0 - float(alpha)
    if kind not in _STABILITY_BY_KIND:
        raise ValueError(f"no stability index for drift kind {kind}")
    return _STABILITY_BY_KIND[kind]
