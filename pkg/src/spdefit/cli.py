"""Command-line surface: reproducible simulation, estimation, and study runs.

Every subcommand resolves its configuration from (in increasing precedence)
built-in defaults, an optional flat key=value config file (or a previously
written run manifest), and command-line flags.  The fully resolved
configuration, seed, and output list are written to a run manifest next to the
outputs, so any run can be reproduced bitwise from its manifest.

Exit codes: 0 success, 1 usage error, 2 numerical or degenerate-data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import frames_io
from .estimate import (
    ConvergenceError,
    DegenerateDataError,
    EstimationProblem,
    RankDeficientError,
    estimate,
    identify_noise_parameters,
)
from .frames_io import FrameFormatError, RunManifest, Stopwatch
from .noise import NoiseKind, NoiseSpec
from .simulate import (
    BlowUpError,
    DriftDictionary,
    DriftTerm,
    DriftTermKind,
    FHNParams,
    VelocityField,
    simulate,
)
from .spectral import Domain, modes_to_grid
from .studies import (
    CoverageConfig,
    GeneratorSpec,
    RateStudyConfig,
    run_coverage_study,
    run_estimator_comparison,
    run_misspecification_study,
    run_rate_study,
    run_smoothing_invariance,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_floats(text):
    return tuple(float(x) for x in str(text).split(",") if x != "")


def _parse_ints(text):
    return tuple(int(x) for x in str(text).split(",") if x != "")


# Option tables: (name, parser, default, help).  Defaults are materialized into
# the run manifest after resolution.
_COMMON_MODEL = [
    ("model", str, "heat", "generator model: heat | linear | fhn | advection"),
    ("d", int, 1, "spatial dimension"),
    ("L", _parse_floats, (6.283185307179586,), "comma-separated side lengths"),
    ("theta0", float, 1.0, "diffusivity"),
    ("theta1", float, 0.0, "linear reaction coefficient (model=linear)"),
    ("noise", str, "white", "noise kind: white | spatial | ou-forcing | ou-integrated"),
    ("sigma", float, 1.0, "noise intensity"),
    ("gamma", float, 0.0, "spatial correlation exponent (noise=spatial)"),
    ("mu", float, 0.0, "OU relaxation rate (OU noise kinds)"),
    ("T", float, 1.0, "time horizon"),
    ("dt", float, 1e-3, "time step"),
    ("N", int, 64, "number of simulated modes"),
    ("zero-mode", int, -1, "include the constant mode (1/0, -1 = auto)"),
    ("fhn-du", float, 1.0, "activator diffusivity"),
    ("fhn-dv", float, 2.0, "inhibitor diffusivity"),
    ("fhn-k1", float, 3.0, "reaction rate k1"),
    ("fhn-k2", float, 1.0, "inhibition rate k2"),
    ("fhn-eps", float, 1.0, "inhibitor relaxation rate"),
    ("fhn-b", float, 1.0, "inhibitor drive"),
    ("fhn-u0", float, 1.0, "stable activator level"),
    ("fhn-a", float, 0.3, "threshold fraction"),
    ("adv-const", _parse_floats, (), "constant velocity components"),
    ("adv-amp", _parse_floats, (), "cosine modulation amplitudes"),
    ("adv-intensity", float, 1.0, "advection term intensity"),
]

_TERM_NAMES = {
    "diffusion": lambda: DriftTerm(DriftTermKind.DIFFUSION),
    "linear": lambda: DriftTerm(DriftTermKind.POLY, power=1),
    "quadratic": lambda: DriftTerm(DriftTermKind.POLY, power=2),
    "cubic": lambda: DriftTerm(DriftTermKind.POLY, power=3),
}


def _build_model(cfg):
    model = cfg["model"]
    if model == "heat":
        return DriftDictionary([DriftTerm(DriftTermKind.DIFFUSION, intensity=cfg["theta0"])])
    if model == "linear":
        return DriftDictionary(
            [
                DriftTerm(DriftTermKind.DIFFUSION, intensity=cfg["theta0"]),
                DriftTerm(DriftTermKind.POLY, power=1, intensity=cfg["theta1"]),
            ]
        )
    if model == "fhn":
        return FHNParams(
            D_U=cfg["fhn_du"],
            D_V=cfg["fhn_dv"],
            k1=cfg["fhn_k1"],
            k2=cfg["fhn_k2"],
            eps=cfg["fhn_eps"],
            b=cfg["fhn_b"],
            u0=cfg["fhn_u0"],
            a=cfg["fhn_a"],
        )
    if model == "advection":
        d = cfg["d"]
        const = cfg["adv_const"] or (0.0,) * d
        amp = cfg["adv_amp"] or (1.0,) * d
        vel = VelocityField(const, amp)
        return DriftDictionary(
            [
                DriftTerm(DriftTermKind.DIFFUSION, intensity=cfg["theta0"]),
                DriftTerm(DriftTermKind.ADVECTION, intensity=cfg["adv_intensity"], velocity=vel),
            ]
        )
    raise UsageError(f"unknown model {cfg['model']!r}")


def _build_noise(cfg) -> NoiseSpec:
    return NoiseSpec(NoiseKind(cfg["noise"]), sigma=cfg["sigma"], gamma=cfg["gamma"], mu=cfg["mu"])


def _zero_mode(cfg) -> bool:
    if cfg["zero_mode"] == -1:
        return not (cfg["noise"] == "spatial" and cfg["gamma"] > 0)
    return bool(cfg["zero_mode"])


def _build_generator(cfg) -> GeneratorSpec:
    return GeneratorSpec(
        model=_build_model(cfg),
        noise=_build_noise(cfg),
        domain=Domain(cfg["d"], cfg["L"]),
        T=cfg["T"],
        dt=cfg["dt"],
        N_sim=cfg["N"],
        include_zero_mode=_zero_mode(cfg),
    )


def _model_desc(cfg) -> str:
    if cfg["model"] == "fhn":
        keys = ["model", "fhn_du", "fhn_dv", "fhn_k1", "fhn_k2", "fhn_eps", "fhn_b", "fhn_u0", "fhn_a"]
    elif cfg["model"] == "advection":
        keys = ["model", "theta0", "adv_const", "adv_amp", "adv_intensity"]
    else:
        keys = ["model", "theta0", "theta1"]
    keys += ["noise", "sigma", "gamma", "mu"]
    return " ".join(f"{k}={cfg[k]}" for k in keys)


def _load_config_file(path) -> dict:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config file not found: {path}")
    if path.endswith(".json"):
        with open(path) as fh:
            payload = json.load(fh)
        return dict(payload.get("config", payload))
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(options, args, extra=()):
    """CLI flags override config-file values, which override defaults."""
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    cfg = {}
    for name, parse, default, _help in list(options) + list(extra):
        dest = name.replace("-", "_")
        cli_val = getattr(args, dest, None)
        if cli_val is not None:
            cfg[dest] = cli_val
        elif dest in file_cfg:
            raw = file_cfg[dest]
            cfg[dest] = parse(raw) if isinstance(raw, str) and parse is not str else raw
        else:
            cfg[dest] = default
    return cfg


def _add_options(sub, options):
    sub.add_argument("--config", type=str, default=None, help="key=value config file or run manifest")
    for name, parse, default, help_text in options:
        if parse in (_parse_floats, _parse_ints):
            sub.add_argument(f"--{name}", type=parse, default=None, help=help_text)
        else:
            sub.add_argument(f"--{name}", type=parse, default=None, help=help_text)


def _jsonable(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if isinstance(v, tuple):
            out[k] = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        else:
            out[k] = v
    return out


def _write_manifest(out_dir_or_file, command, cfg, seed, inputs, outputs, elapsed):
    manifest = RunManifest(
        command=command,
        config=_jsonable(cfg),
        seed=seed,
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        duration_s=elapsed,
    )
    if os.path.isdir(out_dir_or_file):
        path = os.path.join(out_dir_or_file, "run_manifest.json")
    else:
        path = str(out_dir_or_file) + ".manifest.json"
    manifest.write(path)


# ----------------------------------------------------------------- simulate


_SIMULATE_OPTS = _COMMON_MODEL + [
    ("store-N", int, 0, "store only the first k modes (0 = all)"),
    ("store-every", int, 1, "record every k-th step"),
    ("seed", int, 0, "random seed"),
    ("grid", _parse_ints, (), "also dump frames on this pixel grid"),
    ("out", str, None, "output directory"),
]


def _cmd_simulate(args):
    cfg = _resolve(_SIMULATE_OPTS, args)
    if not cfg["out"]:
        raise UsageError("simulate needs --out")
    with Stopwatch() as sw:
        traj = simulate(
            _build_model(cfg),
            _build_noise(cfg),
            Domain(cfg["d"], cfg["L"]),
            cfg["N"],
            cfg["T"],
            cfg["dt"],
            cfg["seed"],
            include_zero_mode=_zero_mode(cfg),
            store_modes=cfg["store_N"] or None,
            store_every=cfg["store_every"],
        )
        os.makedirs(cfg["out"], exist_ok=True)
        frames_io.save_trajectory(traj, cfg["out"], cfg["seed"], _model_desc(cfg))
        outputs = ["modes.bin", "modes_manifest.txt"]
        if cfg["grid"]:
            frames_io.save_frames(modes_to_grid(traj, cfg["grid"]), cfg["out"])
            outputs += ["manifest.txt", "frames.bin"]
    _write_manifest(cfg["out"], "simulate", cfg, cfg["seed"], [], outputs, sw.elapsed)
    print(f"wrote {', '.join(outputs)} to {cfg['out']}")
    return 0


# ----------------------------------------------------------------- estimate


_ESTIMATE_OPTS = [
    ("in", str, None, "trajectory directory (modes.bin)"),
    ("unknowns", str, "diffusion", "comma list: diffusion,linear,quadratic,cubic"),
    ("known", str, "", "comma list of name=intensity pairs held fixed"),
    ("alpha", float, 0.0, "spectral weighting exponent"),
    ("N", int, 0, "restrict to the first N observed modes (0 = all)"),
    ("t-start", float, -1.0, "estimation window start (-1 = trajectory start)"),
    ("t-end", float, -1.0, "estimation window end (-1 = trajectory end)"),
    ("out", str, "", "report path (default <in>/report.json)"),
]


def _parse_dictionary(unknowns: str, known: str) -> DriftDictionary:
    terms = []
    seen = set()
    for name in [s.strip() for s in unknowns.split(",") if s.strip()]:
        if name not in _TERM_NAMES:
            raise UsageError(f"unknown term name {name!r}; choose from {sorted(_TERM_NAMES)}")
        term = _TERM_NAMES[name]()
        term.known = False
        terms.append(term)
        seen.add(name)
    for pair in [s.strip() for s in known.split(",") if s.strip()]:
        if "=" not in pair:
            raise UsageError(f"--known entries must be name=value, got {pair!r}")
        name, value = pair.split("=", 1)
        name = name.strip()
        if name not in _TERM_NAMES:
            raise UsageError(f"unknown term name {name!r}; choose from {sorted(_TERM_NAMES)}")
        if name in seen:
            raise UsageError(f"term {name!r} listed both unknown and known")
        term = _TERM_NAMES[name]()
        term.known = True
        term.intensity = float(value)
        terms.append(term)
    diffusion = [t for t in terms if t.kind is DriftTermKind.DIFFUSION]
    if not diffusion:
        raise UsageError("the dictionary must contain the diffusion term")
    ordered = diffusion + [t for t in terms if t.kind is not DriftTermKind.DIFFUSION]
    return DriftDictionary(ordered)


def _cmd_estimate(args):
    cfg = _resolve(_ESTIMATE_OPTS, args)
    if not cfg["in"]:
        raise UsageError("estimate needs --in")
    if not os.path.isdir(cfg["in"]):
        raise FileNotFoundError(f"input directory not found: {cfg['in']}")
    with Stopwatch() as sw:
        traj = frames_io.load_trajectory(cfg["in"])
        dictionary = _parse_dictionary(cfg["unknowns"], cfg["known"])
        time_range = None
        if cfg["t_start"] >= 0 or cfg["t_end"] >= 0:
            t0 = cfg["t_start"] if cfg["t_start"] >= 0 else float(traj.times[0])
            t1 = cfg["t_end"] if cfg["t_end"] >= 0 else float(traj.times[-1])
            time_range = (t0, t1)
        problem = EstimationProblem(
            dictionary,
            weight_alpha=cfg["alpha"],
            n_modes=cfg["N"] or None,
            time_range=time_range,
        )
        result = estimate(traj, problem)
        report = result.to_report()
        out = cfg["out"] or os.path.join(cfg["in"], "report.json")
        frames_io.write_report(report, out)
    _write_manifest(out, "estimate", cfg, None, [cfg["in"]], [out], sw.elapsed)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


# ----------------------------------------------------------------- noise-id


_NOISE_ID_OPTS = [
    ("in", str, None, "trajectory directory"),
    ("N", int, 0, "restrict to the first N modes (0 = all)"),
    ("out", str, "", "report path (default <in>/noise_id.json)"),
]


def _cmd_noise_id(args):
    cfg = _resolve(_NOISE_ID_OPTS, args)
    if not cfg["in"]:
        raise UsageError("noise-id needs --in")
    if not os.path.isdir(cfg["in"]):
        raise FileNotFoundError(f"input directory not found: {cfg['in']}")
    with Stopwatch() as sw:
        traj = frames_io.load_trajectory(cfg["in"])
        if cfg["N"]:
            traj = traj.truncated(cfg["N"])
        sigma_hat, gamma_hat = identify_noise_parameters(traj)
        report = {"sigma_hat": sigma_hat, "gamma_hat": gamma_hat, "T": traj.T, "N": traj.basis.N}
        out = cfg["out"] or os.path.join(cfg["in"], "noise_id.json")
        frames_io.write_report(report, out)
    _write_manifest(out, "noise-id", cfg, None, [cfg["in"]], [out], sw.elapsed)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


# ----------------------------------------------------------------- studies


_RATES_OPTS = _COMMON_MODEL + [
    ("theta1-known", int, 1, "treat the linear reaction coefficient as known (1) or estimated (0)"),
    ("N-list", _parse_ints, (16, 32, 64, 128), "estimation mode counts"),
    ("replicates", int, 50, "Monte Carlo replicates"),
    ("seed", int, 0, "master seed"),
    ("alpha", float, 0.0, "spectral weighting exponent"),
    ("threads", int, 1, "replicate parallelism"),
    ("out", str, None, "CSV output path"),
]


def _rate_problem(cfg) -> EstimationProblem:
    terms = [DriftTerm(DriftTermKind.DIFFUSION, intensity=cfg["theta0"], known=False)]
    if cfg["model"] == "linear":
        terms.append(
            DriftTerm(
                DriftTermKind.POLY,
                power=1,
                intensity=cfg["theta1"],
                known=bool(cfg["theta1_known"]),
            )
        )
    return EstimationProblem(DriftDictionary(terms), weight_alpha=cfg["alpha"])


def _cmd_rates(args):
    cfg = _resolve(_RATES_OPTS, args)
    if not cfg["out"]:
        raise UsageError("rates needs --out")
    with Stopwatch() as sw:
        config = RateStudyConfig(
            generator=_build_generator(cfg),
            problems={"main": _rate_problem(cfg)},
            N_list=list(cfg["N_list"]),
            replicates=cfg["replicates"],
            seed=cfg["seed"],
        )
        result = run_rate_study(config, threads=cfg["threads"])
        result.to_csv(cfg["out"])
    _write_manifest(cfg["out"], "rates", cfg, cfg["seed"], [], [cfg["out"]], sw.elapsed)
    for c in result.curves:
        print(f"{c.problem}/{c.label}: slope {c.slope:+.3f} (stderr {c.slope_stderr:.3f})")
    return 0


_COVERAGE_OPTS = _COMMON_MODEL + [
    ("N-est", int, 64, "estimation mode count"),
    ("replicates", int, 200, "Monte Carlo replicates"),
    ("seed", int, 0, "master seed"),
    ("alpha", float, 0.0, "spectral weighting exponent"),
    ("threads", int, 1, "replicate parallelism"),
    ("out", str, None, "CSV output path"),
]


def _cmd_coverage(args):
    cfg = _resolve(_COVERAGE_OPTS, args)
    if not cfg["out"]:
        raise UsageError("coverage needs --out")
    with Stopwatch() as sw:
        problem = EstimationProblem(
            DriftDictionary([DriftTerm(DriftTermKind.DIFFUSION)]), weight_alpha=cfg["alpha"]
        )
        config = CoverageConfig(
            generator=_build_generator(cfg),
            problem=problem,
            N=cfg["N_est"],
            replicates=cfg["replicates"],
            seed=cfg["seed"],
        )
        result = run_coverage_study(config, threads=cfg["threads"])
        lines = ["# replicate,theta0_hat,ci_low,ci_high,covered"]
        for i, (est, (lo, hi)) in enumerate(zip(result.estimates, result.intervals)):
            lines.append(f"{i},{est!r},{lo!r},{hi!r},{int(lo <= result.truth <= hi)}")
        lines.append(f"# coverage={result.coverage!r} truth={result.truth!r}")
        with open(cfg["out"], "w") as fh:
            fh.write("\n".join(lines) + "\n")
    _write_manifest(cfg["out"], "coverage", cfg, cfg["seed"], [], [cfg["out"]], sw.elapsed)
    print(f"coverage: {result.coverage:.3f} (truth {result.truth})")
    return 0


_MISSPEC_OPTS = _COMMON_MODEL + [
    ("N-list", _parse_ints, (16, 32, 64, 128), "estimation mode counts"),
    ("replicates", int, 20, "Monte Carlo replicates"),
    ("seed", int, 0, "master seed"),
    ("alpha", float, 0.0, "spectral weighting exponent"),
    ("threads", int, 1, "replicate parallelism"),
    ("out", str, None, "CSV output path"),
]


def _cmd_misspec(args):
    cfg = _resolve(_MISSPEC_OPTS, args)
    if not cfg["out"]:
        raise UsageError("misspec needs --out")
    with Stopwatch() as sw:
        plain = EstimationProblem(
            DriftDictionary([DriftTerm(DriftTermKind.DIFFUSION)]), weight_alpha=cfg["alpha"]
        )
        config = RateStudyConfig(
            generator=_build_generator(cfg),
            problems={"plain": plain},
            N_list=list(cfg["N_list"]),
            replicates=cfg["replicates"],
            seed=cfg["seed"],
        )
        result = run_misspecification_study(config, threads=cfg["threads"])
        result.to_csv(cfg["out"])
    _write_manifest(cfg["out"], "misspec", cfg, cfg["seed"], [], [cfg["out"]], sw.elapsed)
    for c in result.curves:
        pred = c.predicted.exponent if c.predicted and c.predicted.exponent is not None else "n/a"
        print(f"{c.problem}/{c.label}: slope {c.slope:+.3f}, predicted {pred}")
    return 0


_COMPARE_OPTS = [
    ("in", str, None, "trajectory directory (activator data)"),
    ("fhn-du", float, 1.0, "activator diffusivity"),
    ("fhn-dv", float, 2.0, "inhibitor diffusivity"),
    ("fhn-k1", float, 3.0, "reaction rate k1"),
    ("fhn-k2", float, 1.0, "inhibition rate k2"),
    ("fhn-eps", float, 1.0, "inhibitor relaxation rate"),
    ("fhn-b", float, 1.0, "inhibitor drive"),
    ("fhn-u0", float, 1.0, "stable activator level"),
    ("fhn-a", float, 0.3, "threshold fraction"),
    ("N-grid", _parse_ints, (), "mode counts (default: geometric from 25)"),
    ("alpha", float, 0.0, "spectral weighting exponent"),
    ("out", str, None, "CSV output path"),
]


def _cmd_compare(args):
    cfg = _resolve(_COMPARE_OPTS, args)
    if not cfg["in"] or not cfg["out"]:
        raise UsageError("compare-estimators needs --in and --out")
    if not os.path.isdir(cfg["in"]):
        raise FileNotFoundError(f"input directory not found: {cfg['in']}")
    with Stopwatch() as sw:
        traj = frames_io.load_trajectory(cfg["in"])
        params = FHNParams(
            D_U=cfg["fhn_du"],
            D_V=cfg["fhn_dv"],
            k1=cfg["fhn_k1"],
            k2=cfg["fhn_k2"],
            eps=cfg["fhn_eps"],
            b=cfg["fhn_b"],
            u0=cfg["fhn_u0"],
            a=cfg["fhn_a"],
        )
        result = run_estimator_comparison(
            traj, params.dictionary(), N_grid=list(cfg["N_grid"]) or None, weight_alpha=cfg["alpha"]
        )
        result.to_csv(cfg["out"])
    _write_manifest(cfg["out"], "compare-estimators", cfg, None, [cfg["in"]], [cfg["out"]], sw.elapsed)
    print(f"wrote comparison over N = {result.N_grid} to {cfg['out']}")
    return 0


_SMOOTH_OPTS = [
    ("in", str, None, "frame-series directory"),
    ("sigmas", _parse_floats, (0.0,), "smoothing bandwidths (length units)"),
    ("N-est", int, 32, "estimation mode count"),
    ("alpha", float, 0.0, "spectral weighting exponent"),
    ("out", str, None, "CSV output path"),
]


def _cmd_smooth_check(args):
    cfg = _resolve(_SMOOTH_OPTS, args)
    if not cfg["in"] or not cfg["out"]:
        raise UsageError("smooth-check needs --in and --out")
    if not os.path.isdir(cfg["in"]):
        raise FileNotFoundError(f"input directory not found: {cfg['in']}")
    with Stopwatch() as sw:
        frames = frames_io.load_frames(cfg["in"])
        rows = run_smoothing_invariance(frames, cfg["sigmas"], cfg["N_est"], weight_alpha=cfg["alpha"])
        lines = ["# sigma_f,theta0_hat,rel_deviation"]
        lines += [f"{s!r},{t!r},{d!r}" for s, t, d in rows]
        with open(cfg["out"], "w") as fh:
            fh.write("\n".join(lines) + "\n")
    _write_manifest(cfg["out"], "smooth-check", cfg, None, [cfg["in"]], [cfg["out"]], sw.elapsed)
    for s, t, dev in rows:
        print(f"sigma_f={s}: theta0_hat={t:.6g} (deviation {dev:.3%})")
    return 0


_SUBCOMMANDS = {
    "simulate": (_cmd_simulate, _SIMULATE_OPTS, "simulate a model and dump the trajectory"),
    "estimate": (_cmd_estimate, _ESTIMATE_OPTS, "estimate drift parameters from a trajectory"),
    "noise-id": (_cmd_noise_id, _NOISE_ID_OPTS, "identify noise intensity and correlation"),
    "rates": (_cmd_rates, _RATES_OPTS, "Monte Carlo convergence-rate study"),
    "coverage": (_cmd_coverage, _COVERAGE_OPTS, "confidence-interval coverage study"),
    "misspec": (_cmd_misspec, _MISSPEC_OPTS, "misspecified-estimator rate study"),
    "compare-estimators": (_cmd_compare, _COMPARE_OPTS, "four nested diffusivity estimators"),
    "smooth-check": (_cmd_smooth_check, _SMOOTH_OPTS, "diffusivity invariance under smoothing"),
}


def build_parser() -> _Parser:
    parser = _Parser(prog="spdefit", description=__doc__)
    subs = parser.add_subparsers(dest="command")
    for name, (_fn, opts, help_text) in _SUBCOMMANDS.items():
        sub = subs.add_parser(name, help=help_text, description=help_text)
        _add_options(sub, opts)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        fn = _SUBCOMMANDS[args.command][0]
        return fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        BlowUpError,
        DegenerateDataError,
        RankDeficientError,
        ConvergenceError,
        FrameFormatError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
