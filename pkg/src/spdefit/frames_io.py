"""On-disk formats: frame-series directories, mode dumps, reports, run manifests.

A frame series is a directory holding ``manifest.txt`` (line-based key=value)
and ``frames.bin`` (row-major little-endian float64, frame-major).  Trajectory
dumps add ``modes.bin`` with a ``modes_manifest.txt``.  Floats serialize as the
shortest round-trip decimal, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .spectral import Domain, GridFrameSeries, ModeTrajectory, build_basis

ARTIFACT_VERSION = 1


class FrameFormatError(RuntimeError):
    """A persisted artifact does not match the expected format."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_kv(path, pairs):
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write(f"{key}={value}\n")


def _read_kv(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FrameFormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _require_keys(manifest: dict, required, path) -> list[str]:
    missing = [k for k in required if k not in manifest]
    unknown = [k for k in manifest if k not in required]
    problems = []
    if missing:
        problems.append("missing keys: " + ", ".join(sorted(missing)))
    if unknown:
        problems.append("unknown keys: " + ", ".join(sorted(unknown)))
    if problems:
        raise FrameFormatError(f"malformed manifest {path}: " + "; ".join(problems))
    return []


_FRAME_KEYS = ("format_version", "d", "lengths", "grid_shape", "dt", "frame_count", "dtype")


def save_frames(frames: GridFrameSeries, path: str) -> None:
    """Write a frame-series directory (manifest.txt + frames.bin)."""
    os.makedirs(path, exist_ok=True)
    pairs = [
        ("format_version", ARTIFACT_VERSION),
        ("d", frames.domain.d),
        ("lengths", ",".join(_fmt(L) for L in frames.domain.lengths)),
        ("grid_shape", ",".join(str(n) for n in frames.grid_shape)),
        ("dt", _fmt(frames.dt)),
        ("frame_count", frames.frames.shape[0]),
        ("dtype", "f64le"),
    ]
    _write_kv(os.path.join(path, "manifest.txt"), pairs)
    frames.frames.astype("<f8").tofile(os.path.join(path, "frames.bin"))


def load_frames(path: str) -> GridFrameSeries:
    """Read a frame-series directory, validating manifest and byte counts."""
    mpath = os.path.join(path, "manifest.txt")
    if not os.path.isfile(mpath):
        raise FileNotFoundError(f"no manifest.txt in {path}")
    manifest = _read_kv(mpath)
    _require_keys(manifest, _FRAME_KEYS, mpath)
    if manifest["format_version"] != str(ARTIFACT_VERSION):
        raise FrameFormatError(
            f"manifest version mismatch: found {manifest['format_version']}, expected {ARTIFACT_VERSION}"
        )
    if manifest["dtype"] != "f64le":
        raise FrameFormatError(f"unsupported dtype {manifest['dtype']!r}")
    try:
        d = int(manifest["d"])
        lengths = tuple(float(x) for x in manifest["lengths"].split(","))
        grid_shape = tuple(int(x) for x in manifest["grid_shape"].split(","))
        dt = float(manifest["dt"])
        frame_count = int(manifest["frame_count"])
    except ValueError as exc:
        raise FrameFormatError(f"malformed manifest {mpath}: {exc}") from None
    try:
        domain = Domain(d, lengths)
    except ValueError as exc:
        raise FrameFormatError(f"invalid domain in {mpath}: {exc}") from None

    binpath = os.path.join(path, "frames.bin")
    expected = frame_count * int(np.prod(grid_shape)) * 8
    actual = os.path.getsize(binpath)
    if actual != expected:
        raise FrameFormatError(
            f"frames.bin has {actual} bytes, expected {expected} "
            f"({frame_count} frames of shape {grid_shape})"
        )
    data = np.fromfile(binpath, dtype="<f8").reshape((frame_count,) + grid_shape)
    return GridFrameSeries(domain, grid_shape, dt, data)


_MODE_KEYS = ("format_version", "N", "dt", "T", "seed", "model", "d", "lengths", "zero_mode")


def save_trajectory(traj: ModeTrajectory, path: str, seed: int, model_desc: str) -> None:
    """Dump a mode trajectory (modes.bin + modes_manifest.txt)."""
    os.makedirs(path, exist_ok=True)
    dt = traj.uniform_dt()
    pairs = [
        ("format_version", ARTIFACT_VERSION),
        ("N", traj.basis.N),
        ("dt", _fmt(dt)),
        ("T", _fmt(traj.T)),
        ("seed", int(seed)),
        ("model", model_desc),
        ("d", traj.basis.domain.d),
        ("lengths", ",".join(_fmt(L) for L in traj.basis.domain.lengths)),
        ("zero_mode", int(traj.basis.includes_zero_mode)),
    ]
    _write_kv(os.path.join(path, "modes_manifest.txt"), pairs)
    traj.coeffs.astype("<f8").tofile(os.path.join(path, "modes.bin"))


def load_trajectory(path: str) -> ModeTrajectory:
    mpath = os.path.join(path, "modes_manifest.txt")
    if not os.path.isfile(mpath):
        raise FileNotFoundError(f"no modes_manifest.txt in {path}")
    manifest = _read_kv(mpath)
    _require_keys(manifest, _MODE_KEYS, mpath)
    if manifest["format_version"] != str(ARTIFACT_VERSION):
        raise FrameFormatError(
            f"manifest version mismatch: found {manifest['format_version']}, expected {ARTIFACT_VERSION}"
        )
    try:
        N = int(manifest["N"])
        dt = float(manifest["dt"])
        T = float(manifest["T"])
        d = int(manifest["d"])
        lengths = tuple(float(x) for x in manifest["lengths"].split(","))
        zero_mode = bool(int(manifest["zero_mode"]))
    except ValueError as exc:
        raise FrameFormatError(f"malformed manifest {mpath}: {exc}") from None
    try:
        domain = Domain(d, lengths)
    except ValueError as exc:
        raise FrameFormatError(f"invalid domain in {mpath}: {exc}") from None

    binpath = os.path.join(path, "modes.bin")
    n_rows = int(round(T / dt)) + 1
    expected = n_rows * N * 8
    actual = os.path.getsize(binpath)
    if actual != expected:
        raise FrameFormatError(
            f"modes.bin has {actual} bytes, expected {expected} ({n_rows} rows of {N} modes)"
        )
    coeffs = np.fromfile(binpath, dtype="<f8").reshape(n_rows, N)
    basis = build_basis(domain, N, include_zero_mode=zero_mode)
    times = np.arange(n_rows) * dt
    return ModeTrajectory(basis, times, coeffs)


def write_report(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunManifest:
    """Record of one command invocation, sufficient to reproduce its outputs."""

    command: str
    config: dict
    seed: int | None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    artifact_version: int = ARTIFACT_VERSION
    duration_s: float | None = None

    def write(self, path: str) -> None:
        payload = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "artifact_version": self.artifact_version,
            "duration_s": self.duration_s,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_run_manifest(path: str) -> RunManifest:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("artifact_version") != ARTIFACT_VERSION:
        raise FrameFormatError(
            f"manifest version mismatch in {path}: found {payload.get('artifact_version')}, "
            f"expected {ARTIFACT_VERSION}"
        )
    return RunManifest(
        command=payload["command"],
        config=payload["config"],
        seed=payload.get("seed"),
        inputs=payload.get("inputs", []),
        outputs=payload.get("outputs", []),
        artifact_version=payload["artifact_version"],
        duration_s=payload.get("duration_s"),
    )


class Stopwatch:
    def __enter__(self):
        self._t0 = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.monotonic() - self._t0
        return False
