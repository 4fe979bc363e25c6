"""Spectral increments of the fluctuation models driving the SPDE.

Four models are supported: space-time white noise, spatially correlated noise
obtained by damping mode k with lambda_k**(-gamma), and two Ornstein-Uhlenbeck
constructions that are correlated in time (the forcing itself is an OU process,
or its time integral is).

Randomness is counter-based: mode k of seed s draws from a Philox stream keyed
by (s, k), and step m consumes draw m of that stream.  Output is therefore
bitwise reproducible and independent of iteration order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.random import Philox
from scipy.signal import lfilter
from scipy.special import ndtri

from .spectral import SpectralBasis


class NoiseKind(Enum):
    WHITE = "white"
    SPATIAL_CORRELATED = "spatial"
    OU_FORCING = "ou-forcing"
    OU_INTEGRATED = "ou-integrated"


@dataclass
class NoiseSpec:
    """Fluctuation model with intensity and correlation parameters."""

    kind: NoiseKind
    sigma: float = 1.0
    gamma: float = 0.0  # spatial correlation exponent, SPATIAL_CORRELATED only
    mu: float = 0.0  # relaxation rate, OU kinds only

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = NoiseKind(self.kind)
        if self.sigma <= 0:
            raise ValueError("noise intensity sigma must be positive")
        if self.gamma < 0:
            raise ValueError("spatial correlation exponent gamma must be >= 0")
        if self.mu < 0:
            raise ValueError("relaxation rate mu must be >= 0")
        if self.gamma > 0 and self.kind not in (NoiseKind.SPATIAL_CORRELATED,):
            raise ValueError("gamma is only meaningful for spatially correlated noise")
        if self.mu > 0 and self.kind not in (NoiseKind.OU_FORCING, NoiseKind.OU_INTEGRATED):
            raise ValueError("mu is only meaningful for OU noise kinds")


_U64_SHIFT = np.uint64(11)
_U64_SCALE = 2.0**-53
_U64_OFFSET = 2.0**-54


def _mode_key(seed: int, mode: int) -> int:
    return (int(seed) % (1 << 64)) * (1 << 64) + mode


class NoiseStream:
    """Stateful per-seed noise source producing blocks of mode increments.

    Blocks are consumed sequentially in time; mode streams are independent, so
    any chunking of the step axis yields identical output.
    """

    def __init__(self, spec: NoiseSpec, basis: SpectralBasis, dt: float, seed: int, step_offset: int = 0):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if spec.kind is NoiseKind.SPATIAL_CORRELATED and spec.gamma > 0 and basis.includes_zero_mode:
            raise ValueError("spatially correlated noise with gamma > 0 is undefined on the zero mode")
        self.spec = spec
        self.basis = basis
        self.dt = float(dt)
        self.seed = int(seed)
        self._gens = [Philox(key=_mode_key(seed, k)) for k in range(basis.N)]
        if step_offset:
            if spec.kind in (NoiseKind.OU_FORCING, NoiseKind.OU_INTEGRATED):
                raise ValueError("step offsets require replaying the OU state; sample from step 0")
            for g in self._gens:
                g.advance(step_offset // 4)
                if step_offset % 4:
                    g.random_raw(step_offset % 4)

        if spec.kind in (NoiseKind.WHITE, NoiseKind.SPATIAL_CORRELATED):
            lam_pow = basis.eigenvalues ** (-spec.gamma) if spec.gamma != 0 else np.ones(basis.N)
            self._scale = spec.sigma * lam_pow * np.sqrt(dt)
        else:
            # Exact OU transition over one step; state starts at zero.
            mu = spec.mu
            self._rho = np.exp(-mu * dt)
            if mu > 0:
                self._innov = spec.sigma * np.sqrt((1.0 - np.exp(-2.0 * mu * dt)) / (2.0 * mu))
            else:
                self._innov = spec.sigma * np.sqrt(dt)
            self.state = np.zeros(basis.N)

    def _normals(self, n_steps: int) -> np.ndarray:
        z = np.empty((n_steps, self.basis.N))
        for k, gen in enumerate(self._gens):
            raw = gen.random_raw(n_steps)
            z[:, k] = (raw >> _U64_SHIFT).astype(np.float64) * _U64_SCALE + _U64_OFFSET
        return ndtri(z)

    def next_block(self, n_steps: int) -> np.ndarray:
        """Increments of the driving noise integral for the next n_steps steps."""
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        z = self._normals(n_steps)
        kind = self.spec.kind
        if kind in (NoiseKind.WHITE, NoiseKind.SPATIAL_CORRELATED):
            return z * self._scale
        path, _ = lfilter([self._innov], [1.0, -self._rho], z, axis=0, zi=(self._rho * self.state)[None, :])
        if kind is NoiseKind.OU_FORCING:
            # Left-point rule: the increment over [t_m, t_m + dt] is xi(t_m) * dt.
            left = np.vstack([self.state[None, :], path[:-1]])
            self.state = path[-1].copy()
            return left * self.dt
        # OU_INTEGRATED: the integral W itself follows the OU recursion.
        prev = np.vstack([self.state[None, :], path[:-1]])
        self.state = path[-1].copy()
        return path - prev


def sample_increments(
    spec: NoiseSpec,
    basis: SpectralBasis,
    dt: float,
    steps: int,
    seed: int,
    step_offset: int = 0,
) -> np.ndarray:
    """(steps, N) matrix of per-step noise increments, deterministic in (spec, seed).

    Entry (m, k) is the integral of the driving noise over step m for mode k
    (left-point value times dt for the OU-forcing model).  Fixed seeds give
    bitwise identical output regardless of how the steps are chunked.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return NoiseStream(spec, basis, dt, seed, step_offset=step_offset).next_block(steps)
