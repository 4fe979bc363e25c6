"""Periodic rectangle geometry, Laplacian eigenbasis, and grid <-> mode transforms.

The spatial setting is a d-dimensional rectangle (d = 1, 2, 3) with periodic
boundary conditions.  Fields are represented either on a uniform pixel grid or
by their coefficients against the real trigonometric eigenfunctions of the
negative Laplacian, ordered by eigenvalue.  All eigenvalues are taken
nonnegative (eigenvalues of -Laplacian) throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AliasingError(ValueError):
    """A wavevector is not representable on the requested grid."""


@dataclass
class Domain:
    """Periodic rectangular domain [0, L_1] x ... x [0, L_d]."""

    d: int
    lengths: tuple[float, ...]

    def __post_init__(self):
        self.lengths = tuple(float(L) for L in np.atleast_1d(self.lengths))
        if self.d not in (1, 2, 3):
            raise ValueError(f"spatial dimension must be 1, 2 or 3, got {self.d}")
        if len(self.lengths) != self.d:
            raise ValueError(f"expected {self.d} side lengths, got {len(self.lengths)}")
        if any(L <= 0 for L in self.lengths):
            raise ValueError(f"side lengths must be positive, got {self.lengths}")

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


_UNIT_BALL_VOLUME = {1: 2.0, 2: np.pi, 3: 4.0 * np.pi / 3.0}


def weyl_constant(domain: Domain) -> float:
    """Asymptotic growth constant of the sorted Laplacian eigenvalues.

    Returns the limit of lambda_k / k^(2/d), which for a periodic rectangle
    equals 4*pi^2 * (B_d * |D|)^(-2/d) with B_d the volume of the d-ball.
    """
    Bd = _UNIT_BALL_VOLUME[domain.d]
    return 4.0 * np.pi**2 * (Bd * domain.volume) ** (-2.0 / domain.d)


# Parity codes for basis rows: the constant mode and cosines share code 0.
COS = 0
SIN = 1


@dataclass
class SpectralBasis:
    """The first N real trigonometric eigenpairs of -Laplacian, eigenvalue-sorted.

    Each row k is either the constant mode (wavevector 0), a cosine mode
    sqrt(2/|D|) * cos(2*pi*m.x/L), or the matching sine mode.  Rows are sorted
    by eigenvalue, ties broken lexicographically on the wavevector with cosine
    before sine, so the ordering is deterministic across runs.
    """

    domain: Domain
    N: int
    wavevectors: np.ndarray  # (N, d) int
    eigenvalues: np.ndarray  # (N,) float, ascending
    parities: np.ndarray  # (N,) uint8, COS or SIN

    def __post_init__(self):
        if self.wavevectors.shape != (self.N, self.domain.d):
            raise ValueError("wavevector array shape mismatch")
        if self.eigenvalues.shape != (self.N,) or self.parities.shape != (self.N,):
            raise ValueError("eigenvalue/parity array shape mismatch")
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted ascending")

    @property
    def includes_zero_mode(self) -> bool:
        return bool((self.wavevectors[0] == 0).all()) if self.N else False

    def smallest_nonzero_eigenvalue(self) -> float:
        nz = self.eigenvalues[self.eigenvalues > 0]
        if nz.size == 0:
            raise ValueError("basis contains no nonzero eigenvalue")
        return float(nz[0])

    def truncated(self, N: int) -> "SpectralBasis":
        """First N rows of this basis (same ordering)."""
        if not 1 <= N <= self.N:
            raise ValueError(f"cannot truncate basis of size {self.N} to {N}")
        return SpectralBasis(
            self.domain,
            N,
            self.wavevectors[:N],
            self.eigenvalues[:N],
            self.parities[:N],
        )


def _canonical_wavevectors(d: int, bound: int) -> np.ndarray:
    """All m in Z^d with |m_i| <= bound, m != 0 and first nonzero entry > 0."""
    rng = np.arange(-bound, bound + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    m = np.stack([g.ravel() for g in grids], axis=1)
    nonzero = m != 0
    any_nz = nonzero.any(axis=1)
    lead = m[np.arange(len(m)), np.argmax(nonzero, axis=1)]
    return m[any_nz & (lead > 0)]


def _eigenvalue_of(m: np.ndarray, domain: Domain) -> np.ndarray:
    freq = 2.0 * np.pi * m / np.asarray(domain.lengths)
    return (freq**2).sum(axis=-1)


def build_basis(domain: Domain, N: int, include_zero_mode: bool = True) -> SpectralBasis:
    """Eigenpairs of -Laplacian on the periodic rectangle, N smallest eigenvalues.

    Every nonzero canonical wavevector contributes a cosine and a sine mode with
    the same eigenvalue sum((2*pi*m_i/L_i)^2).  The constant mode (eigenvalue 0)
    is prepended when include_zero_mode is set.
    """
    if N < 1:
        raise ValueError(f"mode count must be >= 1, got {N}")

    bound = max(2, int(np.ceil(N ** (1.0 / domain.d))))
    while True:
        canon = _canonical_wavevectors(domain.d, bound)
        lam = _eigenvalue_of(canon, domain)
        # Any wavevector outside the box has eigenvalue above this guard, so
        # modes below it are guaranteed complete.
        guard = (2.0 * np.pi * bound / max(domain.lengths)) ** 2
        n_safe = 2 * int((lam <= guard).sum()) + (1 if include_zero_mode else 0)
        if n_safe >= N:
            break
        bound *= 2

    n_pairs = len(canon)
    wavevectors = np.repeat(canon, 2, axis=0)
    eigenvalues = np.repeat(lam, 2)
    parities = np.tile(np.array([COS, SIN], dtype=np.uint8), n_pairs)
    if include_zero_mode:
        wavevectors = np.vstack([np.zeros((1, domain.d), dtype=canon.dtype), wavevectors])
        eigenvalues = np.concatenate([[0.0], eigenvalues])
        parities = np.concatenate([[COS], parities]).astype(np.uint8)

    # Sort by (eigenvalue, wavevector lexicographic, cosine first).
    keys = [parities] + [wavevectors[:, i] for i in reversed(range(domain.d))] + [eigenvalues]
    order = np.lexsort(tuple(keys))[:N]
    return SpectralBasis(
        domain,
        N,
        np.ascontiguousarray(wavevectors[order]),
        np.ascontiguousarray(eigenvalues[order]),
        np.ascontiguousarray(parities[order]),
    )


def apply_fractional_laplacian(coeffs: np.ndarray, basis: SpectralBasis, exponent: float) -> np.ndarray:
    """Multiply each mode coefficient by lambda_k**exponent.

    Negative exponents require the zero mode to be absent (lambda = 0 is not
    invertible).  The exponent 0 is the identity.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.N:
        raise ValueError(f"coefficient axis has length {coeffs.shape[-1]}, basis has {basis.N}")
    if exponent == 0.0:
        return coeffs.copy()
    if exponent < 0.0 and basis.includes_zero_mode:
        raise ValueError("negative Laplacian power is undefined on the zero mode")
    return coeffs * basis.eigenvalues**exponent


@dataclass
class GridFrameSeries:
    """Time series of fields sampled on a uniform pixel grid."""

    domain: Domain
    grid_shape: tuple[int, ...]
    dt: float
    frames: np.ndarray  # (M+1, n_1, ..., n_d)

    def __post_init__(self):
        self.grid_shape = tuple(int(n) for n in self.grid_shape)
        if len(self.grid_shape) != self.domain.d or any(n < 1 for n in self.grid_shape):
            raise ValueError(f"invalid grid shape {self.grid_shape} for d={self.domain.d}")
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != self.domain.d + 1 or self.frames.shape[1:] != self.grid_shape:
            raise ValueError(f"frame array shape {self.frames.shape} does not match grid {self.grid_shape}")
        if self.frames.shape[0] < 2:
            raise ValueError("need at least two frames")
        if self.dt <= 0:
            raise ValueError("frame spacing must be positive")
        if not np.isfinite(self.frames).all():
            raise ValueError("frames contain non-finite values")

    @property
    def pixel_sizes(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.domain.lengths, self.grid_shape))


@dataclass
class ModeTrajectory:
    """Time series of the first N spectral coefficients of a field."""

    basis: SpectralBasis
    times: np.ndarray  # (M+1,)
    coeffs: np.ndarray  # (M+1, N)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 2 or self.coeffs.shape != (self.times.size, self.basis.N):
            raise ValueError(
                f"coefficient array shape {self.coeffs.shape} does not match "
                f"{self.times.size} times x {self.basis.N} modes"
            )
        if self.times.size < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing with at least two points")
        if not np.isfinite(self.coeffs).all():
            raise ValueError("coefficients contain non-finite values")

    @property
    def T(self) -> float:
        return float(self.times[-1] - self.times[0])

    def uniform_dt(self) -> float:
        steps = np.diff(self.times)
        dt = float(steps[0])
        if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
            raise ValueError("trajectory does not have a uniform time grid")
        return dt

    def truncated(self, N: int) -> "ModeTrajectory":
        return ModeTrajectory(self.basis.truncated(N), self.times, self.coeffs[:, :N])


class ModeGridTransform:
    """Cached exchange between mode coefficients and values on a uniform grid.

    The rectangle-rule quadrature underlying the projection is exact for
    trigonometric polynomials below the Nyquist limit, which requires every
    basis wavevector to satisfy |m_i| < n_i / 2.
    """

    def __init__(self, basis: SpectralBasis, grid_shape):
        grid_shape = tuple(int(n) for n in grid_shape)
        if len(grid_shape) != basis.domain.d:
            raise ValueError(f"grid shape {grid_shape} has wrong dimension for d={basis.domain.d}")
        m = basis.wavevectors
        limits = np.array(grid_shape)
        bad = np.abs(m) >= limits / 2.0
        if bad.any():
            offender = m[bad.any(axis=1)][0]
            raise AliasingError(
                f"wavevector {tuple(offender)} is not representable on grid {grid_shape}"
            )
        self.basis = basis
        self.grid_shape = grid_shape
        self.ntot = int(np.prod(grid_shape))
        vol = basis.domain.volume
        self._cell = vol / self.ntot  # prod of pixel sizes
        self._pair_amp = np.sqrt(2.0 / vol)

        # Group basis rows by canonical wavevector; a truncated basis may hold a
        # cosine without its sine partner, so missing columns map to -1.
        nonzero = ~np.all(m == 0, axis=1)
        self._zero_col = -1 if nonzero.all() else int(np.flatnonzero(~nonzero)[0])
        uniq, inverse = np.unique(m[nonzero], axis=0, return_inverse=True)
        cols = np.flatnonzero(nonzero)
        cos_col = np.full(len(uniq), -1, dtype=int)
        sin_col = np.full(len(uniq), -1, dtype=int)
        for col, u in zip(cols, inverse):
            if basis.parities[col] == COS:
                cos_col[u] = col
            else:
                sin_col[u] = col
        self._cos_col, self._sin_col = cos_col, sin_col
        self._idx_pos = np.ravel_multi_index((uniq % limits).T, grid_shape)
        self._idx_neg = np.ravel_multi_index(((-uniq) % limits).T, grid_shape)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate sum_k c_k Phi_k on the grid for a batch of coefficient rows."""
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        B = coeffs.shape[0]
        spec = np.zeros((B, self.ntot), dtype=complex)
        a = self._gather(coeffs, self._cos_col)
        b = self._gather(coeffs, self._sin_col)
        z = (0.5 * self._pair_amp * self.ntot) * (a - 1j * b)
        spec[:, self._idx_pos] = z
        spec[:, self._idx_neg] = np.conj(z)
        if self._zero_col >= 0:
            spec[:, 0] = coeffs[:, self._zero_col] * self.ntot / np.sqrt(self.basis.domain.volume)
        fields = np.fft.ifftn(spec.reshape((B,) + self.grid_shape), axes=range(1, 1 + len(self.grid_shape)))
        return fields.real

    def project(self, fields: np.ndarray) -> np.ndarray:
        """Rectangle-rule quadrature of each field against every basis function."""
        fields = np.asarray(fields, dtype=float)
        single = fields.ndim == len(self.grid_shape)
        if single:
            fields = fields[None]
        if fields.shape[1:] != self.grid_shape:
            raise ValueError(f"field shape {fields.shape[1:]} does not match grid {self.grid_shape}")
        spec = np.fft.fftn(fields, axes=range(1, fields.ndim)).reshape(fields.shape[0], self.ntot)
        z = spec[:, self._idx_pos]
        scale = self._pair_amp * self._cell
        coeffs = np.zeros((fields.shape[0], self.basis.N))
        self._scatter(coeffs, self._cos_col, scale * z.real)
        self._scatter(coeffs, self._sin_col, -scale * z.imag)
        if self._zero_col >= 0:
            coeffs[:, self._zero_col] = spec[:, 0].real * self._cell / np.sqrt(self.basis.domain.volume)
        return coeffs[0] if single else coeffs

    @staticmethod
    def _gather(coeffs, cols):
        out = coeffs[:, np.where(cols >= 0, cols, 0)]
        out[:, cols < 0] = 0.0
        return out

    @staticmethod
    def _scatter(coeffs, cols, vals):
        present = cols >= 0
        coeffs[:, cols[present]] = vals[:, present]


_DEFAULT_CHUNK_FLOATS = 1 << 23


def project_frames_to_modes(frames: GridFrameSeries, basis: SpectralBasis) -> ModeTrajectory:
    """Discrete quadrature of every frame against the first N eigenfunctions."""
    if basis.N > np.prod(frames.grid_shape):
        raise ValueError("more modes requested than grid points")
    tf = ModeGridTransform(basis, frames.grid_shape)
    n_frames = frames.frames.shape[0]
    chunk = max(1, _DEFAULT_CHUNK_FLOATS // tf.ntot)
    coeffs = np.empty((n_frames, basis.N))
    for start in range(0, n_frames, chunk):
        stop = min(start + chunk, n_frames)
        coeffs[start:stop] = tf.project(frames.frames[start:stop])
    times = np.arange(n_frames) * frames.dt
    return ModeTrajectory(basis, times, coeffs)


def modes_to_grid(traj: ModeTrajectory, grid_shape) -> GridFrameSeries:
    """Pointwise synthesis of the truncated field on a uniform grid."""
    tf = ModeGridTransform(traj.basis, grid_shape)
    dt = traj.uniform_dt()
    n_frames = traj.coeffs.shape[0]
    chunk = max(1, _DEFAULT_CHUNK_FLOATS // tf.ntot)
    frames = np.empty((n_frames,) + tf.grid_shape)
    for start in range(0, n_frames, chunk):
        stop = min(start + chunk, n_frames)
        frames[start:stop] = tf.synthesize(traj.coeffs[start:stop])
    return GridFrameSeries(traj.basis.domain, tf.grid_shape, dt, frames)
