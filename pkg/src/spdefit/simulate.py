"""Drift models and spectral time integration of the SPDE.

The field evolves as  dX = (theta_0 * Laplacian(X) + sum_i theta_i F_i(X) + F_*(X)) dt + dW
in mode coordinates.  Diffusion is treated implicitly (division by
1 + theta_0 * lambda_k * dt), every other term explicitly at the left endpoint;
nonlinear terms are evaluated pseudospectrally on a dealiased grid.  The
activator-inhibitor system is expressed through the same machinery: the
inhibitor is a causal exponential convolution of the activator history and
enters the activator equation as a drift term.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import lfilter

from .noise import NoiseSpec, NoiseStream
from .spectral import (
    AliasingError,
    Domain,
    GridFrameSeries,
    ModeGridTransform,
    ModeTrajectory,
    SpectralBasis,
    build_basis,
)


class BlowUpError(RuntimeError):
    """The integration left the configured magnitude bound."""

    def __init__(self, step: int, value: float, limit: float, context: str = ""):
        prefix = f"{context}: " if context else ""
        super().__init__(
            f"{prefix}simulation blew up at step {step}: max |coefficient| = {value:.3e} "
            f"exceeds {limit:.3e}"
        )
        self.step = step
        self.value = value
        self.limit = limit


class DriftTermKind(Enum):
    DIFFUSION = "diffusion"
    POLY = "poly"
    POINTWISE_FHN_F1 = "fhn_f1"
    POINTWISE_FHN_F2 = "fhn_f2"
    ADVECTION = "advection"
    INHIBITOR = "inhibitor"
    FRACTIONAL_DIFFUSION = "fractional_diffusion"


@dataclass
class VelocityField:
    """Periodic velocity field with per-component constant and cosine parts.

    Component i is v_i(x) = constant[i]
    + cos_amplitude[i] * cos(2*pi*cos_wavenumber[i]*x_j / L_j) where
    j = cos_axis[i].  A nonzero cosine part makes the field spatially varying
    (and compressible when j == i), which is what actually perturbs diffusivity
    estimation; a constant field is skew-adjoint against the Laplacian and
    leaves the estimator unbiased.
    """

    constant: tuple[float, ...]
    cos_amplitude: tuple[float, ...] | None = None
    cos_axis: tuple[int, ...] | None = None
    cos_wavenumber: tuple[int, ...] | None = None

    def __post_init__(self):
        self.constant = tuple(float(c) for c in np.atleast_1d(self.constant))
        d = len(self.constant)
        if self.cos_amplitude is None:
            self.cos_amplitude = (0.0,) * d
        self.cos_amplitude = tuple(float(a) for a in np.atleast_1d(self.cos_amplitude))
        if self.cos_axis is None:
            self.cos_axis = tuple((i + 1) % d for i in range(d))
        self.cos_axis = tuple(int(a) for a in np.atleast_1d(self.cos_axis))
        if self.cos_wavenumber is None:
            self.cos_wavenumber = (1,) * d
        self.cos_wavenumber = tuple(int(q) for q in np.atleast_1d(self.cos_wavenumber))
        if not len(self.cos_amplitude) == len(self.cos_axis) == len(self.cos_wavenumber) == d:
            raise ValueError("velocity component lists must all have length d")
        if any(not 0 <= a < d for a in self.cos_axis):
            raise ValueError(f"cosine axes must lie in 0..{d - 1}")
        if any(q < 1 for q in self.cos_wavenumber):
            raise ValueError("cosine wavenumbers must be >= 1")

    @property
    def max_wavenumber(self) -> int:
        return max(self.cos_wavenumber)


@dataclass
class DriftTerm:
    """One dictionary entry F_i with intensity theta_i and a known/unknown flag."""

    kind: DriftTermKind
    intensity: float = 0.0
    known: bool = False
    power: int | None = None  # POLY
    u0: float | None = None  # pointwise FHN terms
    velocity: VelocityField | None = None  # ADVECTION
    inhibitor_dv: float | None = None  # INHIBITOR
    inhibitor_eps: float | None = None  # INHIBITOR
    alpha: float | None = None  # FRACTIONAL_DIFFUSION

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = DriftTermKind(self.kind)
        k = self.kind
        if k is DriftTermKind.POLY:
            if self.power is None or int(self.power) < 1:
                raise ValueError("polynomial term needs a power >= 1")
            self.power = int(self.power)
        elif k in (DriftTermKind.POINTWISE_FHN_F1, DriftTermKind.POINTWISE_FHN_F2):
            if self.u0 is None or self.u0 <= 0:
                raise ValueError("pointwise activator terms need u0 > 0")
        elif k is DriftTermKind.ADVECTION:
            if self.velocity is None:
                raise ValueError("advection term needs a velocity field")
        elif k is DriftTermKind.INHIBITOR:
            if self.inhibitor_dv is None or self.inhibitor_eps is None:
                raise ValueError("inhibitor term needs its diffusivity and relaxation rate")
            if self.inhibitor_dv < 0 or self.inhibitor_eps <= 0:
                raise ValueError("inhibitor parameters must satisfy D_V >= 0, eps > 0")
        elif k is DriftTermKind.FRACTIONAL_DIFFUSION:
            if self.alpha is None or not 0 < self.alpha < 2:
                raise ValueError("fractional diffusion exponent must lie in (0, 2)")

    @property
    def signature(self) -> tuple:
        if self.kind is DriftTermKind.POLY:
            return (self.kind, self.power)
        if self.kind is DriftTermKind.FRACTIONAL_DIFFUSION:
            return (self.kind, self.alpha)
        return (self.kind,)

    @property
    def label(self) -> str:
        if self.kind is DriftTermKind.POLY:
            return f"poly{self.power}"
        return self.kind.value


@dataclass
class DriftDictionary:
    """Ordered drift terms; index 0 is the diffusion term.

    ``fixed_terms`` holds extra components with known intensities that are never
    estimated (the F_* part of the model).
    """

    terms: list[DriftTerm]
    fixed_terms: list[DriftTerm] | None = None

    def __post_init__(self):
        if not self.terms or self.terms[0].kind is not DriftTermKind.DIFFUSION:
            raise ValueError("the first dictionary term must be the diffusion term")
        if sum(t.kind is DriftTermKind.DIFFUSION for t in self.terms) != 1:
            raise ValueError("exactly one diffusion term is allowed")
        sigs = [t.signature for t in self.terms]
        if len(set(sigs)) != len(sigs):
            raise ValueError("dictionary terms must be pairwise distinct")
        if self.fixed_terms is None:
            self.fixed_terms = []

    @property
    def theta0(self) -> float:
        return self.terms[0].intensity

    def unknown_terms(self) -> list[DriftTerm]:
        return [t for t in self.terms if not t.known]

    def known_contributions(self) -> list[DriftTerm]:
        return [t for t in self.terms if t.known] + list(self.fixed_terms)


@dataclass
class FHNParams:
    """Activator-inhibitor parameters (FitzHugh-Nagumo type).

    The activator U diffuses with D_U, reacts through the bistable cubic
    k1*U*(u0-U)*(U-u0*a), and is inhibited by -k2*V; the inhibitor V diffuses
    with D_V and relaxes at rate eps toward b*U.  Noise drives U only.
    """

    D_U: float
    D_V: float
    k1: float
    k2: float
    eps: float
    b: float
    u0: float
    a: float

    def __post_init__(self):
        for name in ("D_U", "D_V", "k1", "k2", "eps", "b", "u0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.a < 1:
            raise ValueError("threshold fraction a must lie in (0, 1)")

    def dictionary(self, known: bool = False) -> DriftDictionary:
        """Linear-in-parameters form: theta = (D_U, k1*u0*a, k1, k2*eps*b)."""
        return DriftDictionary(
            [
                DriftTerm(DriftTermKind.DIFFUSION, intensity=self.D_U, known=known),
                DriftTerm(DriftTermKind.POINTWISE_FHN_F1, intensity=self.k1 * self.u0 * self.a, known=known, u0=self.u0),
                DriftTerm(DriftTermKind.POINTWISE_FHN_F2, intensity=self.k1, known=known, u0=self.u0),
                DriftTerm(
                    DriftTermKind.INHIBITOR,
                    intensity=self.k2 * self.eps * self.b,
                    known=known,
                    inhibitor_dv=self.D_V,
                    inhibitor_eps=self.eps,
                ),
            ]
        )


_DIAGONAL_KINDS = (DriftTermKind.DIFFUSION, DriftTermKind.FRACTIONAL_DIFFUSION)


def _is_diagonal(term: DriftTerm) -> bool:
    return term.kind in _DIAGONAL_KINDS or (term.kind is DriftTermKind.POLY and term.power == 1)


def _diagonal_multiplier(term: DriftTerm, basis: SpectralBasis) -> np.ndarray:
    lam = basis.eigenvalues
    if term.kind is DriftTermKind.DIFFUSION:
        return -lam
    if term.kind is DriftTermKind.FRACTIONAL_DIFFUSION:
        return -(lam ** (term.alpha / 2.0))
    return np.ones_like(lam)  # POLY(1)


def _pointwise_fn(term: DriftTerm):
    if term.kind is DriftTermKind.POLY:
        j = term.power
        return lambda u: u**j
    if term.kind is DriftTermKind.POINTWISE_FHN_F1:
        u0 = term.u0
        return lambda u: -u * (u0 - u)
    if term.kind is DriftTermKind.POINTWISE_FHN_F2:
        u0 = term.u0
        return lambda u: u * u * (u0 - u)
    raise ValueError(f"{term.label} is not a pointwise term")


def _grid_requirement(term: DriftTerm, basis: SpectralBasis) -> np.ndarray:
    """Minimal grid (per axis) for alias-free evaluation of the term."""
    mmax = np.abs(basis.wavevectors).max(axis=0) if basis.N else np.zeros(basis.domain.d, int)
    if term.kind is DriftTermKind.POLY:
        degree = term.power
    elif term.kind in (DriftTermKind.POINTWISE_FHN_F1, DriftTermKind.POINTWISE_FHN_F2):
        degree = 3
    elif term.kind is DriftTermKind.ADVECTION:
        # Field times a single-harmonic velocity, then one derivative.
        return 2 * mmax + term.velocity.max_wavenumber + 1
    else:
        return np.maximum(2 * mmax + 1, 1)
    return (degree + 1) * mmax + 1


def dealias_grid_shape(basis: SpectralBasis, terms) -> tuple[int, ...]:
    """Grid accommodating every term's pseudospectral product without aliasing."""
    req = np.ones(basis.domain.d, dtype=int)
    for term in terms:
        req = np.maximum(req, _grid_requirement(term, basis))
    return tuple(int(next_fast_len(max(int(n), 8))) for n in req)


class _TermEvaluator:
    """Caches the grid transform and per-term grid data for one (dictionary, basis)."""

    def __init__(self, terms: list[DriftTerm], basis: SpectralBasis, grid_shape=None):
        self.basis = basis
        self.terms = list(terms)
        needs_grid = [t for t in self.terms if not _is_diagonal(t) and t.kind is not DriftTermKind.INHIBITOR]
        self.transform = None
        if needs_grid:
            if grid_shape is None:
                grid_shape = dealias_grid_shape(basis, needs_grid)
            else:
                for t in needs_grid:
                    if np.any(np.asarray(grid_shape) < _grid_requirement(t, basis)):
                        raise AliasingError(
                            f"quadrature grid {tuple(grid_shape)} is below the dealiasing "
                            f"requirement for term '{t.label}'"
                        )
            self.transform = ModeGridTransform(basis, grid_shape)
            self._vel_cache = {}

    def _velocity_grid(self, term: DriftTerm):
        key = id(term.velocity)
        if key not in self._vel_cache:
            domain = self.basis.domain
            shape = self.transform.grid_shape
            axes_coords = [
                np.arange(n) * (L / n) for n, L in zip(shape, domain.lengths)
            ]
            comps = []
            vel = term.velocity
            for i in range(domain.d):
                j = vel.cos_axis[i]
                q = vel.cos_wavenumber[i]
                coord = axes_coords[j].reshape([-1 if ax == j else 1 for ax in range(domain.d)])
                comps.append(
                    vel.constant[i]
                    + vel.cos_amplitude[i] * np.cos(2 * np.pi * q * coord / domain.lengths[j])
                )
            freqs = []
            for i, (n, L) in enumerate(zip(shape, domain.lengths)):
                f = np.fft.fftfreq(n, d=1.0 / n) * (2 * np.pi / L)
                freqs.append(f.reshape([-1 if ax == i else 1 for ax in range(domain.d)]))
            self._vel_cache[key] = (comps, freqs)
        return self._vel_cache[key]

    def term_block(self, term: DriftTerm, coeffs: np.ndarray, grid: np.ndarray | None = None) -> np.ndarray:
        """Mode coefficients of F(X_N) for a (B, N) block of states.

        ``grid`` may carry the already synthesized fields to share work between
        terms evaluated on the same states.
        """
        coeffs = np.atleast_2d(coeffs)
        if _is_diagonal(term):
            return coeffs * _diagonal_multiplier(term, self.basis)
        if term.kind is DriftTermKind.INHIBITOR:
            raise ValueError("inhibitor values come from the history recursion, not a single state")
        if grid is None:
            grid = self.transform.synthesize(coeffs)
        if term.kind is DriftTermKind.ADVECTION:
            comps, freqs = self._velocity_grid(term)
            axes = tuple(range(1, grid.ndim))
            div_hat = np.zeros(grid.shape, dtype=complex)
            for i in range(self.basis.domain.d):
                div_hat += 1j * freqs[i] * np.fft.fftn(grid * comps[i], axes=axes)
            div = np.fft.ifftn(div_hat, axes=axes).real
            return self.transform.project(-div)
        return self.transform.project(_pointwise_fn(term)(grid))

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray | None:
        if self.transform is None:
            return None
        return self.transform.synthesize(np.atleast_2d(coeffs))


def inhibitor_convolution(U: ModeTrajectory, D_V: float, eps: float, basis: SpectralBasis | None = None) -> ModeTrajectory:
    """Causal exponential convolution of the activator history, with F_3 sign.

    Mode k of the output is -g_k where g advances by the exact recursion
    g(t+dt) = exp(-a*dt) g(t) + u(t) (1 - exp(-a*dt)) / a,  a = D_V*lambda_k + eps,
    i.e. the integrand is frozen at the left endpoint of each step.
    """
    basis = basis or U.basis
    if eps <= 0 or D_V < 0:
        raise ValueError("convolution requires eps > 0 and D_V >= 0")
    dt = U.uniform_dt()
    a = D_V * basis.eigenvalues + eps
    rho = np.exp(-a * dt)
    c = -np.expm1(-a * dt) / a
    g = np.empty_like(U.coeffs)
    for k in range(basis.N):
        # g[m] = rho*g[m-1] + c*u[m-1]
        g[:, k] = lfilter([0.0, c[k]], [1.0, -rho[k]], U.coeffs[:, k])
    return ModeTrajectory(basis, U.times, -g)


def evaluate_drift_term(
    term: DriftTerm,
    state: np.ndarray,
    history: ModeTrajectory | None,
    basis: SpectralBasis,
    quad_grid=None,
) -> np.ndarray:
    """Mode coefficients of F(X_N) for a single state (inhibitor: history suffix)."""
    if term.kind is DriftTermKind.INHIBITOR:
        if history is None:
            raise ValueError("inhibitor evaluation needs the activator history")
        conv = inhibitor_convolution(history, term.inhibitor_dv, term.inhibitor_eps, basis)
        return conv.coeffs[-1]
    ev = _TermEvaluator([term], basis, grid_shape=quad_grid)
    return ev.term_block(term, np.asarray(state, dtype=float))[0]


class _InhibitorState:
    def __init__(self, term: DriftTerm, basis: SpectralBasis, dt: float):
        a = term.inhibitor_dv * basis.eigenvalues + term.inhibitor_eps
        self.rho = np.exp(-a * dt)
        self.c = -np.expm1(-a * dt) / a
        self.g = np.zeros(basis.N)

    def advance(self, u_left: np.ndarray):
        self.g = self.rho * self.g + self.c * u_left


def simulate(
    model: DriftDictionary | FHNParams,
    noise: NoiseSpec,
    domain: Domain,
    N_sim: int,
    T: float,
    dt: float,
    seed: int,
    initial: np.ndarray | None = None,
    *,
    include_zero_mode: bool = True,
    store_modes: int | None = None,
    store_every: int = 1,
    blowup_limit: float = 1e12,
    increments: np.ndarray | None = None,
    keep_inhibitor: bool = False,
) -> ModeTrajectory | tuple[ModeTrajectory, ModeTrajectory]:
    """Semi-implicit Euler-Maruyama integration in mode space.

    The linear diffusion part is implicit, every other drift term explicit at
    the left endpoint, and the per-step noise comes from counter-based streams
    (or from ``increments``, an (M, N_sim) array, when supplied).  The first
    ``store_modes`` coefficients are recorded every ``store_every`` steps.
    With ``keep_inhibitor`` an activator-inhibitor run also returns the
    inhibitor trajectory.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    M = int(round(T / dt))
    if M < 1 or not np.isclose(M * dt, T, rtol=1e-8):
        raise ValueError(f"T = {T} is not an integer number of steps of dt = {dt}")
    if M % store_every:
        raise ValueError("store_every must divide the number of steps")

    fhn = model if isinstance(model, FHNParams) else None
    dictionary = fhn.dictionary() if fhn else model
    if keep_inhibitor and fhn is None:
        raise ValueError("keep_inhibitor only applies to activator-inhibitor runs")
    if dictionary.theta0 < 0:
        raise ValueError("simulated models must have nonnegative diffusivity")

    basis = build_basis(domain, N_sim, include_zero_mode)
    store_modes = N_sim if store_modes is None else int(store_modes)
    if not 1 <= store_modes <= N_sim:
        raise ValueError("store_modes must lie in 1..N_sim")

    explicit = [t for t in dictionary.terms[1:]] + list(dictionary.fixed_terms)
    diag_mult = np.zeros(basis.N)
    have_diag = False
    pointwise = []
    inhibitors = []
    for t in explicit:
        if _is_diagonal(t):
            diag_mult += t.intensity * _diagonal_multiplier(t, basis)
            have_diag = True
        elif t.kind is DriftTermKind.INHIBITOR:
            inhibitors.append((t.intensity, _InhibitorState(t, basis, dt)))
        else:
            pointwise.append(t)
    evaluator = _TermEvaluator(pointwise, basis) if pointwise else None

    divisor = 1.0 + dictionary.theta0 * basis.eigenvalues * dt

    X = np.zeros(basis.N) if initial is None else np.array(initial, dtype=float)
    if X.shape != (basis.N,):
        raise ValueError(f"initial condition must have {basis.N} coefficients")

    n_store = M // store_every
    out = np.empty((n_store + 1, store_modes))
    out[0] = X[:store_modes]
    v_out = None
    if keep_inhibitor:
        v_out = np.empty((n_store + 1, store_modes))
        v_out[0] = 0.0

    stream = None
    if increments is None:
        stream = NoiseStream(noise, basis, dt, seed)
    else:
        increments = np.asarray(increments, dtype=float)
        if increments.shape != (M, basis.N):
            raise ValueError(f"increments must have shape ({M}, {basis.N})")

    chunk = max(1, min(M, (1 << 22) // basis.N))
    step = 0
    while step < M:
        n = min(chunk, M - step)
        dW = stream.next_block(n) if stream is not None else increments[step : step + n]
        for i in range(n):
            drift = diag_mult * X if have_diag else 0.0
            if evaluator is not None:
                grid = evaluator.synthesize(X)
                acc = None
                for t in pointwise:
                    contrib = t.intensity * evaluator.term_block(t, X, grid=grid)[0]
                    acc = contrib if acc is None else acc + contrib
                drift = drift + acc
            for intensity, inh in inhibitors:
                drift = drift - intensity * inh.g
            X_new = (X + dt * drift + dW[i]) / divisor
            for _, inh in inhibitors:
                inh.advance(X)
            X = X_new
            step += 1
            peak = np.abs(X).max()
            if not np.isfinite(peak) or peak > blowup_limit:
                raise BlowUpError(step, float(peak), blowup_limit)
            if step % store_every == 0:
                out[step // store_every] = X[:store_modes]
                if v_out is not None:
                    v_out[step // store_every] = fhn.eps * fhn.b * inhibitors[0][1].g[:store_modes]

    times = np.arange(n_store + 1) * (dt * store_every)
    traj = ModeTrajectory(basis.truncated(store_modes), times, out)
    if keep_inhibitor:
        return traj, ModeTrajectory(basis.truncated(store_modes), times, v_out)
    return traj


def smooth_frames(frames: GridFrameSeries, bandwidth: float) -> GridFrameSeries:
    """Periodic Gaussian convolution: mode k is damped by exp(-lambda_k * s^2 / 2)."""
    if bandwidth < 0:
        raise ValueError("smoothing bandwidth must be >= 0")
    if bandwidth == 0.0:
        return GridFrameSeries(frames.domain, frames.grid_shape, frames.dt, frames.frames.copy())
    d = frames.domain.d
    lam = np.zeros(frames.grid_shape)
    for i, (n, L) in enumerate(zip(frames.grid_shape, frames.domain.lengths)):
        f = np.fft.fftfreq(n, d=1.0 / n) * (2 * np.pi / L)
        lam = lam + (f**2).reshape([-1 if ax == i else 1 for ax in range(d)])
    damp = np.exp(-lam * bandwidth**2 / 2.0)
    axes = tuple(range(1, d + 1))
    spec = np.fft.fftn(frames.frames, axes=axes) * damp
    smoothed = np.fft.ifftn(spec, axes=axes).real
    return GridFrameSeries(frames.domain, frames.grid_shape, frames.dt, smoothed)
