"""Asymptotic variance, confidence intervals, and convergence-rate predictions.

The diffusivity estimator on N observed modes is asymptotically normal with
variance 2*theta0*(d+2) / (T*Lambda*d*N^(1+2/d)), where Lambda is the Weyl
growth constant of the domain's Laplacian eigenvalues.  Reaction coefficients
converge much more slowly, with a rate that degrades as the dimension drops.
"""

from __future__ import annotations

from dataclasses import dataclass

from .spectral import weyl_constant  # noqa: F401  (re-exported convenience)


def clt_variance(theta0: float, d: int, T: float, Lambda: float) -> float:
    """Leading variance constant 2*theta0*(d+2)/(T*Lambda*d).

    Divide by N**(1 + 2/d) to obtain the approximate variance of the
    diffusivity estimator at resolution N.
    """
    if theta0 <= 0 or T <= 0 or Lambda <= 0 or d not in (1, 2, 3):
        raise ValueError("clt_variance needs positive arguments and d in {1,2,3}")
    return 2.0 * theta0 * (d + 2) / (T * Lambda * d)


def confidence_interval(
    theta0_hat: float,
    d: int,
    T: float,
    Lambda: float,
    N: int,
    z: float = 1.96,
) -> tuple[float, float]:
    """Approximate 95% interval around the diffusivity estimate (plug-in variance)."""
    if theta0_hat <= 0:
        raise ValueError("the variance formula requires a positive diffusivity estimate")
    if N < 1:
        raise ValueError("N must be >= 1")
    half = z * (clt_variance(theta0_hat, d, T, Lambda) / N ** (1.0 + 2.0 / d)) ** 0.5
    return theta0_hat - half, theta0_hat + half


@dataclass
class RatePrediction:
    """Predicted estimation-error decay in N: power law, logarithmic, or none.

    Exactly one regime is active: a power law (``exponent`` set), logarithmic
    decay, or no guaranteed decay (``valid`` false).  ``clt`` marks parameter
    regimes where the central limit theorem survives misspecification.
    """

    exponent: float | None
    logarithmic: bool = False
    valid: bool = True
    clt: bool = False

    def __post_init__(self):
        power = self.exponent is not None
        active = [power, self.logarithmic, not self.valid]
        if sum(active) != 1:
            raise ValueError("exactly one of power-law, logarithmic, no-decay must hold")
        if power and self.exponent >= 0:
            raise ValueError("a power-law rate must have a negative exponent")


def predicted_rate(parameter: str, d: int, misspec_eta: float | None = None) -> RatePrediction:
    """Theoretical error decay for the given parameter at spatial resolution N.

    Diffusivity decays as N^-(1/2 + 1/d); under a misspecified drift of
    stability index eta the rate survives when eta >= 1 + d/2 (with the CLT for
    a strict inequality) and otherwise drops to N^(-eta/d).  Reaction rates
    decay as N^-(1/2 - 1/d) for d >= 3, only logarithmically for d = 2, and
    need not decay at all for d = 1.
    """
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2, or 3")
    if parameter == "diffusivity":
        full_rate = -(0.5 + 1.0 / d)
        if misspec_eta is None:
            return RatePrediction(exponent=full_rate)
        if misspec_eta <= 0:
            raise ValueError("a stability index must be positive")
        if misspec_eta >= 1.0 + d / 2.0:
            return RatePrediction(exponent=full_rate, clt=misspec_eta > 1.0 + d / 2.0)
        return RatePrediction(exponent=-misspec_eta / d)
    if parameter == "reaction":
        if misspec_eta is not None:
            raise ValueError("misspecification rates are only predicted for the diffusivity")
        if d >= 3:
            return RatePrediction(exponent=-(0.5 - 1.0 / d))
        if d == 2:
            return RatePrediction(exponent=None, logarithmic=True)
        return RatePrediction(exponent=None, valid=False)
    raise ValueError(f"unknown parameter kind {parameter!r}")
