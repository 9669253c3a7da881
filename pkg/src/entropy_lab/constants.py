"""
Closed-form parameter algebra.

Admissibility of (beta, gamma, p) for the Caffarelli-Kohn-Nirenberg
family, the exponents of the artificial-dimension reformulation, the
Felli-Schneider symmetry classification and the closed-form spectral-gap
and improvement constants. Everything here is a pure function of its
arguments.
"""

from __future__ import annotations

import math
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import beta as beta_function

from entropy_lab.errors import ParameterError

FS_TOLERANCE = 1e-9
# relative slack on p <= p_star so that p = p_star survives round-off
_P_STAR_SLACK = 1e-12


class RegionLabel(StrEnum):
    """Classification of a point (beta, gamma) for fixed d and p."""

    INADMISSIBLE = "Inadmissible"
    SYMMETRY = "Symmetry"
    SYMMETRY_BREAKING = "SymmetryBreaking"
    FS_BOUNDARY = "FSBoundary"


class CknParameters(BaseModel):
    """Dimension, weights and diffusion exponent of one problem instance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    d: int = Field(..., ge=1, description="Space dimension")
    beta: float = Field(default=0.0, description="Weight exponent on the gradient term")
    gamma: float = Field(default=0.0, description="Weight exponent on the Lebesgue terms")
    m: float = Field(..., gt=0.0, lt=1.0, description="Fast diffusion exponent")

    @model_validator(mode="after")
    def _one_dimensional_only_unweighted(self) -> CknParameters:
        if self.d == 1 and (self.beta != 0.0 or self.gamma != 0.0):
            raise ValueError("d = 1 is only supported without weights (beta = gamma = 0)")
        return self

    @classmethod
    def from_p(cls, d: int, p: float, beta: float = 0.0, gamma: float = 0.0) -> CknParameters:
        """Build from the interpolation exponent p via m = (p+1)/(2p)."""
        if p <= 1.0:
            raise ParameterError(f"p must be > 1, got {p}")
        return cls(d=d, beta=beta, gamma=gamma, m=(p + 1.0) / (2.0 * p))

    @property
    def p(self) -> float:
        """Interpolation exponent p = 1/(2m-1); requires m > 1/2."""
        if self.m <= 0.5:
            raise ParameterError(f"p = 1/(2m-1) is undefined for m = {self.m} <= 1/2")
        return 1.0 / (2.0 * self.m - 1.0)

    def admissibility_violations(self) -> list[str]:
        """List the conditions of the admissible parameter set that fail (empty when admissible)."""
        d, b, g = self.d, self.beta, self.gamma
        failures = []
        if d == 1:
            if self.m <= 0.5:
                failures.append("m > 1/2 (p > 1)")
            return failures
        if not g < d:
            failures.append("gamma < d")
        if not g - 2.0 < b:
            failures.append("gamma - 2 < beta")
        if not b <= (d - 2.0) * g / d:
            failures.append("beta <= (d-2) gamma / d")
        if self.m <= 0.5:
            failures.append("m > 1/2 (p > 1)")
        elif d - b - 2.0 > 0.0 and self.p > (d - g) / (d - b - 2.0) * (1.0 + _P_STAR_SLACK):
            failures.append("p <= p_star")
        return failures

    @property
    def is_admissible(self) -> bool:
        return not self.admissibility_violations()


class DerivedParameters(BaseModel):
    """Exponents of the artificial-dimension reformulation, echoed with the inputs."""

    model_config = ConfigDict(frozen=True)

    d: int
    beta: float
    gamma: float
    m: float
    sigma: float = Field(..., description="2 + beta - gamma")
    alpha: float = Field(..., description="1 + (beta - gamma)/2")
    n: float = Field(..., description="Artificial dimension 2(d-gamma)/(beta+2-gamma)")
    nu: float = Field(..., description="d - n")
    p_star: float = Field(..., description="(d-gamma)/(d-beta-2); infinite when d-beta-2 = 0")
    theta: float = Field(..., description="Interpolation exponent of the CKN inequality")
    m1: float = Field(..., description="Generalized critical exponent 1 - 1/n")
    m_c: float = Field(..., description="(n-2)/n")
    delta: float = Field(..., description="1/(1-m)")
    xi: float = Field(..., description="sigma - (d-gamma)(1-m)")
    xi_n: float = Field(..., description="Self-similar exponent n(m - m_c) of the artificial frame")
    lambda_scale: float = Field(..., description="lambda with lambda^(n(m-m_c)) = (1-m)/(2m)")
    p: float = Field(..., description="1/(2m-1), NaN when m <= 1/2")

    @property
    def params(self) -> CknParameters:
        return CknParameters(d=self.d, beta=self.beta, gamma=self.gamma, m=self.m)

    def require_flow_range(self) -> None:
        """Raise unless m lies in [m1, 1), the range of the flow and spectral operations."""
        if self.m < self.m1 - 1e-14:
            raise ParameterError(f"m = {self.m} is below the critical exponent m1 = {self.m1:.6g}")


def derive(params: CknParameters) -> DerivedParameters:
    """Compute all derived exponents.

    Raises:
        ParameterError: sigma = 2 + beta - gamma <= 0, or d - beta - 2 < 0
    """
    d, b, g, m = params.d, params.beta, params.gamma, params.m
    sigma = 2.0 + b - g
    if sigma <= 0.0:
        raise ParameterError(f"sigma = 2 + beta - gamma must be positive, got {sigma}")
    if d - b - 2.0 < 0.0:
        raise ParameterError(f"p_star requires d - beta - 2 >= 0, got {d - b - 2.0}")

    alpha = 1.0 + (b - g) / 2.0
    n = 2.0 * (d - g) / sigma
    p_star = math.inf if d - b - 2.0 == 0.0 else (d - g) / (d - b - 2.0)
    m_c = (n - 2.0) / n
    xi_n = n * (m - m_c)

    p = 1.0 / (2.0 * m - 1.0) if m > 0.5 else math.nan
    if math.isnan(p):
        theta = math.nan
    else:
        denominator = p * (d + b + 2.0 - 2.0 * g - p * (d - b - 2.0))
        theta = (d - g) * (p - 1.0) / denominator if denominator != 0.0 else math.nan

    return DerivedParameters(
        d=d,
        beta=b,
        gamma=g,
        m=m,
        sigma=sigma,
        alpha=alpha,
        n=n,
        nu=d - n,
        p_star=p_star,
        theta=theta,
        m1=1.0 - 1.0 / n,
        m_c=m_c,
        delta=1.0 / (1.0 - m),
        xi=sigma - (d - g) * (1.0 - m),
        xi_n=xi_n,
        lambda_scale=((1.0 - m) / (2.0 * m)) ** (1.0 / xi_n) if xi_n > 0.0 else math.nan,
        p=p,
    )


def beta_fs(gamma: float, d: int) -> float | None:
    """Felli-Schneider curve; None where the discriminant is negative (the curve does not exist)."""
    discriminant = (gamma - d) ** 2 - 4.0 * (d - 1.0)
    if discriminant < 0.0:
        return None
    return d - 2.0 - math.sqrt(discriminant)


def eta(beta: float, gamma: float, d: int) -> float:
    """Angular exponent eta of the Hardy-Poincare gap; eta > 1 exactly below the Felli-Schneider curve."""
    sigma = 2.0 + beta - gamma
    if sigma <= 0.0:
        raise ParameterError(f"sigma = 2 + beta - gamma must be positive, got {sigma}")
    k = d - 2.0 - beta
    return (2.0 / sigma) * math.sqrt(d - 1.0 + (k / 2.0) ** 2) - k / sigma


def classify(beta: float, gamma: float, d: int, p: float | None, tol: float = FS_TOLERANCE) -> RegionLabel:
    """Classify (beta, gamma) for dimension d and exponent p.

    ``p=None`` selects the critical case p = p_star(beta, gamma) at every point,
    where only the half-cone constraints remain.
    """
    if d < 2:
        return RegionLabel.INADMISSIBLE
    if not (gamma < d and gamma - 2.0 < beta < (d - 2.0) * gamma / d):
        return RegionLabel.INADMISSIBLE
    if p is not None:
        p_star = (d - gamma) / (d - beta - 2.0)
        if not (1.0 < p <= p_star * (1.0 + _P_STAR_SLACK)):
            return RegionLabel.INADMISSIBLE

    curve = beta_fs(gamma, d)
    if curve is not None and abs(beta - curve) <= tol:
        return RegionLabel.FS_BOUNDARY
    if eta(beta, gamma, d) >= 1.0:
        return RegionLabel.SYMMETRY
    return RegionLabel.SYMMETRY_BREAKING


def region_scan(
    d: int,
    p: float | None,
    beta_range: tuple[float, float],
    gamma_range: tuple[float, float],
    steps: int | tuple[int, int],
) -> list[tuple[float, float, RegionLabel]]:
    """Classify a beta x gamma grid, row-major with gamma as the outer index."""
    beta_steps, gamma_steps = (steps, steps) if isinstance(steps, int) else steps
    if beta_steps < 2 or gamma_steps < 2:
        raise ParameterError("region scans need at least 2 steps per axis")
    if not (beta_range[0] < beta_range[1] and gamma_range[0] < gamma_range[1]):
        raise ParameterError(f"empty range: beta {beta_range}, gamma {gamma_range}")

    betas = np.linspace(beta_range[0], beta_range[1], beta_steps)
    gammas = np.linspace(gamma_range[0], gamma_range[1], gamma_steps)
    return [(float(b), float(g), classify(float(b), float(g), d, p)) for g in gammas for b in betas]


def spectral_gap_closed_form(dp: DerivedParameters) -> float:
    """Optimal Hardy-Poincare constant around the Barenblatt profile.

    Raises:
        ParameterError: d < 2, nu > 0 or delta < n
    """
    if dp.d < 2:
        raise ParameterError("the spectral gap needs d >= 2")
    if dp.nu > 1e-12 * dp.n:
        raise ParameterError(f"the closed form needs nu <= 0, got nu = {dp.nu:.6g}")
    if dp.delta < dp.n * (1.0 - 1e-12):
        raise ParameterError(f"the closed form needs delta >= n, got delta = {dp.delta:.6g} < n = {dp.n:.6g}")

    a2 = dp.alpha**2
    delta, n = dp.delta, dp.n
    threshold = (dp.d - 1.0) * delta**2 / (n * (2.0 * delta - n) * (delta - 1.0))
    if a2 <= threshold:
        return 2.0 * a2 * (2.0 * delta - n)
    return 2.0 * a2 * delta * eta(dp.beta, dp.gamma, dp.d)


def essential_spectrum_bottom(dp: DerivedParameters, l: int) -> float:
    """Bottom of the continuous spectrum of the linearized operator in angular mode l."""
    return dp.alpha**2 * (dp.delta + 1.0 - dp.n / 2.0) ** 2 + l * (l + dp.d - 2.0)


def zeta_ckn(dp: DerivedParameters, Lambda: float) -> float:
    """Spectral improvement (2(1-m) Lambda - 4 alpha^2)/4; positive only strictly inside the symmetry region."""
    return (2.0 * (1.0 - dp.m) * Lambda - 4.0 * dp.alpha**2) / 4.0


def zeta_gns(d: int, m: float) -> float:
    """Improvement 2d(m - m1) of the unweighted entropy-entropy production inequality."""
    m1 = 1.0 - 1.0 / d
    if not m1 < m < 1.0:
        raise ParameterError(f"zeta_gns needs m in (m1, 1) = ({m1:.6g}, 1), got {m}")
    return 2.0 * d * (m - m1)


def mu_initial_layer(zeta: float, t_star: float) -> float:
    """Improvement transferred backwards to the initial time layer [0, t_star]."""
    if zeta <= 0.0:
        raise ParameterError(f"zeta must be positive, got {zeta}")
    if t_star < 0.0:
        raise ParameterError(f"t_star must be nonnegative, got {t_star}")
    decay = math.exp(-4.0 * t_star)
    return 4.0 * zeta * decay / (4.0 + zeta - zeta * decay)


def stability_constant(mu: float) -> float:
    """Constant C = 4/(4+mu) in (p+1)/(p-1) delta[f] >= C I[v]."""
    return 4.0 / (4.0 + mu)


def improved_eep_fraction(mu: float) -> float:
    """Fraction mu/(4+mu) in I - 4F >= mu/(4+mu) I along the whole trajectory."""
    return mu / (4.0 + mu)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _radial_power_integral(d: int, exponent_r2: float, decay: float) -> float:
    """Integral over R^d of |x|^(2 k) (1+|x|^2)^(-decay) dx with k = exponent_r2."""
    a = d / 2.0 + exponent_r2
    b = decay - a
    if b <= 0.0:
        raise ParameterError(f"non-integrable power: decay {decay} too slow in dimension {d}")
    return sphere_area(d) * 0.5 * float(beta_function(a, b))


def gns_norms(d: int, p: float) -> dict[str, float]:
    """Closed-form norms of the optimizer g = (1+|x|^2)^(-1/(p-1)).

    Returns:
        Dict with ``grad2`` = ||grad g||_2^2, ``p1`` = ||g||_{p+1}^{p+1}, ``p2`` = ||g||_{2p}^{2p}
    """
    return {
        "grad2": 4.0 / (p - 1.0) ** 2 * _radial_power_integral(d, 1.0, 2.0 * p / (p - 1.0)),
        "p1": _radial_power_integral(d, 0.0, (p + 1.0) / (p - 1.0)),
        "p2": _radial_power_integral(d, 0.0, 2.0 * p / (p - 1.0)),
    }


def gns_optimal_constant(d: int, p: float) -> float:
    """Optimal constant of ||grad f||_2^theta ||f||_{p+1}^(1-theta) >= C ||f||_{2p}, attained by g."""
    if d >= 3 and p > d / (d - 2.0):
        raise ParameterError(f"p = {p} exceeds the critical exponent d/(d-2) = {d / (d - 2.0):.6g}")
    theta = d * (p - 1.0) / ((d + 2.0 - p * (d - 2.0)) * p)
    norms = gns_norms(d, p)
    grad = math.sqrt(norms["grad2"])
    lp1 = norms["p1"] ** (1.0 / (p + 1.0))
    l2p = norms["p2"] ** (1.0 / (2.0 * p))
    return grad**theta * lp1 ** (1.0 - theta) / l2p
