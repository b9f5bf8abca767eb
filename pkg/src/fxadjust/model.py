"""Closed-form PD and asset-correlation adjustments for FX risk.

A borrower whose assets are in one currency and whose debt is due in another
defaults when the latent score ``F / sigma + A`` falls below the one-currency
threshold ``c = Phi^-1(p)``. Here ``F ~ N(nu, tau^2)`` is the log change of
the exchange rate over the year and ``A ~ N(0, 1)`` the standardized asset
shock, with ``corr(F, A) = r``.

Exchange-rate orientation: ``F(t)`` is the number of debt-currency units paid
for one asset-currency unit, so the asset value in debt currency is
``F(1) * A(1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateThresholdError, DomainError, ModelValidityError, NoSolutionError
from .numerics import (
    CorrMatrix3,
    bivariate_normal_cdf,
    correlation,
    probability,
    std_normal_cdf,
    std_normal_quantile,
)


def _finite(value: float, name: str) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise DomainError(f"{name}: must be finite, got {value!r}")
    return x


def _positive(value: float, name: str) -> float:
    x = _finite(value, name)
    if x <= 0.0:
        raise DomainError(f"{name}: must be > 0, got {value!r}")
    return x


@dataclass(frozen=True)
class FxParams:
    """Mean ``nu`` and volatility ``tau`` of the one-year log FX change ``F``."""

    nu: float = 0.0
    tau: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nu", _finite(self.nu, "nu"))
        tau = _finite(self.tau, "tau")
        if tau < 0.0:
            raise DomainError(f"tau: must be >= 0, got {self.tau!r}")
        object.__setattr__(self, "tau", tau)


@dataclass(frozen=True)
class BorrowerParams:
    """One-currency PD, asset volatility and FX/asset shock correlation."""

    pd: float
    sigma: float
    r: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pd", probability(self.pd, "pd"))
        object.__setattr__(self, "sigma", _positive(self.sigma, "sigma"))
        object.__setattr__(self, "r", correlation(self.r, "r"))


@dataclass(frozen=True)
class PairParams:
    b1: BorrowerParams
    b2: BorrowerParams
    rho: float
    fx: FxParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", correlation(self.rho, "rho"))
        # Raises ModelValidityError if (Z, A1, A2) has no joint Gaussian law.
        self.corr_matrix()

    def corr_matrix(self) -> CorrMatrix3:
        return CorrMatrix3(self.b1.r, self.b2.r, self.rho)


@dataclass(frozen=True)
class AdjustedPair:
    pd1_star: float
    pd2_star: float
    rho_star: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "pd1_star", probability(self.pd1_star, "pd1_star"))
        object.__setattr__(self, "pd2_star", probability(self.pd2_star, "pd2_star"))
        object.__setattr__(self, "rho_star", correlation(self.rho_star, "rho_star"))


@dataclass(frozen=True)
class AssetProcess:
    """Geometric Brownian motion ``A(t) = a0 exp((mu - sigma^2/2) t + sigma W(t))``."""

    a0: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "a0", _positive(self.a0, "a0"))
        object.__setattr__(self, "mu", _finite(self.mu, "mu"))
        object.__setattr__(self, "sigma", _positive(self.sigma, "sigma"))


@dataclass(frozen=True)
class DebtSpec:
    """Debt due at t = 1 in debt currency, and today's exchange rate."""

    debt: float
    f0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "debt", _positive(self.debt, "debt"))
        object.__setattr__(self, "f0", _positive(self.f0, "f0"))


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------


def default_threshold(p: float) -> float:
    """Default threshold ``c = Phi^-1(p)`` of the one-currency model."""
    return std_normal_quantile(probability(p, "p"))


def threshold_from_process(asset: AssetProcess, debtspec: DebtSpec) -> float:
    """Standardized default barrier of the asset process for debt converted at today's rate."""
    log_barrier = math.log(debtspec.debt) - math.log(asset.a0) - math.log(debtspec.f0)
    return (log_barrier - asset.mu + 0.5 * asset.sigma**2) / asset.sigma


def fx_drift_for_unit_mean(tau: float) -> float:
    """Mean of the log FX change for which ``E[F(1) / F0] = 1``."""
    tau = _finite(tau, "tau")
    if tau < 0.0:
        raise DomainError(f"tau: must be >= 0, got {tau!r}")
    return -0.5 * tau * tau


# ---------------------------------------------------------------------------
# Forward adjustment
# ---------------------------------------------------------------------------


def _score_scale(t: float, r: float) -> float:
    # Standard deviation of F/sigma + A, where t = tau/sigma.
    var = t * t + 1.0 + 2.0 * r * t
    if not var > 0.0:
        raise ModelValidityError(
            f"latent score variance tau^2/sigma^2 + 1 + 2 r tau/sigma = {var:.6g} is not positive "
            f"(tau/sigma = {t:.6g}, r = {r:.6g})"
        )
    return math.sqrt(var)


def adjusted_pd(b: BorrowerParams, fx: FxParams) -> float:
    """PD once the debt is due in the other currency.

    ``Phi((c - nu/sigma) / sqrt(t^2 + 1 + 2 r t))`` with ``t = tau / sigma``.
    Returns ``b.pd`` unchanged when there is no FX risk at all.
    """
    if fx.tau == 0.0 and fx.nu == 0.0:
        return b.pd
    c = default_threshold(b.pd)
    t = fx.tau / b.sigma
    return std_normal_cdf((c - fx.nu / b.sigma) / _score_scale(t, b.r))


def adjusted_correlation(pair: PairParams) -> float:
    """Correlation of the two latent scores ``F/sigma_i + A_i``.

    With ``t_i = tau / sigma_i`` the covariance of the scores is
    ``rho + r2 t1 + r1 t2 + t1 t2``: borrower 1's FX loading meets borrower
    2's FX/asset correlation and vice versa.
    """
    tau = pair.fx.tau
    if tau == 0.0:
        return pair.rho
    r1, r2 = pair.b1.r, pair.b2.r
    t1 = tau / pair.b1.sigma
    t2 = tau / pair.b2.sigma
    num = pair.rho + r2 * t1 + r1 * t2 + t1 * t2
    value = num / (_score_scale(t1, r1) * _score_scale(t2, r2))
    return min(1.0, max(-1.0, value))


def adjust_pair(pair: PairParams) -> AdjustedPair:
    return AdjustedPair(
        adjusted_pd(pair.b1, pair.fx),
        adjusted_pd(pair.b2, pair.fx),
        adjusted_correlation(pair),
    )


def joint_default_probability(adj: AdjustedPair) -> float:
    """Probability that both borrowers default under the adjusted parameters."""
    return bivariate_normal_cdf(
        std_normal_quantile(adj.pd1_star),
        std_normal_quantile(adj.pd2_star),
        adj.rho_star,
    )


# ---------------------------------------------------------------------------
# Volatility-free relations (nu = 0, r = 0) and inverses
# ---------------------------------------------------------------------------


def _lower_half(p: float, name: str) -> float:
    p = probability(p, name)
    if not p < 0.5:
        raise DomainError(f"{name}: must lie in (0, 0.5), got {p!r}")
    return p


def _threshold_ratio_sq(p: float, p_star: float, name: str) -> float:
    # c^2 / q*^2 - 1 for the pair (p, p*), which is >= 0 iff p* >= p.
    if p_star < p:
        raise DomainError(
            f"{name}: adjusted PD {p_star!r} is below the original PD {p!r}; "
            "impossible without FX drift or FX/asset correlation"
        )
    excess = (default_threshold(p) / default_threshold(p_star)) ** 2 - 1.0
    return max(0.0, excess)


def consistency_residual(p1: float, p2: float, p1s: float, p2s: float,
                         rho: float, rho_star: float) -> float:
    """Left minus right side of the volatility-free consistency condition.

    With ``k_i = Phi^-1(p_i) / Phi^-1(p_i*)`` the condition reads
    ``rho* k1 k2 = rho + sqrt(k1^2 - 1) sqrt(k2^2 - 1)``. It holds exactly
    for adjustments produced with ``nu = 0`` and ``r1 = r2 = 0``.
    """
    for value, name in ((p1, "p1"), (p2, "p2"), (p1s, "p1_star"), (p2s, "p2_star")):
        _lower_half(value, name)
    rho = correlation(rho, "rho")
    rho_star = correlation(rho_star, "rho_star")
    e1 = _threshold_ratio_sq(p1, p1s, "p1_star")
    e2 = _threshold_ratio_sq(p2, p2s, "p2_star")
    k1 = default_threshold(p1) / default_threshold(p1s)
    k2 = default_threshold(p2) / default_threshold(p2s)
    return rho_star * k1 * k2 - rho - math.sqrt(e1) * math.sqrt(e2)


def rho_star_gap(p1: float, p2: float, p1s: float, p2s: float,
                 rho: float, rho_star: float) -> float:
    """Distance of ``rho_star`` from the value the consistency condition implies.

    The residual is linear in ``rho_star`` with slope ``k1 k2``, so this is
    simply ``residual / (k1 k2)``.
    """
    res = consistency_residual(p1, p2, p1s, p2s, rho, rho_star)
    k1 = default_threshold(p1) / default_threshold(p1s)
    k2 = default_threshold(p2) / default_threshold(p2s)
    return res / (k1 * k2)


def implied_vol_ratio(p: float, p_star: float, r: float = 0.0) -> float:
    """Back out ``t = tau / sigma`` from a PD adjustment, assuming ``nu = 0``.

    Solves ``Phi^-1(p*) = c / sqrt(t^2 + 1 + 2 r t)`` for the larger root
    ``t = -r + sqrt(r^2 - 1 + c^2 / q*^2)``.

    Raises
    ------
    DegenerateThresholdError
        If ``p == 0.5``; the threshold is zero and carries no information.
    NoSolutionError
        If no nonnegative ``t`` reproduces ``p_star``.
    """
    if float(p) == 0.5:
        raise DegenerateThresholdError("p: PD of 0.5 gives threshold 0; volatility ratio undefined")
    p = _lower_half(p, "p")
    p_star = _lower_half(p_star, "p_star")
    r = correlation(r, "r")
    c = default_threshold(p)
    q = default_threshold(p_star)
    disc = r * r - 1.0 + (c / q) ** 2
    if disc < 0.0:
        raise NoSolutionError(
            f"no volatility ratio maps p={p!r} to p_star={p_star!r} with r={r!r} (discriminant {disc:.6g})"
        )
    t = -r + math.sqrt(disc)
    if -1e-12 < t < 0.0:
        # -r + sqrt(r^2) at p* = p
        t = 0.0
    if t < 0.0:
        raise NoSolutionError(
            f"volatility ratio for p={p!r}, p_star={p_star!r}, r={r!r} would be negative ({t:.6g})"
        )
    return t


def homogeneous_adjusted_correlation(p: float, rho: float, p_star: float) -> float:
    """Adjusted asset correlation for two borrowers sharing ``p`` and ``p*``.

    ``1 - (1 - rho) * Phi^-1(p*)^2 / Phi^-1(p)^2``.
    """
    p = _lower_half(p, "p")
    p_star = _lower_half(p_star, "p_star")
    rho = correlation(rho, "rho")
    if rho >= 1.0:
        raise DomainError("rho: must be < 1")
    if p_star < p:
        raise DomainError(f"p_star: must be >= p ({p!r}), got {p_star!r}")
    if p_star == p:
        return rho
    ratio = (default_threshold(p_star) / default_threshold(p)) ** 2
    return 1.0 - (1.0 - rho) * ratio


def homogeneous_implied_pd(p: float, rho: float, rho_star: float) -> float:
    """Inverse of :func:`homogeneous_adjusted_correlation` in ``p*``."""
    p = _lower_half(p, "p")
    rho = correlation(rho, "rho")
    rho_star = correlation(rho_star, "rho_star")
    if rho_star >= 1.0:
        raise DomainError("rho_star: must be < 1")
    if rho_star < rho:
        raise DomainError(f"rho_star: must be >= rho ({rho!r}), got {rho_star!r}")
    if rho_star == rho:
        return p
    c = default_threshold(p)
    return std_normal_cdf(-abs(c) * math.sqrt((1.0 - rho_star) / (1.0 - rho)))
