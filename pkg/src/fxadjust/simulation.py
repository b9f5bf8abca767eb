"""Monte Carlo estimates of adjusted PDs, latent correlation and joint default.

Two samplers are provided. ``reduced`` draws the standardized one-year
quantities ``(F, A1, A2)`` directly. ``gbm_path`` simulates the asset and
exchange-rate processes with exact lognormal increments and applies the
default test ``F(1) * A(1) <= D`` in levels, which exercises the whole chain
from processes to thresholds.

Samples are processed in chunks of ``CHUNK_SIZE``. Chunk ``i`` always draws
from stream ``(seed, i)`` and chunk statistics are merged in chunk order, so
a result depends only on ``(seed, n_samples)`` and not on ``workers``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .model import (
    AssetProcess,
    BorrowerParams,
    DebtSpec,
    FxParams,
    PairParams,
    default_threshold,
    threshold_from_process,
)
from .numerics import CorrMatrix3, cholesky3, make_stream, sample_std_normal_block, std_normal_cdf

CHUNK_SIZE = 1 << 18
MODES = ("reduced", "gbm_path")


@dataclass(frozen=True)
class SimConfig:
    n_samples: int
    seed: int = 0
    mode: str = "reduced"
    n_steps: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if int(self.n_samples) < 1:
            raise DomainError(f"n_samples: must be >= 1, got {self.n_samples!r}")
        if int(self.n_steps) < 1:
            raise DomainError(f"n_steps: must be >= 1, got {self.n_steps!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed: must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.mode not in MODES:
            raise DomainError(f"mode: must be one of {MODES}, got {self.mode!r}")
        if int(self.workers) < 1:
            raise DomainError(f"workers: must be >= 1, got {self.workers!r}")


@dataclass(frozen=True)
class SimResult:
    pd1_hat: float
    pd2_hat: float
    rho_hat: float
    joint_default_hat: float
    se_pd1: float
    se_pd2: float
    se_joint: float
    se_rho: float
    n_samples: int


def standard_error(rate: float, n: int) -> float:
    """Binomial standard error ``sqrt(rate (1 - rate) / n)``."""
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"rate: must lie in [0, 1], got {rate!r}")
    if n < 1:
        raise DomainError(f"n: must be >= 1, got {n!r}")
    return math.sqrt(rate * (1.0 - rate) / n)


def correlation_standard_error(rho: float, n: int) -> float:
    """Asymptotic standard error ``(1 - rho^2) / sqrt(n)`` of a sample correlation."""
    return (1.0 - rho * rho) / math.sqrt(n)


# ---------------------------------------------------------------------------
# Streaming statistics
# ---------------------------------------------------------------------------


@dataclass
class _Moments:
    n: int = 0
    d1: int = 0
    d2: int = 0
    d12: int = 0
    mean1: float = 0.0
    mean2: float = 0.0
    m2_1: float = 0.0
    m2_2: float = 0.0
    c12: float = 0.0

    @classmethod
    def from_arrays(cls, s1: np.ndarray, s2: np.ndarray,
                    def1: np.ndarray, def2: np.ndarray) -> "_Moments":
        mean1 = float(s1.mean())
        mean2 = float(s2.mean())
        x1 = s1 - mean1
        x2 = s2 - mean2
        return cls(
            n=s1.size,
            d1=int(np.count_nonzero(def1)),
            d2=int(np.count_nonzero(def2)),
            d12=int(np.count_nonzero(def1 & def2)),
            mean1=mean1,
            mean2=mean2,
            m2_1=float(x1 @ x1),
            m2_2=float(x2 @ x2),
            c12=float(x1 @ x2),
        )

    def merge(self, other: "_Moments") -> "_Moments":
        if self.n == 0:
            return other
        n = self.n + other.n
        delta1 = other.mean1 - self.mean1
        delta2 = other.mean2 - self.mean2
        w = self.n * other.n / n
        return _Moments(
            n=n,
            d1=self.d1 + other.d1,
            d2=self.d2 + other.d2,
            d12=self.d12 + other.d12,
            mean1=self.mean1 + delta1 * other.n / n,
            mean2=self.mean2 + delta2 * other.n / n,
            m2_1=self.m2_1 + other.m2_1 + delta1 * delta1 * w,
            m2_2=self.m2_2 + other.m2_2 + delta2 * delta2 * w,
            c12=self.c12 + other.c12 + delta1 * delta2 * w,
        )

    def result(self) -> SimResult:
        n = self.n
        pd1, pd2, joint = self.d1 / n, self.d2 / n, self.d12 / n
        denom = math.sqrt(self.m2_1 * self.m2_2)
        rho = min(1.0, max(-1.0, self.c12 / denom)) if denom > 0.0 else 0.0
        return SimResult(
            pd1_hat=pd1,
            pd2_hat=pd2,
            rho_hat=rho,
            joint_default_hat=joint,
            se_pd1=standard_error(pd1, n),
            se_pd2=standard_error(pd2, n),
            se_joint=standard_error(joint, n),
            se_rho=correlation_standard_error(rho, n),
            n_samples=n,
        )


def _chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _run_chunks(fn: Callable[[tuple], _Moments], tasks: Sequence[tuple], workers: int) -> SimResult:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, tasks))
    else:
        parts = [fn(t) for t in tasks]
    total = _Moments()
    for part in parts:
        total = total.merge(part)
    return total.result()


# ---------------------------------------------------------------------------
# Reduced form
# ---------------------------------------------------------------------------


def _reduced_chunk(task: tuple) -> _Moments:
    seed, index, m, L, nu, tau, sig1, sig2, c1, c2 = task
    x = sample_std_normal_block(make_stream(seed, index), L, m)
    fx = nu + tau * x[:, 0]
    s1 = fx / sig1 + x[:, 1]
    s2 = fx / sig2 + x[:, 2]
    return _Moments.from_arrays(s1, s2, s1 <= c1, s2 <= c2)


def simulate_reduced(pair: PairParams, cfg: SimConfig) -> SimResult:
    """Sample ``(F, A1, A2)`` and count ``F/sigma_i + A_i <= c_i``.

    ``rho_hat`` is the sample correlation of the continuous latent scores.
    """
    if cfg.mode != "reduced":
        raise DomainError(f"mode: simulate_reduced needs mode 'reduced', got {cfg.mode!r}")
    L = cholesky3(pair.corr_matrix())
    c1 = default_threshold(pair.b1.pd)
    c2 = default_threshold(pair.b2.pd)
    tasks = [
        (cfg.seed, i, m, L, pair.fx.nu, pair.fx.tau, pair.b1.sigma, pair.b2.sigma, c1, c2)
        for i, m in enumerate(_chunk_sizes(cfg.n_samples))
    ]
    return _run_chunks(_reduced_chunk, tasks, cfg.workers)


# ---------------------------------------------------------------------------
# GBM paths
# ---------------------------------------------------------------------------


def gbm_step(log_x: np.ndarray, drift: float, vol: float, dt: float, shock: np.ndarray) -> np.ndarray:
    """Exact log increment of ``dX = drift X dt + vol X dW`` over ``dt``."""
    return log_x + (drift - 0.5 * vol * vol) * dt + vol * math.sqrt(dt) * shock


def gbm_log_terminal(log_x0: float, drift: float, vol: float, shocks: np.ndarray,
                     horizon: float = 1.0) -> np.ndarray:
    """Log value at ``horizon`` from per-step standard normal shocks.

    ``shocks`` has shape ``(n_steps, m)``; step ``k`` uses row ``k``.
    """
    n_steps = shocks.shape[0]
    dt = horizon / n_steps
    log_x = np.full(shocks.shape[1], float(log_x0))
    for k in range(n_steps):
        log_x = gbm_step(log_x, drift, vol, dt, shocks[k])
    return log_x


def fx_gbm_drift(fx: FxParams) -> float:
    """GBM drift of the exchange rate whose one-year log change has mean ``fx.nu``."""
    return fx.nu + 0.5 * fx.tau * fx.tau


def _gbm_chunk(task: tuple) -> _Moments:
    seed, index, m, L, n_steps, fx, assets, debts = task
    stream = make_stream(seed, index)
    dt = 1.0 / n_steps
    fx_drift = fx_gbm_drift(fx)
    log_f = np.zeros(m)
    log_a = [np.full(m, math.log(a.a0)) for a in assets]
    for _ in range(n_steps):
        x = sample_std_normal_block(stream, L, m)
        log_f = gbm_step(log_f, fx_drift, fx.tau, dt, x[:, 0])
        for i, a in enumerate(assets):
            log_a[i] = gbm_step(log_a[i], a.mu, a.sigma, dt, x[:, i + 1])
    defaults = []
    scores = []
    for i, (a, d) in enumerate(zip(assets, debts)):
        # F(1) A(1) <= D with F(1) = F0 * F*(1), compared in logs.
        defaults.append(math.log(d.f0) + log_f + log_a[i] <= math.log(d.debt))
        scores.append((log_f + log_a[i] - math.log(a.a0) - a.mu + 0.5 * a.sigma**2) / a.sigma)
    return _Moments.from_arrays(scores[0], scores[1], defaults[0], defaults[1])


def simulate_gbm_paths(asset1: AssetProcess, asset2: AssetProcess,
                       debts: tuple[DebtSpec, DebtSpec], fx: FxParams,
                       corr: CorrMatrix3, cfg: SimConfig) -> SimResult:
    """Simulate asset values and the exchange rate to t = 1 and test ``F(1) A(1) <= D``.

    ``corr`` is the correlation of the Brownian increments ``(V, W1, W2)``.
    The FX process is ``F(t) = F0 exp(nu t + tau V(t))`` so that the one-year
    log change has mean ``fx.nu``, matching the reduced form.
    """
    if cfg.mode != "gbm_path":
        raise DomainError(f"mode: simulate_gbm_paths needs mode 'gbm_path', got {cfg.mode!r}")
    L = cholesky3(corr)
    tasks = [
        (cfg.seed, i, m, L, cfg.n_steps, fx, (asset1, asset2), tuple(debts))
        for i, m in enumerate(_chunk_sizes(cfg.n_samples))
    ]
    return _run_chunks(_gbm_chunk, tasks, cfg.workers)


def equivalent_pair(asset1: AssetProcess, asset2: AssetProcess,
                    debts: tuple[DebtSpec, DebtSpec], fx: FxParams,
                    corr: CorrMatrix3) -> PairParams:
    """Reduced-form parameters implied by two asset processes and their debts."""
    borrowers = []
    for asset, debt, r in zip((asset1, asset2), debts, (corr.r1, corr.r2)):
        pd = std_normal_cdf(threshold_from_process(asset, debt))
        borrowers.append(BorrowerParams(pd=pd, sigma=asset.sigma, r=r))
    return PairParams(borrowers[0], borrowers[1], corr.rho, fx)
