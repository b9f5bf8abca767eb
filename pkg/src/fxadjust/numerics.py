"""Special functions, 3x3 correlation algebra and reproducible Gaussian sampling.

Everything here works on plain floats. Validation helpers (:func:`probability`,
:func:`correlation`) return the checked value so they can be used inline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelValidityError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
PSD_TOL = 1e-12

# Stream algorithm identifier. Bump when the (seed, index) -> draws mapping changes.
RNG_ALGORITHM = "philox4x64-10/seedsequence/v1"


def probability(value: float, name: str = "p") -> float:
    """Return ``value`` as a float if it lies strictly inside (0, 1)."""
    x = float(value)
    if not (0.0 < x < 1.0):
        raise DomainError(f"{name}: must lie in the open interval (0, 1), got {value!r}")
    return x


def correlation(value: float, name: str = "rho") -> float:
    """Return ``value`` as a float if it lies in [-1, 1]."""
    x = float(value)
    if not (-1.0 <= x <= 1.0):
        raise DomainError(f"{name}: must lie in [-1, 1], got {value!r}")
    return x


# ---------------------------------------------------------------------------
# Univariate normal
# ---------------------------------------------------------------------------


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / SQRT2PI


def std_normal_cdf(x: float) -> float:
    """Standard normal distribution function via the complementary error function."""
    if not math.isfinite(x):
        raise DomainError(f"x: must be finite, got {x!r}")
    return 0.5 * math.erfc(-x / SQRT2)


_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam_lower(p: float) -> float:
    # Initial guess for p <= 0.5, relative error about 1.15e-9.
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf`.

    Acklam's rational approximation followed by one Halley step against the
    erfc-based CDF. The upper half is obtained by antisymmetry, which is exact
    because ``1 - p`` is exact for ``p >= 0.5``.
    """
    p = probability(p, "p")
    if p > 0.5:
        return -_quantile_lower(1.0 - p)
    return _quantile_lower(p)


def _quantile_lower(p: float) -> float:
    x = _acklam_lower(p)
    dens = norm_pdf(x)
    if dens > 0.0:
        u = (std_normal_cdf(x) - p) / dens
        x = x - u / (1.0 + 0.5 * x * u)
    return x


# ---------------------------------------------------------------------------
# Bivariate normal
# ---------------------------------------------------------------------------

# Gauss-Legendre half-rules (nodes on (0, 1), weights) for 6, 12 and 20 points.
_GL = {
    6: ((0.9324695142031522, 0.6612093864662647, 0.2386191860831970),
        (0.1713244923791705, 0.3607615730481384, 0.4679139345726904)),
    12: ((0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
          0.5873179542866171, 0.3678314989981802, 0.1252334085114692),
         (0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
          0.2031674267230659, 0.2334925365383547, 0.2491470458134029)),
    20: ((0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
          0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
          0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
          0.07652652113349733),
         (0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
          0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
          0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
          0.1527533871307259)),
}


def _gl_rule(r: float) -> tuple[np.ndarray, np.ndarray]:
    n = 6 if abs(r) < 0.3 else 12 if abs(r) < 0.75 else 20
    x, w = _GL[n]
    x = np.asarray(x)
    w = np.asarray(w)
    return np.concatenate([1.0 - x, 1.0 + x]), np.concatenate([w, w])


def _bvn_upper(h: float, k: float, r: float) -> float:
    """P(X > h, Y > k) for standard bivariate normal with correlation |r| < 1.

    Drezner-Wesolowsky quadrature in Genz's formulation: plain Gauss-Legendre
    over asin(r) for |r| < 0.925, otherwise an expansion around the singular
    point r = +-1 integrated numerically.
    """
    if r == 0.0:
        return std_normal_cdf(-h) * std_normal_cdf(-k)
    twopi = 2.0 * math.pi
    x, w = _gl_rule(r)
    hk = h * k
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * math.asin(r)
        sn = np.sin(asr * x)
        bvn = float(np.dot(np.exp((sn * hk - hs) / (1.0 - sn * sn)), w))
        return bvn * asr / twopi + std_normal_cdf(-h) * std_normal_cdf(-k)

    if r < 0.0:
        k = -k
        hk = -hk
    bvn = 0.0
    a_sq = (1.0 - r) * (1.0 + r)
    a = math.sqrt(a_sq)
    bs = (h - k) ** 2
    asr = -0.5 * (bs / a_sq + hk)
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 80.0
    if asr > -100.0:
        bvn = a * math.exp(asr) * (1.0 - c * (bs - a_sq) * (1.0 - d * bs) / 3.0 + c * d * a_sq * a_sq)
    if hk > -100.0:
        b = math.sqrt(bs)
        sp = SQRT2PI * std_normal_cdf(-b / a)
        bvn -= math.exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
    a *= 0.5
    xs = (a * x) ** 2
    asr_v = -0.5 * (bs / xs + hk)
    keep = asr_v > -100.0
    xs = xs[keep]
    sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs)
    rs = np.sqrt(1.0 - xs)
    ep = np.exp(-0.5 * hk * xs / (1.0 + rs) ** 2) / rs
    bvn = (a * float(np.dot(np.exp(asr_v[keep]) * (sp - ep), w[keep])) - bvn) / twopi

    if r > 0.0:
        return bvn + std_normal_cdf(-max(h, k))
    if h >= k:
        return -bvn
    if h < 0.0:
        lower = std_normal_cdf(k) - std_normal_cdf(h)
    else:
        lower = std_normal_cdf(-h) - std_normal_cdf(-k)
    return lower - bvn


def bivariate_normal_cdf(x: float, y: float, rho: float) -> float:
    """P(X <= x, Y <= y) for a standard bivariate normal with correlation ``rho``.

    ``|rho| == 1`` uses the comonotone / countermonotone limits exactly.
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError(f"x, y: must be finite, got ({x!r}, {y!r})")
    rho = correlation(rho, "rho")
    if rho == 1.0:
        return min(std_normal_cdf(x), std_normal_cdf(y))
    if rho == -1.0:
        return max(0.0, std_normal_cdf(x) + std_normal_cdf(y) - 1.0)
    return min(1.0, max(0.0, _bvn_upper(-x, -y, rho)))


# ---------------------------------------------------------------------------
# Correlation matrix of (Z, A1, A2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrMatrix3:
    """Correlation matrix of the standardized FX shock and two asset shocks.

    ``r1 = corr(Z, A1)``, ``r2 = corr(Z, A2)`` and ``rho = corr(A1, A2)``.
    Construction fails with :class:`ModelValidityError` if the matrix is not
    positive semidefinite up to ``PSD_TOL``.
    """

    r1: float
    r2: float
    rho: float

    def __post_init__(self) -> None:
        for name in ("r1", "r2", "rho"):
            object.__setattr__(self, name, correlation(getattr(self, name), name))
        check_psd(self.r1, self.r2, self.rho)

    @property
    def determinant(self) -> float:
        r1, r2, rho = self.r1, self.r2, self.rho
        return 1.0 - r1 * r1 - r2 * r2 - rho * rho + 2.0 * r1 * r2 * rho

    def as_array(self) -> np.ndarray:
        return np.array([[1.0, self.r1, self.r2],
                         [self.r1, 1.0, self.rho],
                         [self.r2, self.rho, 1.0]])


def check_psd(r1: float, r2: float, rho: float) -> None:
    """Raise :class:`ModelValidityError` naming the first failing minor."""
    minors = (
        ("minor(Z,A1)", 1.0 - r1 * r1),
        ("minor(Z,A2)", 1.0 - r2 * r2),
        ("minor(A1,A2)", 1.0 - rho * rho),
        ("determinant", 1.0 - r1 * r1 - r2 * r2 - rho * rho + 2.0 * r1 * r2 * rho),
    )
    for name, value in minors:
        if value < -PSD_TOL:
            raise ModelValidityError(
                f"correlation matrix (r1={r1}, r2={r2}, rho={rho}) is not positive "
                f"semidefinite: {name} = {value:.6g} < 0"
            )


def cholesky3(m: CorrMatrix3) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m``.

    Zero pivots (singular but PSD matrices) get a zero column below them; PSD
    guarantees the corresponding off-diagonal numerator vanishes.
    """
    r1, r2, rho = m.r1, m.r2, m.rho
    l11 = math.sqrt(max(0.0, 1.0 - r1 * r1))
    if l11 > PSD_TOL:
        l21 = (rho - r1 * r2) / l11
    else:
        l21 = 0.0
    l22 = math.sqrt(max(0.0, 1.0 - r2 * r2 - l21 * l21))
    return np.array([[1.0, 0.0, 0.0],
                     [r1, l11, 0.0],
                     [r2, l21, l22]])


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------


def make_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent Gaussian stream identified by ``(seed, index)``.

    Philox is counter based; the key comes from ``SeedSequence(seed)`` spawned
    at ``index``, so stream ``index`` of one seed never overlaps another.
    """
    if seed < 0 or index < 0:
        raise DomainError(f"seed and index must be nonnegative, got ({seed}, {index})")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def sample_std_normal_vec(stream: np.random.Generator, L: np.ndarray) -> tuple[float, float, float]:
    """Draw one correlated triple ``(z, a1, a2) = L @ e`` with ``e`` iid N(0, 1)."""
    z, a1, a2 = L @ stream.standard_normal(3)
    return float(z), float(a1), float(a2)


def sample_std_normal_block(stream: np.random.Generator, L: np.ndarray, n: int) -> np.ndarray:
    """Draw ``n`` correlated triples as an ``(n, 3)`` array.

    Row ``i`` matches the ``i``-th :func:`sample_std_normal_vec` call on a
    fresh copy of the same stream, up to rounding in the 3x3 product.
    """
    e = stream.standard_normal((n, 3))
    return e @ L.T
