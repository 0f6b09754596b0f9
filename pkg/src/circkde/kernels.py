"""Circular smoothing kernels and their Fourier-side functionals.

A kernel here is a symmetric unimodal density on the circle written as

    K_nu(theta) = (1/2pi) * (1 + 2 * sum_j alpha_j(nu) cos(j theta)),

where nu in [0, 1) is the mean resultant length.  The module provides the
coefficient sequences alpha_j for the supported families, the bandwidth
functional h(nu) = int theta^2 K_nu (the circular analogue of a squared
bandwidth), roughness functionals built from powers of the coefficients,
the asymptotic constants used by the plug-in selectors, and the inversion
from a target bandwidth back to a concentration.

The von Mises family carries its concentration kappa alongside nu, and the
wrapped Epanechnikov carries the half-support lam of its unwrapped
parabolic density.
"""

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ive

from .errors import ToleranceError, UnsupportedKernelError
from .special import bessel_ratio, find_root, inv_bessel_ratio, polylog

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "FourierTruncation",
    "KernelConstants",
    "UNIFORM_FALLBACK",
    "is_uniform_fallback",
    "wrap_angle",
    "fourier_coefficient",
    "derivative_weights",
    "bandwidth",
    "bandwidth_approx",
    "roughness",
    "kernel_constants",
    "concentration_from_bandwidth",
    "kernel_value",
    "UNIFORM_BANDWIDTH",
]

# Bandwidth of the uniform density: int theta^2 / (2 pi) = pi^2 / 3.
UNIFORM_BANDWIDTH = np.pi**2 / 3.0

_WE_NU_MIN = 3.0 / np.pi**2  # concentration of the wrapped Epanechnikov at lam = pi


class KernelFamily(str, enum.Enum):
    VONMISES = "vonmises"
    WRAPPEDNORMAL = "wrappednormal"
    WRAPPEDCAUCHY = "wrappedcauchy"
    WRAPPEDEPANECHNIKOV = "wrappedepanechnikov"
    CARDIOID = "cardioid"


@dataclass(frozen=True)
class FourierTruncation:
    """Tail rule for coefficient series: stop once terms stay below
    rel_tol times the running sum for three consecutive orders."""

    rel_tol: float = 1e-12
    max_terms: int = 10000


DEFAULT_TRUNCATION = FourierTruncation()


class _UniformFallback:
    """Sentinel returned when a requested bandwidth is at least as wide as
    the uniform density can provide; consumers treat it as nu = 0."""

    __slots__ = ()

    def __repr__(self):
        return "UNIFORM_FALLBACK"


UNIFORM_FALLBACK = _UniformFallback()


def is_uniform_fallback(obj):
    return obj is UNIFORM_FALLBACK


def wrap_angle(theta):
    """Reduce angles to the principal interval [-pi, pi)."""
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi


def _we_nu_from_lam(lam):
    # 3 (sin(lam) - lam cos(lam)) / lam^3, stable near zero via Taylor
    if lam < 1e-4:
        return 1.0 - lam**2 / 10.0
    return 3.0 * (math.sin(lam) - lam * math.cos(lam)) / lam**3


def _we_lam_from_nu(nu):
    if not _WE_NU_MIN <= nu < 1.0:
        raise ValueError(
            f"wrapped Epanechnikov concentration must be in [{_WE_NU_MIN:.6f}, 1), got {nu}"
        )
    if nu == _WE_NU_MIN:
        return np.pi
    return find_root(lambda lam: _we_nu_from_lam(lam) - nu, 1e-8, np.pi, tol=1e-13)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its smoothing state.

    ``nu`` is the mean resultant length.  ``kappa`` is carried for the von
    Mises family and ``lam`` (the half-support of the unwrapped parabola)
    for the wrapped Epanechnikov; both are None elsewhere.
    """

    family: KernelFamily
    nu: float
    kappa: float | None = None
    lam: float | None = None

    @classmethod
    def vonmises(cls, kappa=None, nu=None):
        if (kappa is None) == (nu is None):
            raise ValueError("give exactly one of kappa or nu")
        if kappa is None:
            if not 0.0 <= nu < 1.0:
                raise ValueError(f"nu must be in [0, 1), got {nu}")
            kappa = inv_bessel_ratio(nu)
        else:
            if kappa < 0:
                raise ValueError(f"kappa must be nonnegative, got {kappa}")
            nu = bessel_ratio(kappa, 1)
        return cls(KernelFamily.VONMISES, float(nu), kappa=float(kappa))

    @classmethod
    def wrapped_normal(cls, nu):
        if not 0.0 <= nu < 1.0:
            raise ValueError(f"nu must be in [0, 1), got {nu}")
        return cls(KernelFamily.WRAPPEDNORMAL, float(nu))

    @classmethod
    def wrapped_cauchy(cls, nu):
        if not 0.0 <= nu < 1.0:
            raise ValueError(f"nu must be in [0, 1), got {nu}")
        return cls(KernelFamily.WRAPPEDCAUCHY, float(nu))

    @classmethod
    def cardioid(cls, nu):
        if not 0.0 <= nu < 0.5:
            raise ValueError(f"cardioid concentration must be in [0, 0.5), got {nu}")
        return cls(KernelFamily.CARDIOID, float(nu))

    @classmethod
    def wrapped_epanechnikov(cls, lam=None, nu=None):
        if (lam is None) == (nu is None):
            raise ValueError("give exactly one of lam or nu")
        if lam is None:
            lam = _we_lam_from_nu(nu)
        else:
            if not 0.0 < lam <= np.pi:
                raise ValueError(f"lam must be in (0, pi], got {lam}")
            nu = _we_nu_from_lam(lam)
        return cls(KernelFamily.WRAPPEDEPANECHNIKOV, float(nu), lam=float(lam))

    @classmethod
    def from_nu(cls, family, nu):
        family = KernelFamily(family)
        if family == KernelFamily.VONMISES:
            return cls.vonmises(nu=nu)
        if family == KernelFamily.WRAPPEDNORMAL:
            return cls.wrapped_normal(nu)
        if family == KernelFamily.WRAPPEDCAUCHY:
            return cls.wrapped_cauchy(nu)
        if family == KernelFamily.CARDIOID:
            return cls.cardioid(nu)
        return cls.wrapped_epanechnikov(nu=nu)

    @property
    def concentration(self):
        """kappa for von Mises, lam for wrapped Epanechnikov, else None."""
        if self.family == KernelFamily.VONMISES:
            return self.kappa
        if self.family == KernelFamily.WRAPPEDEPANECHNIKOV:
            return self.lam
        return None


def _alpha_block(spec, js):
    """Vectorized alpha_j for an integer array js >= 1."""
    fam = spec.family
    if fam == KernelFamily.VONMISES:
        if spec.kappa == 0.0:
            return np.zeros(len(js))
        scaled = ive(js, spec.kappa)
        return scaled / ive(0, spec.kappa)
    if fam == KernelFamily.WRAPPEDNORMAL:
        if spec.nu == 0.0:
            return np.zeros(len(js))
        # nu^(j^2) through logs to dodge premature underflow in the power
        with np.errstate(under="ignore"):
            return np.exp(js.astype(float) ** 2 * math.log(spec.nu))
    if fam == KernelFamily.WRAPPEDCAUCHY:
        if spec.nu == 0.0:
            return np.zeros(len(js))
        with np.errstate(under="ignore"):
            return np.exp(js.astype(float) * math.log(spec.nu))
    if fam == KernelFamily.CARDIOID:
        return np.where(js == 1, spec.nu, 0.0)
    # wrapped Epanechnikov: oscillating sign, O(j^-3) decay
    x = js.astype(float) * spec.lam
    return 3.0 * (np.sin(x) - x * np.cos(x)) / x**3


def fourier_coefficient(spec, j):
    """alpha_j(nu), the j-th cosine coefficient (without the 1/pi scale)."""
    if j < 1 or j != int(j):
        raise ValueError(f"j must be a positive integer, got {j}")
    return float(_alpha_block(spec, np.array([int(j)]))[0])


@lru_cache(maxsize=4096)
def _series_weights(spec, growth, power, trunc):
    """Truncated coefficient array c_j = j^growth * alpha_j^power, j = 1..J.

    Truncation follows the tail rule with the running sum of |c_j| as the
    reference scale; raises ToleranceError when max_terms is exhausted.
    """
    out = []
    total = 0.0
    consec = 0
    j0 = 1
    block = 64
    while j0 <= trunc.max_terms:
        hi = min(j0 + block - 1, trunc.max_terms)
        js = np.arange(j0, hi + 1)
        alphas = _alpha_block(spec, js)
        c = js.astype(float) ** growth * alphas**power
        for idx in range(len(js)):
            v = c[idx]
            total += abs(v)
            out.append(v)
            if abs(v) <= trunc.rel_tol * max(total, 1e-300):
                consec += 1
                if consec >= 3:
                    return np.array(out)
            else:
                consec = 0
        j0 = hi + 1
        block = min(block * 2, 4096)
    raise ToleranceError(
        f"coefficient series for {spec.family.value} (growth={growth}, power={power}) "
        f"did not fall below tolerance within {trunc.max_terms} terms"
    )


def derivative_weights(spec, deriv_order=0, trunc=None):
    """Truncated array of cosine-series weights j^r * alpha_j for j = 1..J,
    with J chosen by the tail rule.  These drive the spectral evaluation of
    the estimators: a sum of kernels collapses onto the sample's trigonometric
    moments with exactly these weights."""
    if deriv_order < 0:
        raise ValueError(f"deriv_order must be nonnegative, got {deriv_order}")
    return _series_weights(spec, deriv_order, 1, trunc or DEFAULT_TRUNCATION)


def bandwidth(spec, trunc=None):
    """Bandwidth functional h(nu) = int_{-pi}^{pi} theta^2 K_nu(theta) dtheta.

    Equals pi^2/3 + 4 sum_j (-1)^j alpha_j / j^2; closed forms are used for
    the families that admit them.
    """
    trunc = trunc or DEFAULT_TRUNCATION
    fam = spec.family
    if spec.nu == 0.0:
        return UNIFORM_BANDWIDTH
    if fam == KernelFamily.WRAPPEDCAUCHY:
        return UNIFORM_BANDWIDTH + 4.0 * polylog(2, -spec.nu)
    if fam == KernelFamily.CARDIOID:
        return UNIFORM_BANDWIDTH - 4.0 * spec.nu
    if fam == KernelFamily.WRAPPEDEPANECHNIKOV:
        return spec.lam**2 / 5.0
    weights = _series_weights(spec, -2, 1, trunc)
    js = np.arange(1, len(weights) + 1)
    return UNIFORM_BANDWIDTH + 4.0 * float(np.sum((-1.0) ** js * weights))


def bandwidth_approx(spec):
    """Large-concentration approximation (1 - alpha_2(nu)) / 2."""
    return 0.5 * (1.0 - fourier_coefficient(spec, 2))


def _roughness_sign(deriv_order, power):
    # negative only for the odd-power functional at derivative orders 1, 2 mod 4
    if power == 1 and deriv_order % 4 in (1, 2):
        return -1.0
    return 1.0


def roughness(spec, deriv_order=0, power=2, trunc=None):
    """Roughness functional of the kernel.

    For power t and derivative order r this is
    (2 pi)^-1 (1 + 2 sum_j alpha_j^t) when r = 0 and otherwise
    sgn * pi^-1 * sum_j j^(t r) alpha_j^t, the quantity that controls the
    estimator variance (t = 2) and the peak values K^(r)(0) (t = 2 even r).
    """
    if power not in (1, 2):
        raise ValueError(f"power must be 1 or 2, got {power}")
    if deriv_order < 0:
        raise ValueError(f"deriv_order must be nonnegative, got {deriv_order}")
    trunc = trunc or DEFAULT_TRUNCATION
    fam = spec.family
    r, t = deriv_order, power
    if spec.nu == 0.0:
        return 1.0 / (2.0 * np.pi) if r == 0 else 0.0
    if fam == KernelFamily.WRAPPEDCAUCHY:
        if r == 0:
            return (1.0 + 2.0 * polylog(0, spec.nu**t)) / (2.0 * np.pi)
        return _roughness_sign(r, t) * polylog(-t * r, spec.nu**t) / np.pi
    if fam == KernelFamily.CARDIOID:
        if r == 0:
            return (1.0 + 2.0 * spec.nu**t) / (2.0 * np.pi)
        return _roughness_sign(r, t) * spec.nu**t / np.pi
    if fam == KernelFamily.WRAPPEDEPANECHNIKOV:
        # closed forms from the unwrapped parabola; the defining series
        # converges too slowly (r=1, t=2) or diverges (r>=2) at the kink
        if r == 0 and t == 1:
            return 3.0 / (4.0 * spec.lam)
        if r == 0 and t == 2:
            return 3.0 / (5.0 * spec.lam)
        if r == 1 and t == 2:
            return 3.0 / (2.0 * spec.lam**3)
        raise ToleranceError(
            "wrapped Epanechnikov roughness series does not converge for "
            f"deriv_order={r}, power={t}"
        )
    if fam == KernelFamily.VONMISES and r == 0:
        if t == 1:
            # K(0) = exp(kappa) / (2 pi I_0(kappa))
            return 1.0 / (2.0 * np.pi * ive(0, spec.kappa))
        # int K^2 = I_0(2 kappa) / (2 pi I_0(kappa)^2)
        return float(ive(0, 2.0 * spec.kappa) / (2.0 * np.pi * ive(0, spec.kappa) ** 2))
    weights = _series_weights(spec, t * r, t, trunc)
    total = math.fsum(weights)
    if r == 0:
        return (1.0 + 2.0 * total) / (2.0 * np.pi)
    return _roughness_sign(r, t) * total / np.pi


@dataclass(frozen=True)
class KernelConstants:
    """Asymptotic constants: roughness ~ q2 * h^-(2r+1)/2 for the kernel
    itself and ~ q1 * h^-(s+1)/2 for its use as a pilot (q1 defined for
    even derivative orders only)."""

    q1: float | None
    q2: float | None


def kernel_constants(family, deriv_order):
    """Asymptotic roughness constants for a kernel family at derivative
    order r; only von Mises / wrapped normal (any r) and the wrapped
    Epanechnikov (r = 0, q2 only) admit them."""
    family = KernelFamily(family)
    r = deriv_order
    if r < 0:
        raise ValueError(f"deriv_order must be nonnegative, got {r}")
    if family in (KernelFamily.VONMISES, KernelFamily.WRAPPEDNORMAL):
        q2 = math.factorial(2 * r) / (2 ** (2 * r + 1) * math.factorial(r) * math.sqrt(np.pi))
        q1 = None
        if r % 2 == 0:
            q1 = (
                (-1.0) ** (r // 2)
                * math.factorial(r)
                / (2 ** (r // 2) * math.factorial(r // 2) * math.sqrt(2.0 * np.pi))
            )
        return KernelConstants(q1=q1, q2=q2)
    if family == KernelFamily.WRAPPEDEPANECHNIKOV and r == 0:
        return KernelConstants(q1=None, q2=3.0 / (5.0 * math.sqrt(5.0)))
    raise UnsupportedKernelError(
        f"no asymptotic constants for family={family.value}, deriv_order={r}"
    )


def _exact_solve_vonmises(h, trunc):
    def gap(kappa):
        return bandwidth(KernelSpec.vonmises(kappa=kappa), trunc) - h

    hi = max(2.0 / h, 1.0)
    while gap(hi) > 0:
        hi *= 4.0
        if hi > 1e9:
            raise ToleranceError(f"cannot bracket kappa for bandwidth {h}")
    kappa = find_root(gap, 0.0, hi, tol=1e-13)
    return KernelSpec.vonmises(kappa=kappa)


def _exact_solve_in_nu(family, h, trunc):
    def gap(nu):
        return bandwidth(KernelSpec.from_nu(family, nu), trunc) - h

    lo, hi = 0.0, 0.9
    while gap(hi) > 0:
        hi = 1.0 - 0.25 * (1.0 - hi)
        if 1.0 - hi < 1e-13:
            raise ToleranceError(f"cannot bracket nu for bandwidth {h}")
    nu = find_root(gap, lo, hi, tol=1e-14)
    return KernelSpec.from_nu(family, nu)


def concentration_from_bandwidth(family, h, exact=False, trunc=None):
    """Invert the bandwidth functional: find the kernel with bandwidth h.

    The default route uses the family's large-concentration inversion
    (von Mises kappa = 1/h; wrapped normal nu = (1-2h)^(1/4); wrapped
    Epanechnikov lam = sqrt(5h)); families without a published asymptotic
    inversion fall through to the exact solve.  With ``exact`` the
    bandwidth functional itself is inverted by bracketed root finding.
    Bandwidths at least as wide as the uniform density's (or beyond the
    family's reachable range) return UNIFORM_FALLBACK.
    """
    family = KernelFamily(family)
    trunc = trunc or DEFAULT_TRUNCATION
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    if h >= UNIFORM_BANDWIDTH:
        return UNIFORM_FALLBACK

    if family == KernelFamily.WRAPPEDEPANECHNIKOV:
        # exact and asymptotic coincide: h = lam^2 / 5 on lam <= pi
        lam = math.sqrt(5.0 * h)
        if lam >= np.pi:
            return UNIFORM_FALLBACK
        return KernelSpec.wrapped_epanechnikov(lam=lam)
    if family == KernelFamily.CARDIOID:
        # h = pi^2/3 - 4 nu, reachable only down to pi^2/3 - 2
        nu = (UNIFORM_BANDWIDTH - h) / 4.0
        if nu >= 0.5:
            raise ValueError(f"bandwidth {h} is below the cardioid family's range")
        return KernelSpec.cardioid(nu)

    if not exact:
        if family == KernelFamily.VONMISES:
            return KernelSpec.vonmises(kappa=1.0 / h)
        if family == KernelFamily.WRAPPEDNORMAL:
            if h >= 0.5:
                return UNIFORM_FALLBACK
            return KernelSpec.wrapped_normal((1.0 - 2.0 * h) ** 0.25)
        # no published asymptotic inversion for the wrapped Cauchy
        return _exact_solve_in_nu(family, h, trunc)

    if family == KernelFamily.VONMISES:
        return _exact_solve_vonmises(h, trunc)
    return _exact_solve_in_nu(family, h, trunc)


def _series_eval(weights, theta, phase, chunk=8192):
    """(1/pi) * sum_j w_j cos(j theta + phase) for a flat theta array."""
    js = np.arange(1, len(weights) + 1, dtype=float)
    out = np.empty_like(theta, dtype=float)
    for start in range(0, len(theta), chunk):
        block = theta[start : start + chunk, None] * js[None, :] + phase
        out[start : start + chunk] = np.cos(block) @ weights
    return out / np.pi


def kernel_value(spec, theta, deriv_order=0, trunc=None):
    """Evaluate K^(r)(theta) for scalar or array theta.

    r = 0 uses closed-form densities where the family has one; r >= 1 uses
    the term-by-term differentiated cosine series, except for the wrapped
    Epanechnikov whose piecewise-polynomial derivatives (orders 1 and 2)
    are evaluated directly.
    """
    trunc = trunc or DEFAULT_TRUNCATION
    r = deriv_order
    if r < 0:
        raise ValueError(f"deriv_order must be nonnegative, got {r}")
    scalar = np.isscalar(theta) or np.ndim(theta) == 0
    th = np.atleast_1d(wrap_angle(theta)).astype(float)
    fam = spec.family
    two_pi = 2.0 * np.pi

    if fam == KernelFamily.WRAPPEDEPANECHNIKOV and r >= 3:
        raise UnsupportedKernelError(
            "wrapped Epanechnikov derivatives beyond order 2 are distributional"
        )

    if spec.nu == 0.0:
        out = np.full(th.shape, 1.0 / two_pi) if r == 0 else np.zeros(th.shape)
    elif fam == KernelFamily.WRAPPEDEPANECHNIKOV:
        lam = spec.lam
        inside = np.abs(th) < lam
        if r == 0:
            out = np.where(inside, 3.0 * (1.0 - (th / lam) ** 2) / (4.0 * lam), 0.0)
        elif r == 1:
            out = np.where(inside, -3.0 * th / (2.0 * lam**3), 0.0)
        else:
            out = np.where(inside, -3.0 / (2.0 * lam**3), 0.0)
    elif r == 0:
        if fam == KernelFamily.VONMISES:
            kappa = spec.kappa
            out = np.exp(kappa * (np.cos(th) - 1.0)) / (two_pi * ive(0, kappa))
        elif fam == KernelFamily.WRAPPEDCAUCHY:
            nu = spec.nu
            out = (1.0 - nu * nu) / (two_pi * (1.0 + nu * nu - 2.0 * nu * np.cos(th)))
        elif fam == KernelFamily.CARDIOID:
            out = (1.0 + 2.0 * spec.nu * np.cos(th)) / two_pi
        else:  # wrapped normal: no elementary closed form
            weights = _series_weights(spec, 0, 1, trunc)
            out = 1.0 / two_pi + _series_eval(weights, th, 0.0)
    else:
        weights = _series_weights(spec, r, 1, trunc)
        out = _series_eval(weights, th, r * np.pi / 2.0)

    return float(out[0]) if scalar else out
