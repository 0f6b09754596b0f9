"""Reference density: von Mises mixtures with a shared concentration.

The plug-in selectors need a rough parametric stand-in for the unknown
density to start from.  This module fits an M-component von Mises mixture
whose components share one concentration kappa, picks M by AIC, and
computes the mixture's Fourier coefficients and density functionals
psi_s = int f^(s) f analytically.

Fitting is EM with seeded random restarts.  To make the fit equivariant
under rotation of the data, initialization happens in a frame aligned with
the sample's circular mean; the fitted means are rotated back at the end.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ive

from .errors import FitError, ToleranceError
from .kernels import FourierTruncation, wrap_angle
from .special import bessel_ratios, inv_bessel_ratio

__all__ = [
    "MixtureModel",
    "FitReport",
    "fit_em",
    "select_aic",
    "mixture_density",
    "mixture_fourier",
    "psi_from_model",
]

_KAPPA_CAP = 1e6
_WEIGHT_FLOOR = 1e-10
_PSI_TRUNCATION = FourierTruncation()


@dataclass(frozen=True)
class MixtureModel:
    """Von Mises mixture with shared concentration."""

    M: int
    mus: np.ndarray
    kappa: float
    weights: np.ndarray

    def __post_init__(self):
        if self.M < 1 or len(self.mus) != self.M or len(self.weights) != self.M:
            raise ValueError("component count must match means and weights")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if np.any(self.weights < -1e-12) or abs(float(np.sum(self.weights)) - 1.0) > 1e-10:
            raise ValueError("weights must be nonnegative and sum to 1")

    def to_json(self):
        return json.dumps(
            {
                "M": self.M,
                "mus": [float(m) for m in self.mus],
                "kappa": float(self.kappa),
                "weights": [float(w) for w in self.weights],
            }
        )


@dataclass(frozen=True)
class FitReport:
    model: MixtureModel
    loglik: float
    aic: float
    iterations: int
    converged: bool
    loglik_path: tuple = field(default=(), repr=False)


def _log_i0(kappa):
    return math.log(ive(0, kappa)) + kappa


def _em_once(x, M, init_means, init_kappa, max_iter=500, tol=1e-8):
    """One EM run on centered data.  Returns (params..., degenerate)."""
    n = len(x)
    mus = np.array(init_means, dtype=float)
    kappa = float(init_kappa)
    weights = np.full(M, 1.0 / M)
    path = []
    prev_ll = -np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        log_comp = (
            np.log(np.maximum(weights, 1e-300))[None, :]
            + kappa * np.cos(x[:, None] - mus[None, :])
            - _log_i0(kappa)
            - math.log(2.0 * np.pi)
        )
        peak = log_comp.max(axis=1)
        scaled = np.exp(log_comp - peak[:, None])
        row_sum = scaled.sum(axis=1)
        ll = float(np.sum(peak) + np.sum(np.log(row_sum)))
        path.append(ll)
        if prev_ll > -np.inf and abs(ll - prev_ll) <= tol * max(abs(prev_ll), 1.0):
            converged = True
            break
        prev_ll = ll
        gamma = scaled / row_sum[:, None]
        col = gamma.sum(axis=0)
        if np.min(col) < _WEIGHT_FLOOR * n:
            return None, None, None, ll, iterations, False, path, True
        weights = col / n
        sin_m = gamma.T @ np.sin(x)
        cos_m = gamma.T @ np.cos(x)
        mus = np.arctan2(sin_m, cos_m)
        # the resultant of each responsibility-weighted component is already
        # aligned with its updated mean, so the shared-concentration target
        # is a nonnegative average of resultant lengths
        target = float(np.sum(np.hypot(sin_m, cos_m))) / n
        if target >= 1.0 - 1e-12:
            return None, None, None, ll, iterations, False, path, True
        kappa = inv_bessel_ratio(target)
        if kappa > _KAPPA_CAP:
            return None, None, None, ll, iterations, False, path, True
    return mus, kappa, weights, path[-1], iterations, converged, path, False


def _quantile_means(x_sorted, M):
    idx = ((np.arange(M) + 0.5) / M * (len(x_sorted) - 1)).round().astype(int)
    return x_sorted[idx]


def fit_em(sample, M, seed=0, restarts=10, max_iter=500, tol=1e-8):
    """Fit the shared-concentration mixture by best-of-restarts EM.

    Initialization and all randomness are derived from ``seed``; the first
    restart uses plain sample quantiles as means, later ones jitter them.
    """
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    n = sample.n
    if n < 2 * M:
        raise ValueError(f"need at least {2 * M} observations to fit M={M}")
    # work in the frame aligned with the circular mean so a rotated sample
    # takes a rotated-but-otherwise-identical EM trajectory
    C1 = float(np.sum(np.cos(sample.angles)))
    S1 = float(np.sum(np.sin(sample.angles)))
    frame = math.atan2(S1, C1) if (C1 != 0.0 or S1 != 0.0) else 0.0
    x = wrap_angle(sample.angles - frame)
    x_sorted = np.sort(x)
    rbar = min(math.hypot(C1, S1) / n, 0.999)
    kappa0 = max(inv_bessel_ratio(rbar), 1.0)

    if M == 1:
        restarts = 1  # the single-component likelihood has one maximum
    best = None
    for r in range(restarts):
        means = _quantile_means(x_sorted, M).copy()
        if r > 0:
            rng = np.random.default_rng([seed, r])
            means = means + rng.normal(0.0, 0.25, M)
        out = _em_once(x, M, means, kappa0, max_iter=max_iter, tol=tol)
        mus, kappa, weights, ll, iters, converged, path, degenerate = out
        if degenerate:
            continue
        if best is None or ll > best[3]:
            best = out
    if best is None:
        raise FitError(f"all {restarts} EM restarts degenerated for M={M}")
    mus, kappa, weights, ll, iters, converged, path, _ = best
    model = MixtureModel(
        M=M,
        mus=wrap_angle(mus + frame),
        kappa=float(kappa),
        weights=np.asarray(weights, dtype=float),
    )
    return FitReport(
        model=model,
        loglik=float(ll),
        aic=-2.0 * float(ll) + 2.0 * (2 * M),
        iterations=iters,
        converged=converged,
        loglik_path=tuple(path),
    )


def select_aic(sample, M_max, seed=0, restarts=10):
    """Fit M = 1..M_max and keep the lowest-AIC fit (ties to smaller M).
    Component counts whose fit fails are skipped; all failing is an error."""
    if M_max < 1:
        raise ValueError(f"M_max must be positive, got {M_max}")
    best = None
    failures = []
    for M in range(1, M_max + 1):
        if sample.n < 2 * M:
            break
        try:
            report = fit_em(sample, M, seed=seed, restarts=restarts)
        except FitError as exc:
            failures.append(exc)
            continue
        if best is None or report.aic < best.aic:
            best = report
    if best is None:
        raise FitError(f"no mixture size in 1..{M_max} could be fitted: {failures}")
    return best


def mixture_density(model, theta):
    """Mixture density evaluated at scalar or array angles."""
    scalar = np.isscalar(theta) or np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if model.kappa == 0.0:
        out = np.full(th.shape, 1.0 / (2.0 * np.pi))
    else:
        comp = np.exp(model.kappa * (np.cos(th[:, None] - model.mus[None, :]) - 1.0))
        comp /= 2.0 * np.pi * ive(0, model.kappa)
        out = comp @ model.weights
    return float(out[0]) if scalar else out


def mixture_fourier(model, J):
    """Cosine/sine coefficients of the mixture, rows (a_j, b_j), j = 1..J."""
    if J < 1:
        raise ValueError(f"J must be positive, got {J}")
    js = np.arange(1, J + 1)
    ratios = bessel_ratios(model.kappa, J).ratios[1:]
    args = js[:, None] * model.mus[None, :]
    a = (np.cos(args) * model.weights[None, :]).sum(axis=1) * ratios
    b = (np.sin(args) * model.weights[None, :]).sum(axis=1) * ratios
    return np.column_stack([a, b])


def psi_from_model(model, s, trunc=None):
    """psi_s = int f^(s) f for the mixture, via orthogonality of the
    Fourier basis: the harmonics contribute (-1)^(s/2) j^s (a_j^2+b_j^2)/pi.

    The stopping rule runs on the component-independent envelope
    j^s ratio_j^2, which has no zeros, so symmetric mixtures whose odd
    harmonics vanish are not cut off early.
    """
    if s < 0 or s % 2 != 0:
        raise ValueError(f"s must be even and nonnegative, got {s}")
    trunc = trunc or _PSI_TRUNCATION
    base = 1.0 / (2.0 * np.pi) if s == 0 else 0.0
    if model.kappa == 0.0:
        return base
    sign = -1.0 if s % 4 == 2 else 1.0
    terms = []
    envelope_total = 0.0
    consec = 0
    j0 = 1
    block = 64
    while j0 <= trunc.max_terms:
        hi = min(j0 + block - 1, trunc.max_terms)
        coeffs = mixture_fourier(model, hi)[j0 - 1 :]
        js = np.arange(j0, hi + 1, dtype=float)
        ratios = bessel_ratios(model.kappa, hi).ratios[j0:]
        env = js**s * ratios**2
        vals = js**s * (coeffs[:, 0] ** 2 + coeffs[:, 1] ** 2)
        done = False
        for k in range(len(js)):
            terms.append(vals[k])
            envelope_total += env[k]
            if env[k] <= trunc.rel_tol * max(envelope_total, 1e-300):
                consec += 1
                if consec >= 3:
                    done = True
                    break
            else:
                consec = 0
        if done:
            return base + sign * math.fsum(terms) / np.pi
        j0 = hi + 1
        block = min(block * 2, 4096)
    raise ToleranceError(
        f"mixture harmonic series for s={s}, kappa={model.kappa} "
        f"did not fall below tolerance within {trunc.max_terms} terms"
    )
