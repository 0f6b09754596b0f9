"""Kernel estimators on the circle.

Provides the density estimate built from a circular sample and a kernel,
its derivative estimates, the quadratic functional estimate psi_hat used
by the plug-in selectors, and an integrated-squared-error metric.

Sums of kernels are evaluated either directly (closed-form families) or
through the kernel's cosine series, which collapses the sum over
observations onto the sample's trigonometric moments

    C_j = sum_i cos(j Theta_i),   S_j = sum_i sin(j Theta_i).

Both routes compute the same quantity up to summation order; psi_hat keeps
the direct double sum available as a cross-checking mode.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    DEFAULT_TRUNCATION,
    KernelFamily,
    KernelSpec,
    derivative_weights,
    kernel_value,
    wrap_angle,
)
from .special import DEFAULT_QUADRATURE, integrate_circle

__all__ = [
    "CircularSample",
    "DensityGrid",
    "FunctionalEstimate",
    "default_grid",
    "kde",
    "kde_values",
    "kde_deriv",
    "psi_hat",
    "ise",
]

# families with a cheap closed-form density (everything but wrapped normal)
_CLOSED_DENSITY = {
    KernelFamily.VONMISES,
    KernelFamily.WRAPPEDCAUCHY,
    KernelFamily.CARDIOID,
    KernelFamily.WRAPPEDEPANECHNIKOV,
}


def default_grid(num=512):
    """Equispaced evaluation grid on [-pi, pi), starting at -pi."""
    if num < 2:
        raise ValueError(f"grid needs at least 2 points, got {num}")
    return np.linspace(-np.pi, np.pi, num, endpoint=False)


@dataclass(frozen=True, eq=False)
class CircularSample:
    """A validated sample of angles, wrapped into [-pi, pi).

    Trigonometric moments are memoized on the instance because every
    spectral evaluation against the same data reuses them.
    """

    angles: np.ndarray
    _moments: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_data(cls, values):
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("sample must contain at least one angle")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample contains non-finite angles")
        arr = wrap_angle(arr)
        arr.setflags(write=False)
        return cls(arr)

    @property
    def n(self):
        return int(self.angles.size)

    def trig_moments(self, max_order):
        """(C, S) with C[k] = sum_i cos((k+1) Theta_i), k = 0..max_order-1."""
        if max_order < 0:
            raise ValueError("max_order must be nonnegative")
        if max_order == 0:
            return np.empty(0), np.empty(0)
        have = self._moments.get("J", 0)
        if max_order > have:
            cos_parts = []
            sin_parts = []
            for lo in range(have + 1, max_order + 1, 512):
                js = np.arange(lo, min(lo + 512, max_order + 1))
                args = self.angles[:, None] * js[None, :]
                cos_parts.append(np.cos(args).sum(axis=0))
                sin_parts.append(np.sin(args).sum(axis=0))
            new_c = np.concatenate(cos_parts)
            new_s = np.concatenate(sin_parts)
            if have:
                new_c = np.concatenate([self._moments["C"], new_c])
                new_s = np.concatenate([self._moments["S"], new_s])
            self._moments.update(J=max_order, C=new_c, S=new_s)
        return self._moments["C"][:max_order], self._moments["S"][:max_order]


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Density (or derivative) values over a strictly increasing angle grid.

    When produced by kde / kde_deriv the originating sample and kernel ride
    along so downstream consumers can re-evaluate exactly off-grid.
    """

    thetas: np.ndarray
    values: np.ndarray
    deriv_order: int = 0
    sample: CircularSample | None = None
    kernel: KernelSpec | None = None

    def __post_init__(self):
        if len(self.thetas) != len(self.values):
            raise ValueError("thetas and values must have equal length")
        if len(self.thetas) >= 2 and not np.all(np.diff(self.thetas) > 0):
            raise ValueError("thetas must be strictly increasing")

    def to_csv(self):
        lines = ["theta,value"]
        for t, v in zip(self.thetas, self.values):
            lines.append(f"{float(t)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(
            {
                "deriv_order": self.deriv_order,
                "theta": list(map(float, self.thetas)),
                "value": list(map(float, self.values)),
            }
        )


@dataclass(frozen=True)
class FunctionalEstimate:
    """Estimate of the density functional int f^(s) f, tagged with the
    pilot kernel that produced it."""

    s: int
    value: float
    pilot: KernelSpec


def _direct_sum(sample, spec, deriv_order, thetas, chunk=2048):
    """Mean of kernel values over the sample, evaluated on a grid."""
    out = np.empty(len(thetas))
    data = sample.angles
    for lo in range(0, len(thetas), max(1, chunk // max(sample.n, 1))):
        hi = min(lo + max(1, chunk // max(sample.n, 1)), len(thetas))
        diffs = thetas[lo:hi, None] - data[None, :]
        vals = kernel_value(spec, diffs.ravel(), deriv_order)
        out[lo:hi] = vals.reshape(hi - lo, sample.n).mean(axis=1)
    return out


def _spectral_sum(sample, spec, deriv_order, thetas, trunc):
    """Same mean via the kernel's cosine series and the sample's moments."""
    weights = derivative_weights(spec, deriv_order, trunc)
    J = len(weights)
    C, S = sample.trig_moments(J)
    base = 1.0 / (2.0 * np.pi) if deriv_order == 0 else 0.0
    phase = deriv_order * np.pi / 2.0
    js = np.arange(1, J + 1, dtype=float)
    out = np.full(len(thetas), base)
    for lo in range(0, len(thetas), 4096):
        block = thetas[lo : lo + 4096, None] * js[None, :] + phase
        out[lo : lo + 4096] += (
            np.cos(block) @ (weights * C) + np.sin(block) @ (weights * S)
        ) / (np.pi * sample.n)
    return out


def kde_values(sample, kernel, points, deriv_order=0, trunc=None):
    """Raw estimator values at arbitrary angles (no ordering required)."""
    trunc = trunc or DEFAULT_TRUNCATION
    points = np.asarray(points, dtype=float)
    if sample.n < 1:
        raise ValueError("sample must contain at least one angle")
    if deriv_order == 0:
        direct = kernel.nu == 0.0 or kernel.family in _CLOSED_DENSITY
    else:
        # the differentiated series decays too slowly past the wrapped
        # Epanechnikov kink; its piecewise polynomial is exact and cheap
        direct = kernel.nu == 0.0 or kernel.family == KernelFamily.WRAPPEDEPANECHNIKOV
    if direct:
        return _direct_sum(sample, kernel, deriv_order, points)
    return _spectral_sum(sample, kernel, deriv_order, points, trunc)


def kde(sample, kernel, thetas=None, trunc=None):
    """Kernel density estimate: the average of kernels centered at the
    observations, evaluated over a grid (default 512 equispaced points)."""
    thetas = default_grid() if thetas is None else np.asarray(thetas, dtype=float)
    values = kde_values(sample, kernel, thetas, 0, trunc)
    return DensityGrid(thetas, values, 0, sample=sample, kernel=kernel)


def kde_deriv(sample, kernel, deriv_order, thetas=None, trunc=None):
    """Estimate of the density derivative of the given order (>= 1)."""
    if deriv_order < 1:
        raise ValueError(f"deriv_order must be >= 1, got {deriv_order}")
    thetas = default_grid() if thetas is None else np.asarray(thetas, dtype=float)
    values = kde_values(sample, kernel, thetas, deriv_order, trunc)
    return DensityGrid(thetas, values, deriv_order, sample=sample, kernel=kernel)


def psi_hat(sample, pilot, s, method="spectral", trunc=None):
    """Estimate of psi_s = int f^(s) f at pilot kernel L.

    This is the full double sum n^-2 sum_i sum_j L^(s)(Theta_i - Theta_j),
    diagonal included.  The default route reorders it through the kernel's
    cosine series onto the sample moments, which is exact up to float
    summation order; ``method="pairwise"`` performs the literal double sum.
    """
    if sample.n < 2:
        raise ValueError("psi_hat needs a sample of at least 2 angles")
    if s < 0 or s % 2 != 0:
        raise ValueError(f"s must be even and nonnegative, got {s}")
    trunc = trunc or DEFAULT_TRUNCATION
    n = sample.n
    base = 1.0 / (2.0 * np.pi) if s == 0 else 0.0
    if method == "pairwise":
        total = 0.0
        data = sample.angles
        for lo in range(0, n, 512):
            diffs = data[lo : lo + 512, None] - data[None, :]
            total += float(np.sum(kernel_value(pilot, diffs.ravel(), s)))
        value = total / n**2
    elif method == "spectral":
        weights = derivative_weights(pilot, s, trunc)
        J = len(weights)
        C, S = sample.trig_moments(J)
        power = C * C + S * S
        sign = -1.0 if s % 4 == 2 else 1.0
        value = base + sign * float(weights @ power) / (np.pi * n * n)
    else:
        raise ValueError(f"unknown method {method!r}")
    return FunctionalEstimate(s=s, value=float(value), pilot=pilot)


def _periodic_interp(thetas, values):
    """Periodic linear interpolant through grid values."""

    def fn(t):
        return np.interp(
            wrap_angle(t), thetas, values, period=2.0 * np.pi
        )

    return fn


def ise(est, truth, cfg=None):
    """Integrated squared error between a density estimate and a known
    density, by adaptive quadrature.

    When the grid carries its sample and kernel the estimate is
    re-evaluated exactly at the quadrature nodes; otherwise the grid is
    interpolated periodically.
    """
    if est.deriv_order != 0:
        raise ValueError("ise is defined for density estimates, not derivatives")
    cfg = cfg or DEFAULT_QUADRATURE
    if est.sample is not None and est.kernel is not None:
        sample, kernel = est.sample, est.kernel

        def fhat(t):
            return float(kde_values(sample, kernel, np.atleast_1d(t))[0])

    else:
        interp = _periodic_interp(est.thetas, est.values)

        def fhat(t):
            return float(interp(t))

    value = integrate_circle(lambda t: (fhat(t) - truth(t)) ** 2, cfg)
    return max(value, 0.0)
