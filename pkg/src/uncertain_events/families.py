"""Parametric fatality distributions.

Five base families (gumbel, normal, lognormal, poisson, negbin), each
optionally combined with a point mass at the reported value (mixture) and/or
shifted by a free offset. Continuous bases are discretized onto nonnegative
integers by half-integer binning with left-truncation at -0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DegenerateTruncationError, ParameterError

EULER_GAMMA = 0.5772156649015329

#: base family -> names of its base parameters, in vector order
BASE_PARAMS = {
    "gumbel": ("location", "scale"),
    "normal": ("location", "scale"),
    "lognormal": ("meanlog", "sdlog"),
    "poisson": ("rate",),
    "negbin": ("mean", "size"),
}

DISCRETE_BASES = frozenset({"poisson", "negbin"})

_TRUNCATION_EPS = 1e-12


@dataclass(frozen=True)
class FamilyId:
    """A distribution family: base name plus mixture/shift flags."""

    base: str
    mixture: bool = False
    shifted: bool = False

    def __post_init__(self):
        if self.base not in BASE_PARAMS:
            raise ParameterError(f"unknown base family {self.base!r}")

    @property
    def discrete(self) -> bool:
        return self.base in DISCRETE_BASES

    @property
    def param_names(self) -> tuple[str, ...]:
        names = list(BASE_PARAMS[self.base])
        if self.mixture:
            names.append("point_weight")
        if self.shifted:
            names.append("shift")
        return tuple(names)

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def label(self) -> str:
        parts = [self.base]
        if self.mixture:
            parts.append("mix")
        if self.shifted:
            parts.append("shift")
        return "-".join(parts)

    @classmethod
    def from_label(cls, label: str) -> "FamilyId":
        parts = label.strip().lower().split("-")
        base, flags = parts[0], set(parts[1:])
        if not flags <= {"mix", "shift"}:
            raise ParameterError(f"cannot parse family label {label!r}")
        return cls(base, mixture="mix" in flags, shifted="shift" in flags)


@dataclass(frozen=True)
class DistributionSpec:
    """A family with a concrete parameter vector.

    ``theta`` lists the base parameters in :data:`BASE_PARAMS` order, then the
    point weight ``w`` if the family is a mixture, then the shift ``s`` if it
    is shifted. ``anchor`` is the reported value carrying the point mass and
    is required for mixtures.
    """

    family: FamilyId
    theta: tuple[float, ...]
    anchor: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        fam = self.family
        if len(self.theta) != fam.n_params:
            raise ParameterError(
                f"{fam.label()} expects {fam.n_params} parameters, got {len(self.theta)}"
            )
        params = dict(zip(fam.param_names, self.theta))
        for name in ("scale", "sdlog", "size"):
            if name in params and not params[name] > 0:
                raise ParameterError(f"{name} must be strictly positive")
        if "rate" in params and not params["rate"] > 0:
            raise ParameterError("poisson rate must be strictly positive")
        if "mean" in params and not params["mean"] > 0:
            raise ParameterError("negbin mean must be strictly positive")
        if fam.mixture:
            w = params["point_weight"]
            if not 0.0 <= w <= 1.0:
                raise ParameterError("mixture weight must lie in [0, 1]")
            if self.anchor is None:
                raise ParameterError("mixture specs require an anchor (reported value)")
            if self.anchor < 0 or int(self.anchor) != self.anchor:
                raise ParameterError("anchor must be a nonnegative integer")
            object.__setattr__(self, "anchor", int(self.anchor))
        if fam.shifted and fam.discrete:
            s = params["shift"]
            if s != round(s):
                raise ParameterError("discrete bases only admit integer shifts")

    @property
    def base_theta(self) -> tuple[float, ...]:
        return self.theta[: len(BASE_PARAMS[self.family.base])]

    @property
    def point_weight(self) -> float:
        if not self.family.mixture:
            return 0.0
        return self.theta[len(BASE_PARAMS[self.family.base])]

    @property
    def shift(self) -> float:
        if not self.family.shifted:
            return 0.0
        return self.theta[-1]


# ---------------------------------------------------------------------------
# vectorized base-family primitives (params broadcast against x/q)
# ---------------------------------------------------------------------------

def base_cdf(base, x, p1, p2=None):
    x = np.asarray(x, dtype=float)
    if base == "gumbel":
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(-(x - p1) / p2))
    if base == "normal":
        return special.ndtr((x - p1) / p2)
    if base == "lognormal":
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(np.maximum(x, 1e-300)) - p1) / p2
        return np.where(x > 0, special.ndtr(z), 0.0)
    if base == "poisson":
        k = np.floor(x)
        return np.where(k < 0, 0.0, special.pdtr(np.maximum(k, 0), p1))
    if base == "negbin":
        r, prob = p2, _negbin_prob(p1, p2)
        k = np.floor(x)
        return np.where(k < 0, 0.0, special.betainc(r, np.maximum(k, 0) + 1, prob))
    raise ParameterError(f"unknown base family {base!r}")


def base_ppf(base, q, p1, p2=None):
    q = np.asarray(q, dtype=float)
    if base == "gumbel":
        return p1 - p2 * np.log(-np.log(q))
    if base == "normal":
        return p1 + p2 * special.ndtri(q)
    if base == "lognormal":
        return np.exp(p1 + p2 * special.ndtri(q))
    if base == "poisson":
        return stats.poisson.ppf(q, p1)
    if base == "negbin":
        return stats.nbinom.ppf(q, p2, _negbin_prob(p1, p2))
    raise ParameterError(f"unknown base family {base!r}")


def base_pdf(base, x, p1, p2=None):
    """Density for continuous bases, pmf at integers for discrete ones."""
    x = np.asarray(x, dtype=float)
    if base == "gumbel":
        z = (x - p1) / p2
        with np.errstate(over="ignore"):
            return np.exp(-z - np.exp(-z)) / p2
    if base == "normal":
        z = (x - p1) / p2
        return np.exp(-0.5 * z * z) / (p2 * np.sqrt(2.0 * np.pi))
    if base == "lognormal":
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(np.maximum(x, 1e-300)) - p1) / p2
            dens = np.exp(-0.5 * z * z) / (x * p2 * np.sqrt(2.0 * np.pi))
        return np.where(x > 0, dens, 0.0)
    if base == "poisson":
        integral = (x >= 0) & (x == np.round(x))
        k = np.where(integral, x, 0.0)
        logpmf = special.xlogy(k, p1) - p1 - special.gammaln(k + 1)
        return np.where(integral, np.exp(logpmf), 0.0)
    if base == "negbin":
        r, prob = p2, _negbin_prob(p1, p2)
        integral = (x >= 0) & (x == np.round(x))
        k = np.where(integral, x, 0.0)
        logpmf = (
            special.gammaln(k + r)
            - special.gammaln(r)
            - special.gammaln(k + 1)
            + special.xlogy(r, prob)
            + special.xlog1py(k, -prob)
        )
        return np.where(integral, np.exp(logpmf), 0.0)
    raise ParameterError(f"unknown base family {base!r}")


def base_mean(base, p1, p2=None):
    if base == "gumbel":
        return p1 + EULER_GAMMA * p2
    if base == "normal":
        return p1
    if base == "lognormal":
        return np.exp(p1 + 0.5 * p2 * p2)
    if base in ("poisson", "negbin"):
        return p1
    raise ParameterError(f"unknown base family {base!r}")


def _negbin_prob(mean, size):
    return size / (size + mean)


def param_role_slots(family: FamilyId, values):
    """Map per-parameter values onto fixed role slots.

    Slot 1 and 2 hold the base parameters (slot 2 empty for poisson), slot 3
    the mixture weight, slot 4 the shift; absent slots are None. Used by CSV
    layouts that keep one column per role.
    """
    values = list(values)
    if len(values) != family.n_params:
        raise ParameterError(f"{family.label()} expects {family.n_params} values")
    n_base = len(BASE_PARAMS[family.base])
    slots = [values[0], values[1] if n_base == 2 else None, None, None]
    if family.mixture:
        slots[2] = values[n_base]
    if family.shifted:
        slots[3] = values[-1]
    return slots


def _unpack(spec: DistributionSpec):
    bt = spec.base_theta
    p2 = bt[1] if len(bt) == 2 else None
    return spec.family.base, bt[0], p2, spec.point_weight, spec.shift


def _scalarize(value, scalar_input):
    return float(value) if scalar_input else value


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def density(spec: DistributionSpec, x):
    """Continuous-component density (pmf for discrete bases) at ``x``.

    For mixtures the point mass at the anchor is excluded here and the
    remaining component is scaled by ``1 - w``; see
    :meth:`TruncatedDiscreteView.pmf` for the combined integer pmf.
    """
    scalar = np.isscalar(x)
    base, p1, p2, w, s = _unpack(spec)
    val = (1.0 - w) * base_pdf(base, np.asarray(x, dtype=float) - s, p1, p2)
    return _scalarize(val, scalar)


def cdf(spec: DistributionSpec, x):
    """Mixture CDF: ``w * 1[x >= anchor] + (1 - w) * F_base(x - shift)``."""
    scalar = np.isscalar(x)
    base, p1, p2, w, s = _unpack(spec)
    x = np.asarray(x, dtype=float)
    val = (1.0 - w) * base_cdf(base, x - s, p1, p2)
    if spec.family.mixture:
        val = val + w * (x >= spec.anchor)
    return _scalarize(val, scalar)


def quantile(spec: DistributionSpec, p) -> float:
    """Generalized inverse CDF: the smallest x with cdf(x) >= p.

    Pure bases use closed forms / native inverses; mixtures are inverted by
    bisection (tolerance 1e-9) around the jump at the anchor.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ParameterError("quantile level must lie strictly between 0 and 1")
    base, p1, p2, w, s = _unpack(spec)
    if not spec.family.mixture:
        return float(base_ppf(base, p, p1, p2)) + s
    if w >= 1.0:
        return float(spec.anchor)

    anchor = float(spec.anchor)
    lo = min(float(base_ppf(base, 1e-12, p1, p2)) + s, anchor - 1.0)
    hi = max(float(base_ppf(base, 1.0 - 1e-12, p1, p2)) + s, anchor + 1.0)
    while cdf(spec, lo) >= p:  # expand downward until strictly below target
        lo -= max(1.0, hi - lo)
    while cdf(spec, hi) < p:
        hi += max(1.0, hi - lo)
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if cdf(spec, mid) >= p:
            hi = mid
        else:
            lo = mid
    if abs(hi - anchor) <= 1e-6 and cdf(spec, anchor) >= p > cdf(spec, anchor - 1e-9):
        return anchor
    return hi


def mean(spec: DistributionSpec) -> float:
    """Mixture mean: ``w * anchor + (1 - w) * (base mean + shift)``."""
    base, p1, p2, w, s = _unpack(spec)
    point = w * spec.anchor if spec.family.mixture else 0.0
    return float(point + (1.0 - w) * (base_mean(base, p1, p2) + s))


def variance(spec: DistributionSpec) -> float:
    """Variance of the (untruncated) mixture."""
    base, p1, p2, w, s = _unpack(spec)
    if base == "gumbel":
        base_var = (np.pi * p2) ** 2 / 6.0
    elif base == "normal":
        base_var = p2 * p2
    elif base == "lognormal":
        base_var = (np.exp(p2 * p2) - 1.0) * np.exp(2.0 * p1 + p2 * p2)
    elif base == "poisson":
        base_var = p1
    else:  # negbin
        base_var = p1 + p1 * p1 / p2
    m_base = base_mean(base, p1, p2) + s
    m = mean(spec)
    point = w * spec.anchor**2 if spec.family.mixture else 0.0
    second = point + (1.0 - w) * (base_var + m_base * m_base)
    return float(second - m * m)


def sample(spec: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` values: anchor with probability w, else base inverse transform."""
    if n < 1:
        raise ParameterError("sample count must be positive")
    base, p1, p2, w, s = _unpack(spec)
    if not spec.family.mixture:
        return np.asarray(base_ppf(base, rng.random(n), p1, p2), dtype=float) + s
    pick_point = rng.random(n) < w
    draws = np.asarray(base_ppf(base, rng.random(n), p1, p2), dtype=float) + s
    return np.where(pick_point, float(spec.anchor), draws)


def discretize(spec: DistributionSpec) -> "TruncatedDiscreteView":
    """Project the spec onto nonnegative integers; see TruncatedDiscreteView."""
    return TruncatedDiscreteView(spec)


class TruncatedDiscreteView:
    """The spec restricted to k = 0, 1, 2, ... by half-integer binning.

    ``pmf(k) = [w * 1[k == anchor] + (1 - w) * (F(k + 1/2) - F(k - 1/2))] / Z``
    where F is the shifted base CDF and Z renormalizes mass lost below -0.5.
    """

    def __init__(self, spec: DistributionSpec):
        self.spec = spec
        base, p1, p2, w, s = _unpack(spec)
        self._base, self._p1, self._p2, self._w, self._s = base, p1, p2, w, s
        self._below = float(base_cdf(base, -0.5 - s, p1, p2))
        z = w + (1.0 - w) * (1.0 - self._below)
        if z <= _TRUNCATION_EPS:
            raise DegenerateTruncationError(
                "distribution places essentially all mass below zero"
            )
        self.normalizer = float(z)

    def _edge_cdf(self, edge):
        return base_cdf(self._base, np.asarray(edge, dtype=float) - self._s,
                        self._p1, self._p2)

    def _cont_mass_upto(self, k):
        """Retained continuous mass on [0, k], i.e. (1-w)(F(k+1/2) - F(-1/2))."""
        return (1.0 - self._w) * (self._edge_cdf(np.asarray(k, dtype=float) + 0.5)
                                  - self._below)

    def pmf(self, k):
        scalar = np.isscalar(k)
        k = np.asarray(k, dtype=float)
        lo = self._edge_cdf(k - 0.5)
        hi = self._edge_cdf(k + 0.5)
        mass = (1.0 - self._w) * (hi - np.maximum(lo, self._below))
        mass = np.maximum(mass, 0.0)
        if self.spec.family.mixture:
            mass = mass + self._w * (k == self.spec.anchor)
        valid = (k >= 0) & (k == np.round(k))
        out = np.where(valid, mass / self.normalizer, 0.0)
        return _scalarize(out, scalar)

    def mean(self, tail_q: float = 1e-13) -> float:
        """Truncated-view mean by pmf summation up to the 1 - tail_q quantile."""
        hi = float(base_ppf(self._base, 1.0 - tail_q, self._p1, self._p2)) + self._s
        kmax = int(np.ceil(max(hi, 1.0))) + 2
        if self.spec.family.mixture:
            kmax = max(kmax, int(self.spec.anchor) + 2)
        if kmax > 50_000_000:
            raise ParameterError("truncated-mean summation range is too large")
        total = 0.0
        for start in range(0, kmax + 1, 1_000_000):
            ks = np.arange(start, min(start + 1_000_000, kmax + 1))
            total += float(np.sum(ks * self.pmf(ks)))
        return total

    def quantile(self, q):
        """Smallest integer k >= 0 whose truncated CDF reaches q."""
        scalar = np.isscalar(q)
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((q < 0.0) | (q >= 1.0)):
            raise ParameterError("discrete quantile levels must lie in [0, 1)")
        target = q * self.normalizer
        if self.spec.family.mixture and self._w > 0.0:
            anchor = int(self.spec.anchor)
            below_anchor = float(self._cont_mass_upto(anchor - 1)) if anchor > 0 else 0.0
            through_anchor = float(self._cont_mass_upto(anchor)) + self._w
            out = np.full(target.shape, anchor, dtype=np.int64)
            m_lo = target <= below_anchor
            m_hi = target > through_anchor
            if m_lo.any():
                out[m_lo] = self._invert_cont(target[m_lo])
            if m_hi.any():
                out[m_hi] = self._invert_cont(target[m_hi] - self._w)
        else:
            out = self._invert_cont(target)
        out = np.asarray(out, dtype=np.int64)
        return int(out[0]) if scalar else out

    def _invert_cont(self, tau):
        """Smallest k with retained continuous mass on [0, k] >= tau."""
        rel = np.clip(self._below + tau / max(1.0 - self._w, 1e-300), 0.0, 1.0)
        rel = np.minimum(rel, 1.0 - 1e-16)
        x = np.asarray(base_ppf(self._base, rel, self._p1, self._p2), dtype=float)
        if self.spec.family.discrete:
            k = np.asarray(x + self._s, dtype=np.int64)
        else:
            k = np.asarray(np.ceil(x + self._s - 0.5), dtype=np.int64)
        k = np.maximum(k, 0)
        for _ in range(4):  # absorb floating-point edge misses
            down = (k > 0) & (self._cont_mass_upto(k - 1) >= tau)
            k = np.where(down, k - 1, k)
            up = self._cont_mass_upto(k) < tau
            k = np.where(up, k + 1, k)
            if not (down.any() or up.any()):
                break
        return k

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n integer draws by inverse transform on the truncated pmf."""
        if n < 1:
            raise ParameterError("sample count must be positive")
        return self.quantile(rng.random(n))
