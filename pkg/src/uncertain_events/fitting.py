"""Stage 1: match a parametric family to each coder distribution.

Fitness is the Binned Absolute Difference (BAD): the L1 distance between the
coder's bin probabilities and the candidate distribution's mass binned on the
same fatality ranges (range 0..2). Optimization is a seeded genetic algorithm;
derivatives of the mixture families across the binning are messy, a GA is not.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, DegenerateTruncationError, ParameterError, SchemaError
from .families import (BASE_PARAMS, DistributionSpec, FamilyId, base_cdf,
                       param_role_slots)
from .rng import substream
from .survey import CoderDistribution

BAD_WORST = 2.0

_PARAM_BOUNDS = {
    "location": lambda m: (0.0, 20.0 * m),
    "scale": lambda m: (1e-3, 10.0 * m),
    "meanlog": lambda m: (math.log(1e-3), math.log(20.0 * m)),
    "sdlog": lambda m: (1e-3, 10.0),
    "rate": lambda m: (1e-3, 20.0 * m),
    "mean": lambda m: (1e-3, 20.0 * m),
    "size": lambda m: (1e-3, 1e3),
    "point_weight": lambda m: (0.0, 1.0),
    "shift": lambda m: (-m, m),
}


def default_bounds(family: FamilyId, reported_value: int) -> tuple:
    """Search bounds per parameter, anchored on the reported value."""
    m = float(max(reported_value, 5))
    return tuple(_PARAM_BOUNDS[name](m) for name in family.param_names)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    generations: int = 100
    tournament_size: int = 4
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    mutation_scale: tuple | None = None  # per-parameter sd; default 5% of bound width
    seed: int = 0
    bounds: tuple | None = None  # per-parameter (lo, hi); default from reported value

    def __post_init__(self):
        if self.population_size < 2:
            raise ParameterError("population size must be at least 2")
        if self.generations < 1:
            raise ParameterError("generations must be at least 1")
        if self.tournament_size < 1:
            raise ParameterError("tournament size must be at least 1")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ParameterError(f"bad bound ({lo}, {hi})")


@dataclass(frozen=True)
class FittedTheta:
    """Optimal parameters for one (family, coder, reported value) cell."""

    coder_id: str
    violence_type: str
    context: str
    reported_value: int
    family: FamilyId
    theta: tuple
    bad: float

    def spec(self) -> DistributionSpec:
        anchor = self.reported_value if self.family.mixture else None
        return DistributionSpec(self.family, self.theta, anchor=anchor)


def binned_masses(family: FamilyId, thetas, bins, anchor):
    """Bin masses for a batch of parameter vectors.

    Returns ``(masses, normalizer)`` with shapes (n, n_bins) and (n,). Rows
    with a degenerate truncation (normalizer ~ 0) are returned as NaN rather
    than raising, so a GA population can contain them.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n, width = thetas.shape
    if width != family.n_params:
        raise ParameterError(f"{family.label()} expects {family.n_params} parameters")
    n_base = len(BASE_PARAMS[family.base])
    p1 = thetas[:, 0:1]
    p2 = thetas[:, 1:2] if n_base == 2 else None
    w = thetas[:, n_base : n_base + 1] if family.mixture else np.zeros((n, 1))
    s = thetas[:, -1:] if family.shifted else np.zeros((n, 1))
    if family.shifted and family.discrete:
        s = np.round(s)

    lows = np.array([b.lo for b in bins], dtype=float) - 0.5
    highs = np.array([b.upper for b in bins], dtype=float) + 0.5
    unbounded = np.isinf(highs)
    hi_eval = np.where(unbounded, 0.0, highs)

    with np.errstate(all="ignore"):
        f_hi = base_cdf(family.base, hi_eval[None, :] - s, p1, p2)
        f_hi = np.where(unbounded[None, :], 1.0, f_hi)
        f_lo = base_cdf(family.base, lows[None, :] - s, p1, p2)
        below = base_cdf(family.base, -0.5 - s, p1, p2)
        cont = (1.0 - w) * (f_hi - np.maximum(f_lo, below))
        masses = cont
        if family.mixture:
            inbin = np.array([float(b.contains(anchor)) for b in bins])
            masses = cont + w * inbin[None, :]
        normalizer = w[:, 0] + (1.0 - w[:, 0]) * (1.0 - below[:, 0])
        masses = masses / normalizer[:, None]
    usable = normalizer > 1e-12
    masses = np.where(usable[:, None], masses, np.nan)
    return masses, normalizer


def bin_mass(spec: DistributionSpec, bins) -> np.ndarray:
    """Probability assigned by the spec to each bin (truncated-renormalized)."""
    anchor = spec.anchor if spec.family.mixture else None
    masses, normalizer = binned_masses(spec.family, [spec.theta], bins, anchor)
    if not normalizer[0] > 1e-12:
        raise DegenerateTruncationError(
            "distribution places essentially all mass below zero"
        )
    return masses[0]


def bad_score(mass_a, mass_b) -> float:
    """L1 distance between two binned mass vectors (0 identical .. 2 disjoint)."""
    a = np.asarray(mass_a, dtype=float)
    b = np.asarray(mass_b, dtype=float)
    if a.shape != b.shape:
        raise ContractError("mass vectors are binned differently")
    return float(np.abs(a - b).sum())


def bad(spec: DistributionSpec, coder: CoderDistribution) -> float:
    """BAD score between a spec and a coder distribution on the coder's bins."""
    if spec.family.mixture and spec.anchor != coder.reported_value:
        raise ContractError(
            f"spec anchored at {spec.anchor} but coder reported {coder.reported_value}"
        )
    return bad_score(coder.probs, bin_mass(spec, coder.bins))


def _decode(family: FamilyId, genes: np.ndarray) -> tuple:
    theta = [float(g) for g in genes]
    if family.shifted and family.discrete:
        theta[-1] = float(round(theta[-1]))
    return tuple(theta)


def evolve(family: FamilyId, coder: CoderDistribution, cfg: GaConfig,
           rng: np.random.Generator):
    """Run the GA; returns (theta, bad, best-per-generation history)."""
    bounds = np.asarray(cfg.bounds if cfg.bounds is not None
                        else default_bounds(family, coder.reported_value), dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    n_params = family.n_params
    if len(lo) != n_params:
        raise ParameterError(f"expected {n_params} bounds, got {len(lo)}")
    scale = (np.asarray(cfg.mutation_scale, dtype=float)
             if cfg.mutation_scale is not None else 0.05 * (hi - lo))
    probs = np.asarray(coder.probs, dtype=float)
    anchor = coder.reported_value if family.mixture else None
    n = cfg.population_size

    def snap_genes(pop):
        """Discrete bases take integer shifts; keep the gene integral in-bounds."""
        if family.shifted and family.discrete:
            pop[:, -1] = np.clip(np.round(pop[:, -1]),
                                 math.ceil(lo[-1]), math.floor(hi[-1]))
        return pop

    def fitness_of(pop):
        masses, _ = binned_masses(family, pop, coder.bins, anchor)
        fit = np.abs(masses - probs[None, :]).sum(axis=1)
        valid = np.isfinite(fit)
        return np.where(valid, fit, BAD_WORST), valid

    pop = snap_genes(rng.uniform(lo, hi, size=(n, n_params)))
    history = []
    for generation in range(cfg.generations):
        fitness, valid = fitness_of(pop)
        history.append(float(fitness.min()))
        if generation == cfg.generations - 1:
            break
        elite = int(np.argmin(np.where(valid, fitness, np.inf))) if valid.any() \
            else int(np.argmin(fitness))
        contenders = rng.integers(0, n, size=(n - 1, 2, cfg.tournament_size))
        winners = contenders[
            np.arange(n - 1)[:, None],
            np.arange(2)[None, :],
            np.argmin(fitness[contenders], axis=2),
        ]
        mother, father = pop[winners[:, 0]], pop[winners[:, 1]]
        crossing = rng.random((n - 1, 1)) < cfg.crossover_rate
        take_father = rng.random((n - 1, n_params)) < 0.5
        children = np.where(crossing & take_father, father, mother)
        mutating = rng.random((n - 1, n_params)) < cfg.mutation_rate
        children = children + mutating * rng.normal(0.0, 1.0, (n - 1, n_params)) * scale
        children = snap_genes(np.clip(children, lo, hi))
        pop = np.vstack([pop[elite][None, :], children])

    best = int(np.argmin(fitness))
    return _decode(family, pop[best]), float(fitness[best]), history


def fit_theta(family: FamilyId, coder: CoderDistribution, cfg: GaConfig) -> FittedTheta:
    """Fit one family to one coder distribution; deterministic given cfg.seed."""
    rng = substream(cfg.seed, "ga", family.label(), coder.coder_id,
                    coder.violence_type, coder.context, coder.reported_value)
    theta, score, _ = evolve(family, coder, cfg, rng)
    return FittedTheta(coder.coder_id, coder.violence_type, coder.context,
                       coder.reported_value, family, theta, score)


@dataclass
class FitResults:
    fits: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (family label, coder key, message)


def fit_all(families, coders, cfg: GaConfig, threads: int = 1) -> FitResults:
    """Fit every (family, coder distribution) cell.

    Each cell derives its own random stream from (seed, family, coder, ...),
    so results are identical for any thread count or scheduling order.
    """
    cells = [(fam, coder) for fam in sorted(families, key=lambda f: f.label())
             for coder in coders]
    results = FitResults()
    if not cells:
        return results

    def run(cell):
        fam, coder = cell
        try:
            return fit_theta(fam, coder, cfg), None
        except (ParameterError, DegenerateTruncationError, ContractError) as exc:
            key = (coder.coder_id, coder.violence_type, coder.context,
                   coder.reported_value)
            return None, (fam.label(), key, str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, cells))
    else:
        outcomes = [run(cell) for cell in cells]
    for fit, failure in outcomes:
        if fit is not None:
            results.fits.append(fit)
        else:
            results.failures.append(failure)
    return results


# ---------------------------------------------------------------------------
# fitted-theta CSV interchange
# ---------------------------------------------------------------------------

_FIT_COLUMNS = ("coder_id", "violence_type", "context", "reported_value",
                "family", "mixture", "shifted", "theta1", "theta2", "theta3",
                "theta4", "bad")


def write_fits_csv(fits) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_FIT_COLUMNS)
    for fit in fits:
        slots = ["" if v is None else repr(float(v))
                 for v in param_role_slots(fit.family, fit.theta)]
        writer.writerow([
            fit.coder_id, fit.violence_type, fit.context,
            str(fit.reported_value), fit.family.base,
            str(fit.family.mixture).lower(), str(fit.family.shifted).lower(),
            *slots, repr(float(fit.bad)),
        ])
    return buf.getvalue()


def read_fits_csv(source) -> list[FittedTheta]:
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        text = Path(source).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != list(_FIT_COLUMNS):
        raise SchemaError("fitted-theta CSV header does not match schema")
    fits = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        (coder, tov, context, reported, base, mixture, shifted,
         t1, t2, t3, t4, score) = row
        family = FamilyId(base, mixture=mixture == "true", shifted=shifted == "true")
        theta = [float(t1)]
        if len(BASE_PARAMS[base]) == 2:
            theta.append(float(t2))
        if family.mixture:
            theta.append(float(t3))
        if family.shifted:
            theta.append(float(t4))
        fits.append(FittedTheta(coder, tov, context, int(reported), family,
                                tuple(theta), float(score)))
    return fits
