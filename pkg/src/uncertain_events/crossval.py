"""Leave-one-coder-out evaluation and configuration ranking.

For each held-out coder the stage-2 regressions are refitted on everyone
else, the held-out coder's events are predicted, and the BAD score of each
prediction is recorded. Configurations are ranked by the median of those
held-out scores (a few extreme scores make the mean less stable).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTruncationError, InsufficientCodersError
from .families import param_role_slots
from .fitting import BAD_WORST, bad
from .regression import ModelSpec, fit_bundle, predict_theta


@dataclass(frozen=True)
class LocoResult:
    model: ModelSpec
    scores: tuple

    @property
    def mean_bad(self) -> float:
        return float(np.mean(self.scores))

    @property
    def median_bad(self) -> float:
        return float(np.median(self.scores))


def loco(fits, coders, model: ModelSpec, w_method: str = "irls") -> LocoResult:
    """Held-out BAD scores for one model specification.

    Both information contexts pool into one score set; filter the inputs
    beforehand to evaluate a single context.
    """
    relevant = [c for c in coders
                if model.violence_type in ("all", c.violence_type)]
    coder_ids = sorted({c.coder_id for c in relevant})
    if len(coder_ids) < 2:
        raise InsufficientCodersError(
            f"leave-one-coder-out needs at least 2 coders, found {len(coder_ids)}"
        )
    scores = []
    for held_out in coder_ids:
        train = [f for f in fits if f.coder_id != held_out]
        bundle = fit_bundle(train, model, w_method=w_method)
        held_dists = sorted(
            (c for c in relevant if c.coder_id == held_out),
            key=lambda c: (c.violence_type, c.context, c.reported_value),
        )
        for dist in held_dists:
            spec = predict_theta(bundle, dist.reported_value,
                                 {"context": dist.context})
            try:
                scores.append(bad(spec, dist))
            except DegenerateTruncationError:
                scores.append(BAD_WORST)  # prediction left ~no mass above zero
    return LocoResult(model, tuple(scores))


def rank_configurations(results) -> list:
    """Sort by median BAD (ties: mean, then family label); adds the relative
    increase of each median over the best one."""
    if not results:
        raise InsufficientCodersError("nothing to rank")
    ordered = sorted(results, key=lambda r: (r.median_bad, r.mean_bad,
                                             r.model.family.label()))
    best = ordered[0].median_bad
    rows = []
    for rank, result in enumerate(ordered, start=1):
        rel = result.median_bad / best if best > 0 else 1.0
        rows.append((rank, result, rel))
    return rows


_RANKING_COLUMNS = ("rank", "family", "mixture", "shifted", "tov",
                    "ivs_theta1", "ivs_theta2", "ivs_theta3", "ivs_theta4",
                    "mean_score", "median_score", "rel_increase_median")


def write_ranking_csv(ranked) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_RANKING_COLUMNS)
    for rank, result, rel in ranked:
        model = result.model
        labels = [cs.label() for cs in model.covariates]
        slots = param_role_slots(model.family, labels)
        writer.writerow([
            str(rank), model.family.base,
            str(model.family.mixture).lower(), str(model.family.shifted).lower(),
            model.violence_type,
            *["" if s is None else s for s in slots],
            repr(result.mean_bad), repr(result.median_bad), repr(float(rel)),
        ])
    return buf.getvalue()
