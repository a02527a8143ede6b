"""Monte Carlo aggregation of plausible fatalities over an event set.

Each replicate draws one integer value per event from its predicted
distribution and sums them; events are drawn independently.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .families import discretize
from .predictor import conditional
from .regression import CoefficientBundle
from .rng import substream

DEFAULT_REPLICATES = 1000


@dataclass(frozen=True)
class AggregateResult:
    totals: np.ndarray
    reported_sum: int


def aggregate(bundle: CoefficientBundle, events, replicates: int = DEFAULT_REPLICATES,
              seed: int = 0) -> AggregateResult:
    """Distribution of the total over ``events`` from ``replicates`` sums.

    Per-event draw streams are keyed by (seed, event id), so replicate r of
    the total reuses draw r of each event regardless of scheduling.
    """
    events = list(events)
    if not events:
        raise InsufficientDataError("event set is empty")
    if replicates < 1:
        raise InsufficientDataError("replicates must be positive")
    totals = np.zeros(replicates, dtype=np.int64)
    for event in events:
        rng = substream(seed, "draws", event.event_id)
        view = discretize(conditional(bundle, event))
        totals = totals + view.sample(rng, replicates)
    return AggregateResult(totals, int(sum(e.reported_value for e in events)))


def summarize(result: AggregateResult) -> dict:
    """Reported sum plus mean/median/p90/p10/min/max of the totals."""
    totals = np.asarray(result.totals)
    if totals.size == 0:
        raise InsufficientDataError("no replicate totals to summarize")
    return {
        "reported_sum": int(result.reported_sum),
        "mean": float(np.mean(totals)),
        "median": float(np.median(totals)),
        "p90": float(np.quantile(totals, 0.9)),
        "p10": float(np.quantile(totals, 0.1)),
        "min": int(totals.min()),
        "max": int(totals.max()),
    }


def write_totals_csv(result: AggregateResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("replicate", "total"))
    for index, total in enumerate(result.totals):
        writer.writerow((str(index), str(int(total))))
    return buf.getvalue()


def write_summary_csv(result: AggregateResult) -> str:
    summary = summarize(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(summary.keys())
    writer.writerow(
        str(v) if isinstance(v, int) else repr(v) for v in summary.values()
    )
    return buf.getvalue()
