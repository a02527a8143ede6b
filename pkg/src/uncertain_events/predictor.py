"""Conditional plausible-fatality distributions for arbitrary events.

Given a coefficient bundle and a reported value, expose the predicted
distribution, integer draws, density tables, and the under-reporting curve.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CovariateError, SchemaError
from .families import DistributionSpec, discretize, mean, quantile, sample
from .regression import CoefficientBundle, predict_theta
from .rng import substream
from .survey import VIOLENCE_TYPES

__all__ = [
    "EventRecord", "conditional", "event_draws", "pmf_table",
    "underreporting_curve", "read_events_csv", "write_draws_csv",
    "write_curve_csv",
]


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    reported_value: int
    violence_type: str
    country: str | None = None
    year: int | None = None
    context: str | None = None

    def __post_init__(self):
        if self.reported_value < 0:
            raise SchemaError("reported value must be nonnegative")
        if self.violence_type not in VIOLENCE_TYPES:
            raise SchemaError(f"unknown violence type {self.violence_type!r}")


def conditional(bundle: CoefficientBundle, event: EventRecord,
                allow_fallback: bool = True) -> DistributionSpec:
    """Predicted distribution for one event, anchored at its reported value.

    If the bundle covers a different violence type it is still used when
    ``allow_fallback`` (with a warning); only the state-based table ships
    with the package, so ns/os queries fall back to it by default.
    """
    if bundle.violence_type not in ("all", event.violence_type):
        if not allow_fallback:
            raise CovariateError(
                f"bundle covers {bundle.violence_type!r} but event "
                f"{event.event_id!r} is {event.violence_type!r}"
            )
        warnings.warn(
            f"no {event.violence_type!r} bundle available; falling back to "
            f"the {bundle.violence_type!r} coefficients",
            stacklevel=2,
        )
    z = {"context": event.context} if event.context is not None else None
    return predict_theta(bundle, event.reported_value, z)


def event_draws(bundle: CoefficientBundle, events, n: int, seed: int,
                integer: bool = True) -> list:
    """``n`` reproducible draws per event as (event_id, draw_index, value) rows.

    Draws are nonnegative integers from the discretized view; pass
    ``integer=False`` for raw continuous mixture draws.
    """
    if n < 1:
        raise SchemaError("draws per event must be positive")
    rows = []
    for event in events:
        rng = substream(seed, "draws", event.event_id)
        spec = conditional(bundle, event)
        if integer:
            values = discretize(spec).sample(rng, n)
        else:
            values = sample(spec, rng, n)
        rows.extend((event.event_id, index, value)
                    for index, value in enumerate(values))
    return rows


def pmf_table(bundle: CoefficientBundle, event: EventRecord,
              max_quantile: float = 0.9999) -> list:
    """Integer pmf of the predicted distribution up to a tail cutoff."""
    view = discretize(conditional(bundle, event))
    upper = int(view.quantile(max_quantile))
    ks = np.arange(0, upper + 1)
    return list(zip(ks.tolist(), view.pmf(ks).tolist()))


def underreporting_curve(bundle: CoefficientBundle, grid, z=None) -> list:
    """Per reported value: mixture mean (untruncated and truncated) and the
    2.5/50/97.5 percentiles of the untruncated mixture."""
    if len(grid) == 0:
        raise SchemaError("grid of reported values is empty")
    rows = []
    for reported in grid:
        spec = predict_theta(bundle, int(reported), z)
        rows.append((
            int(reported),
            mean(spec),
            discretize(spec).mean(),
            quantile(spec, 0.025),
            quantile(spec, 0.5),
            quantile(spec, 0.975),
        ))
    return rows


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

_EVENT_COLUMNS = ("event_id", "reported_value", "violence_type")
_EVENT_OPTIONAL = ("country", "year", "context")


def read_events_csv(source) -> list:
    """Read events from `event_id,reported_value,violence_type[,country,year,context]`."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        text = Path(source).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        return []
    header = [h.strip() for h in header]
    if tuple(header[:3]) != _EVENT_COLUMNS or \
            any(h not in _EVENT_OPTIONAL for h in header[3:]):
        raise SchemaError(
            "events CSV must start with "
            + ",".join(_EVENT_COLUMNS)
            + " and may add "
            + ",".join(_EVENT_OPTIONAL)
        )
    events = []
    for number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        values = dict(zip(header, (cell.strip() for cell in row)))
        try:
            events.append(EventRecord(
                values["event_id"],
                int(values["reported_value"]),
                values["violence_type"],
                country=values.get("country") or None,
                year=int(values["year"]) if values.get("year") else None,
                context=values.get("context") or None,
            ))
        except (KeyError, ValueError, SchemaError) as exc:
            raise SchemaError(f"events CSV row {number}: {exc}") from exc
    return events


def write_draws_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("event_id", "draw_index", "value"))
    for event_id, index, value in rows:
        value = int(value) if float(value).is_integer() else repr(float(value))
        writer.writerow((event_id, str(index), str(value)))
    return buf.getvalue()


def write_curve_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("reported", "mean_untruncated", "mean_truncated",
                     "p025", "p50", "p975"))
    for reported, mean_u, mean_t, p025, p50, p975 in rows:
        writer.writerow((str(reported), repr(float(mean_u)), repr(float(mean_t)),
                         repr(float(p025)), repr(float(p50)), repr(float(p975))))
    return buf.getvalue()


def write_pmf_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("value", "pmf"))
    for k, p in rows:
        writer.writerow((str(int(k)), repr(float(p))))
    return buf.getvalue()
