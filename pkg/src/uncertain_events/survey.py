"""Elicited coder beliefs: bin layouts, normalization, and CSV ingestion.

A coder distribution is one coder's binned subjective probability over the
true fatality count of an event, given the reported value, the violence type
(sb/ns/os) and the information context (good/bad).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyBeliefError, IngestError, SchemaError

log = logging.getLogger(__name__)

VIOLENCE_TYPES = ("sb", "ns", "os")
CONTEXTS = ("good", "bad")

#: reported values covered by the elicitation questionnaire
SURVEYED_LEVELS = (
    0, 1, 2, 3, 13, 20, 24, 40, 47, 100, 101, 200, 201,
    1000, 1001, 2000, 2001, 10_000, 100_000,
)

#: reported values with their own indicator in the regression stage
SPECIAL_VALUES = (2, 3, 13, 20, 24, 40, 101, 200, 1001, 2000)

#: response label -> probability interval offered by the questionnaire slider
LIKERT_INTERVALS = {
    "extremely likely": (0.90, 1.00),
    "somewhat likely": (0.60, 0.90),
    "neither likely nor unlikely": (0.40, 0.60),
    "somewhat unlikely": (0.10, 0.40),
    "extremely unlikely": (0.00, 0.10),
}
_LIKERT_ALIASES = {"neither": "neither likely nor unlikely"}


@dataclass(frozen=True)
class SurveyDesign:
    surveyed_levels: tuple[int, ...] = SURVEYED_LEVELS
    special_values: tuple[int, ...] = SPECIAL_VALUES
    likert_intervals: dict = None

    def __post_init__(self):
        if self.likert_intervals is None:
            object.__setattr__(self, "likert_intervals", dict(LIKERT_INTERVALS))
        if not set(self.special_values) <= set(self.surveyed_levels):
            raise SchemaError("special values must be surveyed levels")


@dataclass(frozen=True, order=True)
class FatalityBin:
    """Inclusive integer range [lo, hi]; hi=None means unbounded above."""

    lo: int
    hi: int | None = None

    def __post_init__(self):
        if self.lo < 0:
            raise SchemaError("bin lower bound must be nonnegative")
        if self.hi is not None and self.hi < self.lo:
            raise SchemaError(f"bin [{self.lo}, {self.hi}] has hi < lo")

    @property
    def upper(self) -> float:
        return math.inf if self.hi is None else float(self.hi)

    @property
    def singleton(self) -> bool:
        return self.hi == self.lo

    def contains(self, k: int) -> bool:
        return self.lo <= k and (self.hi is None or k <= self.hi)

    def __str__(self):
        return f"[{self.lo}, {'inf' if self.hi is None else self.hi}]"


def _check_bins(bins, reported_value):
    """Bins must be disjoint, ordered, cover [0, inf) and isolate {reported}."""
    problems = []
    if not bins:
        return ["no bins"]
    if bins[0].lo != 0:
        problems.append("coverage does not start at 0")
    for prev, cur in zip(bins, bins[1:]):
        if prev.hi is None:
            problems.append(f"bin {prev} is unbounded but not last")
            break
        if cur.lo != prev.hi + 1:
            kind = "overlap" if cur.lo <= prev.hi else f"gap [{prev.hi + 1}, {cur.lo - 1}]"
            problems.append(f"{kind} between {prev} and {cur}")
    if bins[-1].hi is not None:
        problems.append(f"coverage does not extend to infinity after {bins[-1]}")
    singletons = [b for b in bins if b.singleton and b.lo == reported_value]
    if len(singletons) != 1:
        problems.append(f"expected exactly one singleton bin {{{reported_value}}}")
    return problems


@dataclass(frozen=True)
class CoderDistribution:
    """One coder's binned belief for one (violence type, context, reported value)."""

    coder_id: str
    violence_type: str
    context: str
    reported_value: int
    bins: tuple[FatalityBin, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if self.violence_type not in VIOLENCE_TYPES:
            raise SchemaError(f"unknown violence type {self.violence_type!r}")
        if self.context not in CONTEXTS:
            raise SchemaError(f"unknown context {self.context!r}")
        if self.reported_value < 0:
            raise SchemaError("reported value must be nonnegative")
        object.__setattr__(self, "bins", tuple(self.bins))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.bins) != len(self.probs):
            raise SchemaError("bins and probabilities differ in length")
        if any(p < 0 for p in self.probs):
            raise SchemaError("bin probabilities must be nonnegative")
        problems = _check_bins(self.bins, self.reported_value)
        if problems:
            raise SchemaError("; ".join(problems))

    @property
    def total(self) -> float:
        return float(sum(self.probs))


def normalize(raw: CoderDistribution) -> CoderDistribution:
    """Divide every bin weight by the total; bins and order are unchanged."""
    total = raw.total
    if total <= 0.0:
        raise EmptyBeliefError(
            f"coder {raw.coder_id}: all bin weights are zero for "
            f"reported value {raw.reported_value}"
        )
    if abs(total - 1.0) <= 1e-12:  # already normalized; keep idempotence exact
        return raw
    probs = tuple(p / total for p in raw.probs)
    return CoderDistribution(raw.coder_id, raw.violence_type, raw.context,
                             raw.reported_value, raw.bins, probs)


def likert_to_weight(label: str) -> float:
    """Midpoint of the label's probability interval (normalized downstream)."""
    key = " ".join(str(label).strip().lower().split())
    key = _LIKERT_ALIASES.get(key, key)
    if key not in LIKERT_INTERVALS:
        raise SchemaError(f"unknown response label {label!r}")
    lo, hi = LIKERT_INTERVALS[key]
    return 0.5 * (lo + hi)


# The questionnaire published the exact layout only for a reported value of
# 13 (and the collapsed one for 0); other levels use a geometric layout
# anchored on those, with degenerate bins dropped.
_LAYOUT_13 = ((0, 0), (1, 3), (4, 12), (13, 13), (14, 24), (25, 50), (51, None))
_LAYOUT_0 = ((0, 0), (1, 3), (4, 12), (13, None))


def default_bins(reported_value: int) -> tuple[FatalityBin, ...]:
    """Default questionnaire bin layout for one reported value."""
    y = int(reported_value)
    if y < 0:
        raise SchemaError("reported value must be nonnegative")
    if y == 13:
        return tuple(FatalityBin(lo, hi) for lo, hi in _LAYOUT_13)
    if y == 0:
        return tuple(FatalityBin(lo, hi) for lo, hi in _LAYOUT_0)
    quarter = min(math.ceil(y / 4), y - 1)
    candidates = [
        (0, 0),
        (1, quarter),
        (quarter + 1, y - 1),
        (y, y),
        (y + 1, 2 * y - 2),
        (2 * y - 1, 4 * y - 2),
        (4 * y - 1, None),
    ]
    bins = []
    cursor = 0
    for lo, hi in candidates:
        lo = max(lo, cursor)
        if hi is not None and hi < lo:
            continue
        bins.append(FatalityBin(lo, hi))
        cursor = lo + 1 if hi is None else hi + 1
    return tuple(bins)


_SURVEY_COLUMNS = ("coder_id", "violence_type", "context", "reported_value",
                   "bin_lo", "bin_hi", "weight")


def _parse_weight(raw: str) -> float:
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        return likert_to_weight(raw)


def ingest_survey(source) -> list[CoderDistribution]:
    """Read a survey CSV into normalized coder distributions.

    ``source`` is a path or an open text stream. One distribution is built
    per (coder, violence type, context, reported value) group; every
    validation failure is collected and raised as a single
    :class:`IngestError` naming the offending rows.
    """
    if hasattr(source, "read"):
        return _ingest_rows(csv.reader(source))
    with Path(source).open(newline="", encoding="utf-8") as fh:
        return _ingest_rows(csv.reader(fh))


def ingest_survey_text(text: str) -> list[CoderDistribution]:
    return ingest_survey(io.StringIO(text))


def _ingest_rows(reader) -> list[CoderDistribution]:
    header = next(reader, None)
    if header is None:
        log.warning("survey file is empty")
        return []
    header = [h.strip() for h in header]
    if header != list(_SURVEY_COLUMNS):
        raise IngestError(
            [f"row 1: expected header {','.join(_SURVEY_COLUMNS)}, got {','.join(header)}"]
        )

    groups: dict[tuple, list] = {}
    problems: list[str] = []
    for number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(_SURVEY_COLUMNS):
            problems.append(f"row {number}: expected {len(_SURVEY_COLUMNS)} fields")
            continue
        coder, tov, context, reported, lo, hi, weight = (cell.strip() for cell in row)
        try:
            key = (coder, tov, context, int(reported))
            entry = (number, FatalityBin(int(lo), None if hi == "" else int(hi)),
                     _parse_weight(weight))
        except (ValueError, SchemaError) as exc:
            problems.append(f"row {number}: {exc}")
            continue
        groups.setdefault(key, []).append(entry)

    distributions = []
    for (coder, tov, context, reported), entries in groups.items():
        entries.sort(key=lambda e: (e[1].lo, e[1].upper))
        rows = ", ".join(str(e[0]) for e in entries)
        bins = tuple(e[1] for e in entries)
        probs = tuple(e[2] for e in entries)
        try:
            dist = CoderDistribution(coder, tov, context, reported, bins, probs)
            distributions.append(normalize(dist))
        except (SchemaError, EmptyBeliefError) as exc:
            problems.append(f"rows {rows} (coder {coder}, reported {reported}): {exc}")

    if problems:
        raise IngestError(problems)
    if not distributions:
        log.warning("survey file contained no data rows")
    distributions.sort(key=lambda d: (d.coder_id, d.violence_type, d.context,
                                      d.reported_value))
    return distributions
