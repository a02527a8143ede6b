import numpy as np
import pytest

from uncertain_events import load_bundle
from uncertain_events.fitting import bin_mass
from uncertain_events.survey import CoderDistribution, default_bins


@pytest.fixture(scope="session")
def table2_bundle():
    return load_bundle()


def synthetic_coder(coder_id, violence_type, context, reported_value, spec,
                    bins=None):
    """Coder distribution whose bin probabilities come from binning `spec`."""
    bins = tuple(bins) if bins is not None else default_bins(reported_value)
    probs = tuple(float(p) for p in bin_mass(spec, bins))
    return CoderDistribution(coder_id, violence_type, context, reported_value,
                             bins, probs)


def survey_csv_text(distributions) -> str:
    """Serialize coder distributions into the survey CSV schema."""
    lines = ["coder_id,violence_type,context,reported_value,bin_lo,bin_hi,weight"]
    for d in distributions:
        for b, p in zip(d.bins, d.probs):
            hi = "" if b.hi is None else b.hi
            lines.append(f"{d.coder_id},{d.violence_type},{d.context},"
                         f"{d.reported_value},{b.lo},{hi},{float(p)!r}")
    return "\n".join(lines) + "\n"


def events_csv_text(events) -> str:
    lines = ["event_id,reported_value,violence_type,country,year,context"]
    for e in events:
        lines.append(f"{e.event_id},{e.reported_value},{e.violence_type},"
                     f"{e.country or ''},{e.year or ''},{e.context or ''}")
    return "\n".join(lines) + "\n"


def perturbed_theta(rng, base_theta, rel=0.1):
    """Jitter a parameter vector multiplicatively (weights clipped to [0,1])."""
    out = []
    for value in base_theta:
        out.append(value * float(rng.uniform(1 - rel, 1 + rel)))
    return tuple(out)
