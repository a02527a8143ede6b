"""CLI subcommands run in-process against the embedded service."""

import numpy as np
import pytest

from uncertain_events.cli import main
from uncertain_events.families import DistributionSpec, FamilyId
from uncertain_events.predictor import EventRecord

from conftest import events_csv_text, survey_csv_text, synthetic_coder


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(70)
    dists = []
    for coder in range(3):
        for y in (1, 13, 100):
            spec = DistributionSpec(
                FamilyId("gumbel", mixture=True),
                (1.3 * y * float(rng.uniform(0.9, 1.1)), 0.5 * y, 0.45),
                anchor=y)
            dists.append(synthetic_coder(f"c{coder}", "sb", "good", y, spec))
    (root / "survey.csv").write_text(survey_csv_text(dists), encoding="utf-8")
    events = [EventRecord("e1", 5, "sb"), EventRecord("e2", 50, "sb")]
    (root / "events.csv").write_text(events_csv_text(events), encoding="utf-8")
    return root


def run(*argv):
    return main([str(a) for a in argv])


class TestFitCommand:
    def test_writes_fits_and_summary(self, workdir, capsys):
        rc = run("fit", "--survey", workdir / "survey.csv",
                 "--families", "gumbel-mix,normal-mix", "--seed", "7",
                 "--population", "40", "--generations", "20",
                 "--out", workdir / "run1")
        assert rc == 0
        out = capsys.readouterr().out
        assert "median BAD" in out and "gumbel-mix" in out
        text = (workdir / "run1" / "fits.csv").read_text(encoding="utf-8")
        assert len(text.strip().split("\n")) == 1 + 2 * 9

    def test_missing_survey_exit_2(self, workdir):
        assert run("fit", "--survey", workdir / "absent.csv",
                   "--seed", "1") == 2

    def test_rerun_same_seed_byte_identical(self, workdir):
        for out in ("runA", "runB"):
            assert run("fit", "--survey", workdir / "survey.csv",
                       "--families", "gumbel-mix", "--seed", "99",
                       "--population", "30", "--generations", "15",
                       "--out", workdir / out) == 0
        a = (workdir / "runA" / "fits.csv").read_bytes()
        b = (workdir / "runB" / "fits.csv").read_bytes()
        assert a == b

    def test_thread_flag_does_not_change_output(self, workdir):
        for out, threads in (("runT1", "1"), ("runT4", "4")):
            assert run("fit", "--survey", workdir / "survey.csv",
                       "--families", "gumbel-mix,gumbel", "--seed", "5",
                       "--population", "30", "--generations", "15",
                       "--threads", threads, "--out", workdir / out) == 0
        assert (workdir / "runT1" / "fits.csv").read_bytes() == \
            (workdir / "runT4" / "fits.csv").read_bytes()


class TestCrossvalCommand:
    def test_ranking_written(self, workdir):
        assert run("fit", "--survey", workdir / "survey.csv",
                   "--families", "gumbel-mix,gumbel", "--seed", "7",
                   "--population", "40", "--generations", "20",
                   "--out", workdir / "cv") == 0
        rc = run("crossval", "--survey", workdir / "survey.csv",
                 "--fits", workdir / "cv" / "fits.csv", "--ivs", "y",
                 "--out", workdir / "cv" / "ranking.csv")
        assert rc == 0
        lines = (workdir / "cv" / "ranking.csv").read_text().strip().split("\n")
        assert lines[0].startswith("rank,family,mixture")
        first = lines[1].split(",")
        assert first[1] == "gumbel" and first[2] == "true"

    def test_tov_filter_excludes_everything(self, workdir):
        rc = run("crossval", "--survey", workdir / "survey.csv",
                 "--fits", workdir / "cv" / "fits.csv", "--ivs", "y",
                 "--tov", "ns", "--out", workdir / "cv" / "ranking_ns.csv")
        assert rc == 3  # survey has no ns coders

    def test_missing_fits_exit_2(self, workdir):
        assert run("crossval", "--survey", workdir / "survey.csv",
                   "--fits", workdir / "nope.csv") == 2


class TestPredictCommand:
    def test_pmf_for_single_reported_value(self, workdir):
        rc = run("predict", "--y", "13", "--out", workdir / "pmf13.csv")
        assert rc == 0
        lines = (workdir / "pmf13.csv").read_text().strip().split("\n")
        values = [line.split(",") for line in lines[1:]]
        best = max(values, key=lambda kv: float(kv[1]))
        assert best[0] == "13"

    def test_curve_grid(self, workdir):
        rc = run("predict", "--grid", "0:1000", "--out", workdir / "curve.csv")
        assert rc == 0
        lines = (workdir / "curve.csv").read_text().strip().split("\n")
        assert len(lines) == 1002

    def test_bad_bundle_exit_4(self, workdir):
        broken = workdir / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        assert run("predict", "--y", "3", "--bundle", broken,
                   "--out", workdir / "x.csv") == 4
        assert run("predict", "--y", "3", "--bundle", workdir / "missing.json",
                   "--out", workdir / "x.csv") == 4


class TestDrawsCommand:
    def test_deterministic(self, workdir):
        for name in ("d1.csv", "d2.csv"):
            assert run("draws", "--events", workdir / "events.csv",
                       "--n", "50", "--seed", "3",
                       "--out", workdir / name) == 0
        assert (workdir / "d1.csv").read_bytes() == (workdir / "d2.csv").read_bytes()
        lines = (workdir / "d1.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 50


class TestSimulateCommand:
    def test_outputs_and_reproducibility(self, workdir):
        for out in ("s1", "s2"):
            assert run("simulate", "--events", workdir / "events.csv",
                       "--replicates", "200", "--seed", "11",
                       "--out", workdir / out) == 0
        assert (workdir / "s1" / "totals.csv").read_bytes() == \
            (workdir / "s2" / "totals.csv").read_bytes()
        summary = (workdir / "s1" / "summary.csv").read_text().strip().split("\n")
        assert summary[0] == "reported_sum,mean,median,p90,p10,min,max"
        assert summary[1].split(",")[0] == "55"

    def test_empty_events_exit_5(self, workdir):
        empty = workdir / "empty_events.csv"
        empty.write_text("event_id,reported_value,violence_type\n",
                         encoding="utf-8")
        assert run("simulate", "--events", empty, "--seed", "1",
                   "--out", workdir / "s3") == 5


class TestRoundTrips:
    def test_outputs_parse_with_package_readers(self, workdir):
        from uncertain_events.fitting import read_fits_csv

        fits = read_fits_csv(workdir / "cv" / "fits.csv")
        assert len(fits) == 18
        import csv

        with open(workdir / "curve.csv", newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[1]["mean_untruncated"]) > 0
