from __future__ import annotations

import json
import shutil

import pytest

from harmonic.cli import packaged_recordings
from harmonic.coding import MetricCoding
from harmonic.report import (
    FACTS_NOTE,
    CodedTrial,
    aggregate_report,
    code_transcripts,
    compare,
    fmt_p,
    group_stats,
    report_for_dir,
)
from harmonic.runner import ontoagent_factory, run_trials
from harmonic.transcript import TranscriptError


def test_golden_report_matches(tmp_path):
    rec = packaged_recordings()
    report = report_for_dir(rec)
    assert report.text == (rec / "report.txt").read_text(encoding="utf-8")
    assert report.json() == (rec / "report.json").read_text(encoding="utf-8")
    txt, js = report.write(tmp_path)
    assert txt.read_bytes() == (rec / "report.txt").read_bytes()
    assert js.read_bytes() == (rec / "report.json").read_bytes()


def test_json_carries_every_number():
    data = json.loads((packaged_recordings() / "report.json").read_text(encoding="utf-8"))
    assert data["n"] == {"Ref. OA": 0, "IK": 10, "KE": 10}
    assert len(data["metrics"]) == 8
    assert set(data["per_model"]) == {"fixture-a/ik", "fixture-a/ke", "fixture-b/ik", "fixture-b/ke"}
    shares = data["cascade_taxonomy"]["shares"]
    assert set(shares) == {"loop", "hallucinated-success", "stall", "backtrack-circling"}
    assert FACTS_NOTE in data["notes"]


@pytest.fixture(scope="module")
def reference_report():
    trials = run_trials(ontoagent_factory(), 5, seed=0)
    return aggregate_report(code_transcripts((None, r.transcript) for r in trials))


def test_reference_column(reference_report):
    m = reference_report.data["metrics"]
    ref = {k: v["groups"]["Ref. OA"] for k, v in m.items()}
    assert ref["premature_action"]["percent"] == 0
    assert ref["hallucinated_features"]["percent"] == 0
    assert ref["domain_first"]["percent"] == 100
    assert ref["hallucinated_facts"]["mean"] == 0
    assert ref["correct_action"]["percent"] == 100
    assert ref["cascade"]["percent"] == 0
    assert ref["task_completed"]["percent"] == 100
    assert all(v["note"] == "missing group" for v in m.values())
    assert "Ref. OA (n=5)" in reference_report.text


def _coding(**kw) -> MetricCoding:
    base = dict(
        premature_action=False,
        hallucinated_features=False,
        domain_first=True,
        hallucinated_facts=0,
        expressed_uncertainty=True,
        correct_action=True,
        cascade=None,
        task_completed=True,
        fetchplan_invoked={},
        procedure_followed={},
    )
    base.update(kw)
    return MetricCoding(**base)


def test_small_n_note():
    trials = [
        CodedTrial("llm", "m", "ik", _coding(premature_action=True)),
        CodedTrial("llm", "m", "ke", _coding()),
        CodedTrial("llm", "m", "ke", _coding()),
    ]
    report = aggregate_report(trials)
    assert any("Small n" in n for n in report.data["notes"])
    assert any("Group sizes differ" in n for n in report.data["notes"])
    assert all(v["p"] is None for v in report.data["metrics"].values())


def test_fmt_p():
    assert fmt_p(None) == "-"
    assert fmt_p(0.0001) == "<.001"
    assert fmt_p(0.0021) == ".002"
    assert fmt_p(1.0) == "1.000"


def test_compare_reports_h_only_when_significant():
    ik = group_stats([_coding(premature_action=True)] * 30, "premature_action", "binary")
    ke = group_stats([_coding(premature_action=True)] * 18 + [_coding()] * 12, "premature_action", "binary")
    res = compare(ik, ke, "binary")
    assert res["test"] == "fisher" and res["p"] < 0.001
    assert res["h"] == pytest.approx(-1.369, abs=1e-3)
    same = compare(ik, ik, "binary")
    assert same["p"] == 1.0 and same["h"] is None


def test_compare_counts_uses_mann_whitney():
    ik = group_stats([_coding(hallucinated_facts=v) for v in (0, 1, 2)], "hallucinated_facts", "count")
    ke = group_stats([_coding(hallucinated_facts=0)] * 3, "hallucinated_facts", "count")
    res = compare(ik, ke, "count")
    assert res["test"] == "mann-whitney" and 0 < res["p"] <= 1
    assert ik["mean"] == 1.0


def test_corrupt_file_named(tmp_path):
    shutil.copy(packaged_recordings() / "fixture-a-ik" / "trial-000.jsonl", tmp_path / "good.jsonl")
    (tmp_path / "bad.jsonl").write_text('{"agent": "x"}\nnot json\n', encoding="utf-8")
    with pytest.raises(TranscriptError, match="bad.jsonl"):
        report_for_dir(tmp_path)


def test_empty_dir(tmp_path):
    with pytest.raises(TranscriptError, match="no transcripts"):
        report_for_dir(tmp_path)
