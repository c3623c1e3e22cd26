"""Aggregate codings into a Table-I-style report with per-model breakdowns."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .coding import CASCADE_LABELS, GroundTruth, MetricCoding, code_trial
from .stats import ContingencyTable, cohens_h, fisher_exact, mann_whitney_u
from .transcript import Transcript, load_dir

ALPHA = 0.05
MIN_GROUP = 2  # groups smaller than this get no significance test

# (key, row label, kind); kind is "binary" or "count"
METRICS = (
    ("premature_action", "Premature action", "binary"),
    ("hallucinated_features", "Halluc. features", "binary"),
    ("domain_first", "Domain-first", "binary"),
    ("hallucinated_facts", "Halluc. facts (mean)", "count"),
    ("expressed_uncertainty", "Expressed uncertainty", "binary"),
    ("correct_action", "Correct action (search)", "binary"),
    ("cascade", "Cascade failure", "binary"),
    ("task_completed", "Task completed", "binary"),
)
GROUPS = ("Ref. OA", "IK", "KE")
FACTS_NOTE = (
    "Hallucinated facts counts only claims checkable against fixture ground truth "
    "(service-log dates and components, object labels, locations and colours)."
)


@dataclass(frozen=True)
class CodedTrial:
    agent: str
    model: str | None
    condition: str | None
    coding: MetricCoding

    @property
    def group(self) -> str:
        if self.agent == "ontoagent":
            return "Ref. OA"
        return str(self.condition).upper()


@dataclass(frozen=True)
class Report:
    data: dict
    text: str

    def json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        txt, js = out / "report.txt", out / "report.json"
        txt.write_text(self.text, encoding="utf-8")
        js.write_text(self.json(), encoding="utf-8")
        return txt, js


def _value(c: MetricCoding, key: str):
    if key == "cascade":
        return c.cascade is not None
    return getattr(c, key)


def _pct(k: int, n: int) -> float:
    return round(100.0 * k / n, 1)


def fmt_p(p: float | None) -> str:
    if p is None:
        return "-"
    if p < 0.001:
        return "<.001"
    return f"{p:.3f}".lstrip("0")


def _cell(stats: dict | None, kind: str) -> str:
    if stats is None:
        return "-"
    if kind == "count":
        return f"{stats['mean']:.1f}"
    return f"{stats['percent']:.0f}%"


def group_stats(codings: list[MetricCoding], key: str, kind: str) -> dict | None:
    if not codings:
        return None
    values = [_value(c, key) for c in codings]
    if kind == "count":
        return {"n": len(values), "mean": round(sum(values) / len(values), 3), "values": values}
    k = sum(1 for v in values if v)
    return {"n": len(values), "count": k, "percent": _pct(k, len(values))}


def compare(ik: dict | None, ke: dict | None, kind: str) -> dict:
    """Significance test between the IK and KE groups of one metric."""
    if ik is None or ke is None:
        return {"p": None, "h": None, "test": None, "note": "missing group"}
    if min(ik["n"], ke["n"]) < MIN_GROUP:
        return {"p": None, "h": None, "test": None, "note": "small n: test omitted"}
    if kind == "count":
        _, p = mann_whitney_u(ik["values"], ke["values"])
        return {"p": round(p, 6), "h": None, "test": "mann-whitney", "note": None}
    p = fisher_exact(ContingencyTable.from_counts(ik["count"], ik["n"], ke["count"], ke["n"]))
    h = None
    if p < ALPHA:
        h = round(cohens_h(ik["count"] / ik["n"], ke["count"] / ke["n"]), 3)
    return {"p": round(p, 6), "h": h, "test": "fisher", "note": None}


def _model_breakdown(trials: list[CodedTrial]) -> dict:
    out: dict = {}
    keyed: dict[tuple[str, str], list[MetricCoding]] = {}
    for t in trials:
        if t.agent == "ontoagent":
            continue
        keyed.setdefault((str(t.model), str(t.condition)), []).append(t.coding)
    for (model, cond), cs in sorted(keyed.items()):
        n = len(cs)
        cascades = Counter(c.cascade for c in cs if c.cascade)
        invoked = [c for c in cs if c.fetchplan_invoked.get("FETCH-OBJECT")]
        followed = [c for c in invoked if c.procedure_followed.get("FETCH-OBJECT")]
        out[f"{model}/{cond}"] = {
            "n": n,
            "premature_rate": _pct(sum(c.premature_action for c in cs), n),
            "hypotheses": {
                "domain-first": _pct(sum(c.domain_first for c in cs), n),
                "log-first-or-none": _pct(sum(not c.domain_first for c in cs), n),
            },
            "retrieval": {
                "fetchplan_invoked": _pct(len(invoked), n),
                "followed_given_invoked": _pct(len(followed), len(invoked)) if invoked else None,
            },
            "cascades": {label: cascades.get(label, 0) for label in CASCADE_LABELS},
        }
    return out


def _taxonomy(trials: list[CodedTrial]) -> dict:
    labels = Counter(t.coding.cascade for t in trials if t.coding.cascade)
    total = sum(labels.values())
    return {
        "total": total,
        "shares": {label: (_pct(labels.get(label, 0), total) if total else 0.0) for label in CASCADE_LABELS},
    }


def aggregate_report(trials: Iterable[CodedTrial]) -> Report:
    trials = list(trials)
    grouped: dict[str, list[MetricCoding]] = {g: [] for g in GROUPS}
    for t in trials:
        grouped.setdefault(t.group, []).append(t.coding)
    notes = []
    sizes = {g: len(grouped[g]) for g in GROUPS}
    if sizes["IK"] and sizes["KE"] and sizes["IK"] != sizes["KE"]:
        notes.append(f"Group sizes differ: IK n={sizes['IK']}, KE n={sizes['KE']}.")
    rows = {}
    for key, label, kind in METRICS:
        cells = {g: group_stats(grouped[g], key, kind) for g in GROUPS}
        test = compare(cells["IK"], cells["KE"], kind)
        if test["note"] == "small n: test omitted":
            note = "Small n: significance tests omitted for groups with fewer than {} trials.".format(MIN_GROUP)
            if note not in notes:
                notes.append(note)
        rows[key] = {"label": label, "kind": kind, "groups": cells, **test}
    notes.append(FACTS_NOTE)
    data = {
        "n": sizes,
        "metrics": rows,
        "per_model": _model_breakdown(trials),
        "cascade_taxonomy": _taxonomy(trials),
        "notes": notes,
    }
    return Report(data, render_text(data))


def render_text(data: dict) -> str:
    n = data["n"]
    head = ["Metric"] + [f"{g} (n={n[g]})" for g in GROUPS] + ["p", "h"]
    body = []
    for row in data["metrics"].values():
        cells = [_cell(row["groups"][g], row["kind"]) for g in GROUPS]
        h = "-" if row["h"] is None else f"{abs(row['h']):.2f}"
        body.append([row["label"]] + cells + [fmt_p(row["p"]), h])
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]

    def line(r):
        return "  ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(r)).rstrip()

    out = [line(head), line(["-" * w for w in widths])] + [line(r) for r in body]
    if data["per_model"]:
        out += ["", "Per model"]
        for name, m in data["per_model"].items():
            fg = m["retrieval"]["followed_given_invoked"]
            casc = ", ".join(f"{k} {v}" for k, v in m["cascades"].items() if v) or "none"
            out.append(
                f"  {name} (n={m['n']}): premature {m['premature_rate']:.0f}%, "
                f"domain-first {m['hypotheses']['domain-first']:.0f}%, "
                f"FETCHPLAN {m['retrieval']['fetchplan_invoked']:.0f}%, "
                f"followed {'-' if fg is None else f'{fg:.0f}%'}, cascades: {casc}"
            )
    tax = data["cascade_taxonomy"]
    if tax["total"]:
        out += ["", f"Cascade taxonomy (n={tax['total']})"]
        out += [f"  {k}: {v:.0f}%" for k, v in tax["shares"].items()]
    out += [""] + [f"Note: {s}" for s in data["notes"]]
    return "\n".join(out) + "\n"


def code_transcripts(items: Iterable[tuple[object, Transcript]], truth: GroundTruth | None = None) -> list[CodedTrial]:
    truth = truth or GroundTruth.default()
    out = []
    for _, t in items:
        h = t.header
        out.append(CodedTrial(h.get("agent", "?"), h.get("model"), h.get("condition"), code_trial(t, truth)))
    return out


def report_for_dir(directory: str | Path) -> Report:
    return aggregate_report(code_transcripts(load_dir(directory)))
