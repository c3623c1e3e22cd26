from __future__ import annotations

import io
import shutil
import subprocess
import sys

import pytest

from harmonic.cli import ConfigError, RunConfig, build_parser, main, packaged_recordings, parse_ticks
from harmonic.coding import code_trial
from harmonic.report import report_for_dir
from harmonic.transcript import load_transcript


def run_cli(*argv: str, stdin: str = "") -> tuple[int, str]:
    out = io.StringIO()
    code = main(list(argv), stdin=io.StringIO(stdin), stdout=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def ref_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ref")
    code, text = run_cli("run", "--agent", "ontoagent", "--trials", "5", "--seed", "0", "--out", str(out))
    assert code == 0, text
    return out


def test_run_ontoagent(ref_dir):
    files = sorted(ref_dir.glob("*.jsonl"))
    assert [f.name for f in files] == [f"ontoagent-{i:03d}.jsonl" for i in range(5)]
    assert len({f.read_bytes() for f in files}) == 1


def test_eval_reference_column(ref_dir, tmp_path):
    code, text = run_cli("eval", str(ref_dir), "--out", str(tmp_path))
    assert code == 0
    lines = {ln.split("  ")[0]: ln for ln in text.splitlines()}
    assert lines["Premature action"].split()[2] == "0%"
    assert lines["Task completed"].split()[2] == "100%"
    assert (tmp_path / "report.txt").read_text(encoding="utf-8") in text


def test_run_replay_reproduces_recordings(tmp_path):
    code, text = run_cli(
        "run", "--agent", "llm", "--backend", "replay", "--model", "fixture-a", "--condition", "ke", "--out", str(tmp_path)
    )
    rec = packaged_recordings() / "fixture-a-ke"
    for i in range(5):
        assert (tmp_path / f"fixture-a-ke-{i:03d}.jsonl").read_bytes() == (rec / f"trial-{i:03d}.jsonl").read_bytes()
    assert text.count("trial ") == 5


def test_run_scripted_backend(tmp_path):
    code, text = run_cli(
        "run", "--agent", "llm", "--backend", "scripted", "--model", "fixture-b", "--condition", "ik",
        "--trials", "1", "--budget", "240", "--out", str(tmp_path),
    )
    assert code == 0
    rec = packaged_recordings() / "fixture-b-ik" / "trial-000.jsonl"
    assert (tmp_path / "fixture-b-ik-000.jsonl").read_bytes() == rec.read_bytes()


def test_replay_missing_recording(tmp_path, capsys):
    code, _ = run_cli(
        "run", "--agent", "llm", "--backend", "replay", "--model", "fixture-a", "--condition", "ke",
        "--trials", "6", "--out", str(tmp_path),
    )
    assert code == 2
    assert "no recording for trial 5" in capsys.readouterr().err


def test_llm_requires_model(capsys):
    code, _ = run_cli("run", "--agent", "llm")
    assert code == 2
    err = capsys.readouterr().err
    assert "requires --model" in err and "usage:" in err


@pytest.mark.parametrize(
    "kw",
    [
        dict(agent="llm", model="m", condition="ik"),
        dict(agent="llm", model="m", backend="live"),
        dict(trials=-1),
        dict(latency=-2),
        dict(agent="other"),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


def test_live_without_key_fails_cleanly(tmp_path, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    code, text = run_cli(
        "run", "--agent", "llm", "--backend", "live", "--model", "gpt-4o", "--condition", "ik",
        "--trials", "1", "--out", str(tmp_path),
    )
    assert code == 1
    assert "OPENAI_API_KEY" in text


def test_no_credential_flags():
    parser = build_parser()
    flags = set()
    for action in parser._subparsers._group_actions[0].choices.values():
        for a in action._actions:
            flags.update(a.option_strings)
    assert not [f for f in flags if any(w in f.lower() for w in ("key", "token", "secret", "password"))]


def test_eval_errors(tmp_path, capsys):
    assert run_cli("eval", str(tmp_path))[0] == 1
    (tmp_path / "broken.jsonl").write_text("{\n", encoding="utf-8")
    assert run_cli("eval", str(tmp_path))[0] == 1
    assert "broken.jsonl" in capsys.readouterr().err


def test_eval_golden(tmp_path):
    rec = packaged_recordings()
    code, text = run_cli("eval", str(rec))
    assert code == 0
    assert text == (rec / "report.txt").read_text(encoding="utf-8")


def test_inspect_dialogue(ref_dir):
    code, text = run_cli("inspect", str(ref_dir / "ontoagent-000.jsonl"), "--channel", "dialogue")
    assert code == 0
    lines = text.splitlines()
    assert all(" dialogue " in ln for ln in lines)
    assert len(lines) == 9
    assert lines[-1].endswith("robot: Here is the new thermostat.")


def test_inspect_reasoning_range(ref_dir):
    code, text = run_cli("inspect", str(ref_dir / "ontoagent-000.jsonl"), "--channel", "reasoning", "--tick", "0..50")
    assert code == 0
    assert text.splitlines()
    assert all(" reasoning " in ln and "[" in ln for ln in text.splitlines())


def test_inspect_empty_and_errors(ref_dir, tmp_path, capsys):
    code, text = run_cli("inspect", str(ref_dir / "ontoagent-000.jsonl"), "--tick", "100000")
    assert code == 0 and "no events" in text
    assert run_cli("inspect", str(ref_dir / "ontoagent-000.jsonl"), "--channel", "bogus")[0] == 2
    assert run_cli("inspect", str(tmp_path / "missing.jsonl"))[0] == 1


def test_parse_ticks():
    assert parse_ticks("5") == range(5, 6)
    assert parse_ticks("2..4") == range(2, 5)
    assert parse_ticks("..3") == range(0, 4)
    with pytest.raises(ConfigError):
        parse_ticks("4..2")


M1 = "The engine is overheating."


def test_repl_session(tmp_path):
    out = tmp_path / "s.jsonl"
    code, text = run_cli("repl", "--out", str(out), "--budget", "20", stdin=M1 + "\n\n/wait 3\n/quit\n")
    assert code == 0
    assert "robot: It might be a pipe obstruction or a broken thermostat." in text
    assert "session ended" in text
    t = load_transcript(out)
    assert t.header["session"] == "repl"
    assert t.dialogue()[0][1:] == ("daniel", M1)
    # the recorded session codes like any other transcript
    assert code_trial(t) == code_trial(load_transcript(out))
    shutil.copy(out, tmp_path / "copy.jsonl")
    report_for_dir(tmp_path)


def test_repl_end_of_input(tmp_path):
    out = tmp_path / "s.jsonl"
    code, text = run_cli("repl", "--out", str(out), stdin="")
    assert code == 0
    assert load_transcript(out).end["ticks"] <= 1


def test_repl_unmatched_input_is_not_an_error(tmp_path):
    out = tmp_path / "s.jsonl"
    code, text = run_cli("repl", "--out", str(out), "--budget", "10", stdin="purple monkey dishwasher\n" * 10)
    assert code == 0
    robot = [s for _, who, s in load_transcript(out).dialogue() if who == "robot"]
    assert robot


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "harmonic.cli", "--help"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    for sub in ("run", "eval", "repl", "inspect"):
        assert sub in proc.stdout
