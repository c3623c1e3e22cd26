"""Command-line interface: run, eval, repl, inspect.

Provider credentials are read from environment variables only
(ANTHROPIC_API_KEY, OPENAI_API_KEY, GEMINI_API_KEY).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, TextIO

from .agent import Dispatch, Say, Verdict
from .runner import TrialRunner, header_for, make_ontoagent, run_trial
from .sim import World, spawn
from .transcript import TranscriptError, Transcript, iter_events, load_transcript

AGENTS = ("ontoagent", "llm")
BACKENDS = ("live", "replay", "scripted")


class ConfigError(ValueError):
    pass


def packaged_recordings() -> Path:
    return Path(str(resources.files("harmonic").joinpath("data", "recordings")))


@dataclass(frozen=True)
class RunConfig:
    agent: str = "ontoagent"
    model: str | None = None
    condition: str | None = None
    backend: str | None = None
    trials: int = 5
    seed: int = 0
    out: Path = Path("runs")
    fixture: Path | None = None
    budget: int | None = None
    latency: int | None = None
    recordings: Path | None = None

    def __post_init__(self):
        if self.agent not in AGENTS:
            raise ConfigError(f"unknown agent {self.agent!r}")
        if self.trials < 0:
            raise ConfigError("--trials must be non-negative")
        if self.latency is not None and self.latency < 0:
            raise ConfigError("--latency must be non-negative")
        if self.agent == "llm":
            if not self.model:
                raise ConfigError("--agent llm requires --model")
            if self.backend not in BACKENDS:
                raise ConfigError("--agent llm requires --backend live, replay or scripted")
            if self.condition not in ("ik", "ke"):
                raise ConfigError("--agent llm requires --condition ik or ke")

    def recording_dir(self) -> Path:
        if self.recordings is not None:
            return self.recordings
        return packaged_recordings() / f"{self.model}-{self.condition}"

    def recording(self, trial: int) -> Path:
        path = self.recording_dir() / f"trial-{trial:03d}.jsonl"
        if not path.is_file():
            raise ConfigError(f"no recording for trial {trial}: {path}")
        return path


def agent_factory(cfg: RunConfig) -> Callable[[World, int], object]:
    if cfg.agent == "ontoagent":
        return lambda world, trial: make_ontoagent(world, cfg.latency or 0)
    from .llm import LLMAgent
    from .llm.provider import LiveProvider, ReplayProvider

    latency = 1 if cfg.latency is None else cfg.latency
    if cfg.backend == "replay":
        return lambda world, trial: LLMAgent(
            ReplayProvider.from_transcript(load_transcript(cfg.recording(trial))), cfg.model, cfg.condition, latency=latency
        )
    if cfg.backend == "scripted":
        from .llm.scripted import FIXTURE_PERSONAS, ScriptedProvider

        personas = FIXTURE_PERSONAS.get((cfg.model, cfg.condition))
        if personas is None:
            raise ConfigError(f"no scripted personas for {cfg.model}/{cfg.condition}")
        return lambda world, trial: LLMAgent(
            ScriptedProvider(personas[trial % len(personas)]), cfg.model, cfg.condition, latency=latency
        )
    return lambda world, trial: LLMAgent(LiveProvider(cfg.model), cfg.model, cfg.condition, latency=latency)


def _trial_settings(cfg: RunConfig, trial: int) -> tuple[int, int | None]:
    """Seed and budget; replays take both from the recording header."""
    if cfg.agent == "llm" and cfg.backend == "replay":
        header = load_transcript(cfg.recording(trial)).header
        return int(header.get("seed", cfg.seed)), header.get("budget", cfg.budget)
    return cfg.seed, cfg.budget


def cmd_run(cfg: RunConfig, stdout: TextIO) -> int:
    from .llm.provider import ProviderError

    fixture_text = cfg.fixture.read_text(encoding="utf-8") if cfg.fixture else None
    factory = agent_factory(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    name = cfg.agent if cfg.agent == "ontoagent" else f"{cfg.model}-{cfg.condition}"
    failures = 0
    for i in range(cfg.trials):
        seed, budget = _trial_settings(cfg, i)
        path = cfg.out / f"{name}-{i:03d}.jsonl"
        try:
            r = run_trial(factory, seed=seed, trial=i, fixture_text=fixture_text, budget=budget, out_path=path)
        except ProviderError as exc:
            print(f"trial {i}: provider error: {exc}", file=stdout)
            failures += 1
            continue
        failures += r.aborted
        print(
            f"trial {i}: delivered={'yes' if r.delivered else 'no'} ticks={r.ticks} "
            f"aborted={'yes' if r.aborted else 'no'} -> {path}",
            file=stdout,
        )
    return 1 if failures else 0


def cmd_eval(directory: Path, out: Path | None, stdout: TextIO) -> int:
    from .report import report_for_dir

    report = report_for_dir(directory)
    stdout.write(report.text)
    if out is not None:
        for p in report.write(out):
            print(f"wrote {p}", file=stdout)
    return 0


# --------------------------------------------------------------------------
# REPL
# --------------------------------------------------------------------------


class HumanInput:
    """Teammate turns typed by a human: one input line per simulated cycle.

    An empty line lets the cycle pass in silence; ``/wait N`` lets N cycles
    pass; ``/quit`` or end of input closes the session.
    """

    def __init__(self, stream: TextIO, prompt: Callable[[int], None] | None = None):
        self.stream = stream
        self.prompt = prompt
        self.skip = 0
        self.closed = False

    def observe(self, text: str, tick: int) -> None:
        pass

    def due(self, tick: int) -> list[str]:
        if self.closed:
            return []
        if self.skip > 0:
            self.skip -= 1
            return []
        if self.prompt is not None:
            self.prompt(tick)
        line = self.stream.readline()
        if not line:
            self.closed = True
            return []
        line = line.strip()
        if line == "/quit":
            self.closed = True
            return []
        if line.startswith("/wait"):
            parts = line.split()
            self.skip = max(0, int(parts[1]) - 1) if len(parts) > 1 and parts[1].isdigit() else 0
            return []
        return [line] if line else []


def render_world(world: World, tick: int) -> str:
    r = world.robot
    objs = " ".join(
        f"{o.id}@{o.x:.1f},{o.y:.1f}" for o in world.objects.values() if o.held_by is None and not o.solid
    )
    return f"[{tick:4d}] robot {r.x:5.2f},{r.y:5.2f} gripper={r.gripper or '-'} | {objs}"


def cmd_repl(cfg: RunConfig, out_path: Path, stdin: TextIO, stdout: TextIO) -> int:
    world = spawn(cfg.seed, cfg.fixture.read_text(encoding="utf-8") if cfg.fixture else None)
    agent = agent_factory(cfg)(world, 0)
    human = HumanInput(stdin, prompt=(lambda tick: stdout.write("daniel> ") or stdout.flush()) if stdin.isatty() else None)

    def on_tick(tick: int, printed: list) -> None:
        for out in printed:
            if isinstance(out, Say):
                print(f"robot: {out.text}", file=stdout)
            elif isinstance(out, Dispatch):
                print(f"command: {out.command.render()}", file=stdout)
            elif isinstance(out, Verdict):
                print(f"verdict: {out.object_id} {'match' if out.match else 'no match'}", file=stdout)
        print(render_world(world, tick), file=stdout)

    runner = TrialRunner(agent, world, human, cfg.budget, on_tick=on_tick)
    header = header_for(agent, cfg.seed, budget=cfg.budget or world.config.tick_budget, session="repl")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as sink:
        result = runner.run(Transcript(header, sink=sink))
    print(f"session ended: delivered={'yes' if result.delivered else 'no'} ticks={result.ticks} -> {out_path}", file=stdout)
    return 0


# --------------------------------------------------------------------------
# inspect
# --------------------------------------------------------------------------


def parse_ticks(text: str) -> range:
    if ".." in text:
        a, b = text.split("..", 1)
        lo = int(a) if a else 0
        hi = int(b) if b else 10**9
    else:
        lo = hi = int(text)
    if hi < lo:
        raise ConfigError(f"empty tick range {text!r}")
    return range(lo, hi + 1)


def format_event(e) -> str:
    p = e.payload
    if e.channel == "dialogue":
        body = f"{p.get('speaker')}: {p.get('text')}"
    elif e.channel == "action":
        params = json.dumps(p["command"].get("params", {}), sort_keys=True)
        body = f"#{p['id']} {p['command']['name']} {params}"
    elif e.channel == "outcome" and "id" in p:
        body = f"#{p['id']} {p['status']} {json.dumps(p.get('detail') or {}, sort_keys=True)}"
    elif e.channel == "reasoning":
        cites = ", ".join(p.get("cites") or []) or "-"
        body = f"{p.get('decision')} [{cites}] {json.dumps(p.get('detail') or {}, sort_keys=True)}"
    elif e.channel == "tool":
        body = f"{p.get('name')} {json.dumps(p.get('args') or {}, sort_keys=True)}"
        body += f" error: {p['error']}" if p.get("error") else f" -> {json.dumps(p.get('result'), sort_keys=True)}"
    else:
        body = json.dumps(p, sort_keys=True)
    return f"{e.tick:5d}  {e.channel:<10} {body}"


def cmd_inspect(path: Path, channels: list[str] | None, ticks: range | None, stdout: TextIO) -> int:
    t = load_transcript(path)
    n = 0
    for e in iter_events(t, channels, ticks):
        print(format_event(e), file=stdout)
        n += 1
    if n == 0:
        print("no events match the filters", file=stdout)
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--agent", choices=AGENTS, default="ontoagent")
    p.add_argument("--model", help="model id (llm agent)")
    p.add_argument("--condition", choices=("ik", "ke"), help="prompt condition (llm agent)")
    p.add_argument("--backend", choices=BACKENDS, help="provider backend (llm agent)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixture", type=Path, help="world fixture file (default: packaged layout)")
    p.add_argument("--budget", type=int, help="tick budget per trial")
    p.add_argument("--latency", type=int, help="strategic latency in ticks")
    p.add_argument("--recordings", type=Path, help="directory of recorded transcripts for --backend replay")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harmonic", description="Strategic-tactical robot teammate trials.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run trials and write transcripts")
    _add_run_flags(run)
    run.add_argument("--trials", type=int, default=5)
    run.add_argument("--out", type=Path, default=Path("runs"))
    ev = sub.add_parser("eval", help="code transcripts and print the aggregate report")
    ev.add_argument("directory", type=Path)
    ev.add_argument("--out", type=Path, help="also write report.txt and report.json here")
    repl = sub.add_parser("repl", help="play the teammate interactively")
    _add_run_flags(repl)
    repl.add_argument("--out", type=Path, default=Path("repl-transcript.jsonl"))
    ins = sub.add_parser("inspect", help="print transcript events")
    ins.add_argument("transcript", type=Path)
    ins.add_argument("--channel", action="append", help="channel to show (repeatable)")
    ins.add_argument("--tick", help="tick or range a..b")
    return parser


def _config(args, **extra) -> RunConfig:
    return RunConfig(
        agent=args.agent,
        model=args.model,
        condition=args.condition,
        backend=args.backend,
        seed=args.seed,
        fixture=args.fixture,
        budget=args.budget,
        latency=args.latency,
        recordings=args.recordings,
        **extra,
    )


def main(argv: list[str] | None = None, stdin: TextIO | None = None, stdout: TextIO | None = None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_config(args, trials=args.trials, out=args.out), stdout)
        if args.command == "eval":
            return cmd_eval(args.directory, args.out, stdout)
        if args.command == "repl":
            return cmd_repl(_config(args), args.out, stdin, stdout)
        if args.command == "inspect":
            if args.channel:
                from .transcript import CHANNELS

                bad = [c for c in args.channel if c not in CHANNELS]
                if bad:
                    raise ConfigError(f"unknown channel {bad[0]!r}; choose from {', '.join(CHANNELS)}")
            ticks = parse_ticks(args.tick) if args.tick else None
            return cmd_inspect(args.transcript, args.channel, ticks, stdout)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"harmonic: error: {exc}", file=sys.stderr)
        return 2
    except (TranscriptError, OSError) as exc:
        print(f"harmonic: error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
