"""Plays experiment cells and appends one JSONL record per game."""

from __future__ import annotations

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .config import (
    ExperimentCell,
    ExperimentConfig,
    ScriptedPair,
    enumerate_cells,
    expected_counts,
    game_spec,
    pairing_traits,
)
from .game import GameState, Message, Status, apply_round, make_record, to_json_number
from .gateway import Gateway
from .policies import (
    AgentProfile,
    DecisionContext,
    ModelPolicy,
    Policy,
    PolicyError,
    agent_seed,
    make_scripted,
)
from .prompts import TemplateSet, render, render_history, render_messages, render_payoffs

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
AGENT_IDS = ("agent1", "agent2")
TIMESTAMP_FIELDS = ("started_at", "ended_at")


class LogError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def build_policies(cell: ExperimentCell, config: ExperimentConfig,
                   gateway: Gateway) -> tuple[Policy, Policy]:
    backend = config.backend(cell.model)
    seeds = [agent_seed(config.run_seed, cell.cell_id, a) for a in AGENT_IDS]
    if isinstance(backend, ScriptedPair):
        return tuple(make_scripted(name, s) for name, s in zip(backend.policies, seeds))
    return tuple(ModelPolicy(gateway, backend, seed=s) for s in seeds)


def _profiles(cell: ExperimentCell, config: ExperimentConfig,
              templates: TemplateSet) -> tuple[AgentProfile, AgentProfile]:
    locale = templates.locale(cell.language)
    overrides = config.personality_text.get(cell.language, {})
    out = []
    for agent_id, trait in zip(AGENT_IDS, pairing_traits(cell.personality_pairing)):
        text = overrides.get(trait) or locale.personalities[trait]
        out.append(AgentProfile(agent_id, trait, text))
    return tuple(out)


class _Prompter:
    """Builds the prompt each agent sees; holds no per-round state."""

    def __init__(self, cell, config, spec, templates, profiles):
        self.cell = cell
        self.spec = spec
        self.locale = templates.locale(cell.language)
        self.templates = {
            phase: templates.get(cell.game, cell.language, phase, cell.rounds_known)
            for phase in (("communication", "decision") if spec.communication_enabled else ("decision",))
        }
        self.profiles = profiles
        self.game_description = self.locale.games[cell.game]
        self.payoffs = [render_payoffs(spec.matrix, self.locale, seat, AGENT_IDS[1 - seat])
                        for seat in (0, 1)]

    def context(self, phase: str, seat: int, state: GameState,
                messages: Sequence[Message]) -> DecisionContext:
        round_index = state.next_round
        values = {
            "agent_id": AGENT_IDS[seat],
            "opponent_id": AGENT_IDS[1 - seat],
            "personality": self.profiles[seat].personality_text,
            "game_description": self.game_description,
            "option_a": self.locale.option_labels[0],
            "option_b": self.locale.option_labels[1],
            "payoffs": self.payoffs[seat],
            "round": round_index,
            "history": render_history(state.history, self.locale, AGENT_IDS),
            "messages": render_messages(messages, self.locale),
        }
        if self.spec.rounds_known:
            values["total"] = self.spec.n_rounds
        prompt = render(self.templates[phase], values)
        return DecisionContext(
            spec=self.spec,
            self_profile=self.profiles[seat],
            opponent_id=AGENT_IDS[1 - seat],
            seat=seat,
            history=state.history,
            current_round_messages=tuple(messages),
            round_index=round_index,
            rendered_prompt=prompt,
            option_labels=self.locale.option_labels,
        )


def play_game(cell: ExperimentCell, config: ExperimentConfig, policies: Sequence[Policy],
              templates: TemplateSet | None = None,
              decision_order: tuple[int, int] = (0, 1)) -> dict:
    """Play one cell to completion or failure and return its log record.

    Per round: optional message phase in ``config.message_order`` (later
    speakers see earlier messages), then both decision prompts are built
    before either agent decides.
    """
    templates = templates or TemplateSet.load(config.template_dir)
    spec = game_spec(config, cell)
    profiles = _profiles(cell, config, templates)
    prompter = _Prompter(cell, config, spec, templates, profiles)
    speak_order = [AGENT_IDS.index(a) for a in config.message_order]

    started = _now()
    state = GameState(spec)
    rounds = []
    while state.status is Status.IN_PROGRESS:
        r = state.next_round
        attempts = {a: {"message": 0, "decision": 0} for a in AGENT_IDS}
        try:
            messages: list[Message] = []
            if spec.communication_enabled:
                for seat in speak_order:
                    ctx = prompter.context("communication", seat, state, messages)
                    text = policies[seat].compose_message(ctx)
                    attempts[AGENT_IDS[seat]]["message"] = policies[seat].last_attempts
                    messages.append(Message(AGENT_IDS[seat], text))
            contexts = [prompter.context("decision", seat, state, messages) for seat in (0, 1)]
            choices = [None, None]
            for seat in decision_order:
                choices[seat] = policies[seat].decide(contexts[seat])
                attempts[AGENT_IDS[seat]]["decision"] = policies[seat].last_attempts
        except PolicyError as exc:
            state = state.fail(exc.reason)
            failure = {"round": r, "reason": exc.reason}
            break
        ordered = tuple(sorted(messages, key=lambda m: AGENT_IDS.index(m.agent_id)))
        record = make_record(spec, r, choices[0], choices[1], ordered)
        state = apply_round(state, record)
        rounds.append({
            "round": r,
            "messages": [{"agent_id": m.agent_id, "text": m.text, "chars": len(m.text)}
                         for m in messages],
            "choices": [c.value for c in record.choices],
            "payoffs": [to_json_number(v) for v in record.payoffs],
            "attempts": attempts,
        })
    else:
        failure = None

    variant = config.game(cell.game_variant)
    return {
        "v": SCHEMA_VERSION,
        "cell_id": cell.cell_id,
        "run_seed": config.run_seed,
        "started_at": started,
        "ended_at": _now(),
        "factors": cell.factors(),
        "game_kind": variant.kind.value,
        "orientation": variant.matrix.orientation.value,
        "matrix": variant.matrix.to_lists(),
        "n_rounds": spec.n_rounds,
        "agents": [
            {"agent_id": p.agent_id, "personality": p.personality, "policy": pol.name}
            for p, pol in zip(profiles, policies)
        ],
        "rounds": rounds,
        "cumulative": [to_json_number(v) for v in state.cumulative],
        "status": state.status.value,
        "failure": failure,
    }


# -- log files ----------------------------------------------------------------


def read_log(path: Path | str, repair: bool = False) -> list[dict]:
    """Parse a JSONL run log.

    A final line without a trailing newline is the remnant of an interrupted
    write; with ``repair`` it is cut from the file, otherwise it is ignored.
    Any other unparseable line raises ``LogError`` naming its line number.
    """
    path = Path(path)
    if not path.exists():
        return []
    raw = path.read_bytes()
    lines = raw.split(b"\n")
    tail = lines.pop()  # empty when the file ends with a newline
    if tail and repair:
        with path.open("r+b") as fh:
            fh.truncate(len(raw) - len(tail))
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise LogError(f"{path}:{lineno}: unparseable log line ({exc})") from None
        if not isinstance(rec, dict) or "cell_id" not in rec:
            raise LogError(f"{path}:{lineno}: not a game record")
        records.append(rec)
    return records


def latest_by_cell(records: Iterable[dict]) -> dict[str, dict]:
    """Last record per cell_id (a rerun supersedes an earlier failure)."""
    out = {}
    for rec in records:
        out[rec["cell_id"]] = rec
    return out


def strip_timestamps(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in TIMESTAMP_FIELDS}


class LogWriter:
    """Serialized, flushed, one-line-per-game appends."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = path.open("a", encoding="utf-8")
        except OSError as exc:
            raise LogError(f"cannot write log {path}: {exc}") from None

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


@dataclass
class RunSummary:
    total_cells: int
    skipped: int = 0
    completed: int = 0
    failed: int = 0
    expected: object = None
    failed_cells: list[str] = field(default_factory=list)

    @property
    def new_games(self) -> int:
        return self.completed + self.failed


def run(config: ExperimentConfig, log_path: Path | str, resume: bool = False,
        workers: int | None = None, gateway: Gateway | None = None,
        templates: TemplateSet | None = None,
        progress: Callable[[RunSummary], None] | None = None) -> RunSummary:
    """Execute every cell not already completed in ``log_path``.

    Records are appended in canonical cell order even when games finish out
    of order, so identical configs give identical logs.
    """
    log_path = Path(log_path)
    cells = enumerate_cells(config)
    existing = {}
    if log_path.exists() and log_path.stat().st_size > 0:
        if not resume:
            raise LogError(f"{log_path} already has records; pass resume to continue it")
        existing = latest_by_cell(read_log(log_path, repair=True))
    done = {cid for cid, rec in existing.items() if rec.get("status") == Status.COMPLETED.value}
    pending = [c for c in cells if c.cell_id not in done]

    summary = RunSummary(total_cells=len(cells), skipped=len(cells) - len(pending),
                         expected=expected_counts(config))
    templates = templates or TemplateSet.load(config.template_dir)
    own_gateway = gateway is None
    gateway = gateway or Gateway()
    writer = LogWriter(log_path)

    def one(cell: ExperimentCell) -> dict:
        policies = build_policies(cell, config, gateway)
        try:
            return play_game(cell, config, policies, templates)
        except Exception as exc:  # keep the run going; the cell is recorded as failed
            log.exception("cell %s crashed", cell.cell_id)
            return {
                "v": SCHEMA_VERSION, "cell_id": cell.cell_id, "run_seed": config.run_seed,
                "started_at": _now(), "ended_at": _now(), "factors": cell.factors(),
                "rounds": [], "cumulative": [0, 0], "status": Status.FAILED.value,
                "failure": {"round": None, "reason": f"{type(exc).__name__}: {exc}"},
            }

    def record(rec: dict) -> None:
        writer.append(rec)
        if rec["status"] == Status.COMPLETED.value:
            summary.completed += 1
        else:
            summary.failed += 1
            summary.failed_cells.append(rec["cell_id"])
        if progress:
            progress(summary)

    try:
        n_workers = max(1, workers or config.workers)
        if n_workers == 1:
            for cell in pending:
                record(one(cell))
        else:
            buffered: dict[int, dict] = {}
            next_index = 0
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                futures = {pool.submit(one, cell): i for i, cell in enumerate(pending)}
                for fut in as_completed(futures):
                    buffered[futures[fut]] = fut.result()
                    while next_index in buffered:
                        record(buffered.pop(next_index))
                        next_index += 1
    finally:
        writer.close()
        if own_gateway:
            gateway.close()
    return summary
