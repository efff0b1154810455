"""Experiment configuration and factorial cell enumeration."""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .game import (
    SHIPPED_MATRICES,
    GameError,
    GameKind,
    GameSpec,
    Orientation,
    PayoffMatrix,
    validate_pd_structure,
)
from .gateway import ModelConfig
from .policies import BUILTIN

GAME_LENGTHS = ("one_shot", "repeated")
TRAIT_CODES = {"c": "cooperative", "s": "selfish", "cooperative": "cooperative", "selfish": "selfish"}
FACTORS = ("game_variant", "language", "model", "personality_pairing",
           "communication", "rounds_known", "game_length")


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class EmptyFactor(ConfigError):
    def __init__(self, name: str):
        super().__init__([f"factor {name!r} has no values"])
        self.name = name


@dataclass(frozen=True)
class GameVariant:
    name: str
    game: str
    matrix: PayoffMatrix
    kind: GameKind

    def to_dict(self) -> dict:
        return {"name": self.name, "game": self.game, "kind": self.kind.value,
                "orientation": self.matrix.orientation.value, "matrix": self.matrix.to_lists()}


@dataclass(frozen=True)
class ScriptedPair:
    """Backend entry that plays two scripted policies instead of a model."""

    name: str
    policies: tuple[str, str]


@dataclass
class ExperimentConfig:
    games: list[GameVariant]
    languages: list[str]
    models: list  # ModelConfig | ScriptedPair
    personality_pairings: list[str]
    communication: list[bool]
    rounds_known: list[bool]
    game_lengths: list[str]
    repetitions: int = 10
    run_seed: int = 0
    repeated_rounds: int = 10
    workers: int = 4
    message_order: tuple[str, str] = ("agent1", "agent2")
    template_dir: Path | None = None
    personality_text: dict = field(default_factory=dict)
    name: str = "experiment"

    def game(self, name: str) -> GameVariant:
        return next(g for g in self.games if g.name == name)

    def backend(self, name: str):
        return next(m for m in self.models if m.name == name)

    def n_rounds(self, game_length: str) -> int:
        return 1 if game_length == "one_shot" else self.repeated_rounds

    def template_requirements(self) -> Iterable[tuple[str, str, str, str]]:
        phases = ["decision"] + (["communication"] if True in self.communication else [])
        variants = [v for flag, v in ((True, "known"), (False, "unknown")) if flag in self.rounds_known]
        for g in sorted({g.game for g in self.games}):
            for lang in self.languages:
                for phase in phases:
                    for variant in variants:
                        yield (g, lang, phase, variant)


def canonical_pairing(value) -> str:
    if isinstance(value, str):
        parts = value.replace("-", "_").split("_")
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ValueError(f"personality pairing {value!r} must name two traits")
    traits = []
    for p in parts:
        trait = TRAIT_CODES.get(str(p).strip().lower())
        if trait is None:
            raise ValueError(f"unknown personality trait {p!r}")
        traits.append(trait[0])
    return "_".join(sorted(traits))


def pairing_traits(pairing: str) -> tuple[str, str]:
    a, b = pairing.split("_")
    return TRAIT_CODES[a], TRAIT_CODES[b]


def _bool_list(raw, name: str, errors: list[str]) -> list[bool]:
    out = []
    for v in raw:
        if isinstance(v, bool):
            out.append(v)
        elif v in ("on", "true", "yes"):
            out.append(True)
        elif v in ("off", "false", "no"):
            out.append(False)
        else:
            errors.append(f"{name}: cannot read {v!r} as on/off")
    return sorted(set(out))


def parse_config(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    errors: list[str] = []
    required = ("games", "languages", "models", "personality_pairings", "communication",
                "rounds_known", "game_lengths")
    for key in required:
        if key not in data:
            errors.append(f"missing key {key!r}")
    if errors:
        raise ConfigError(errors)

    games = []
    for i, g in enumerate(data["games"]):
        try:
            preset = g.get("preset")
            if "matrix" in g:
                matrix = PayoffMatrix.from_lists(g["matrix"], g.get("orientation", "penalty"))
            elif preset in SHIPPED_MATRICES:
                matrix = SHIPPED_MATRICES[preset]
            else:
                raise GameError("needs a 'matrix' or a known 'preset'")
            family = g.get("game", "bos" if preset == "bos" else "pd")
            kind = GameKind(g.get("kind", "pd" if family == "pd" else "coordination"))
            name = g.get("name", preset)
            if not name:
                raise GameError("needs a 'name'")
            games.append(GameVariant(name, family, matrix, kind))
        except (GameError, ValueError, TypeError, AttributeError) as exc:
            errors.append(f"games[{i}]: {exc}")

    models = []
    for i, m in enumerate(data["models"]):
        try:
            if "scripted" in m:
                pol = tuple(m["scripted"])
                if len(pol) != 2:
                    raise ValueError("'scripted' must list two policies")
                for p in pol:
                    if p not in BUILTIN:
                        raise ValueError(f"unknown scripted policy {p!r}")
                models.append(ScriptedPair(m.get("name", "-vs-".join(pol)), pol))
            else:
                models.append(ModelConfig.from_dict(m))
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"models[{i}]: {exc}")

    pairings = []
    for p in data["personality_pairings"]:
        try:
            pairings.append(canonical_pairing(p))
        except ValueError as exc:
            errors.append(f"personality_pairings: {exc}")

    lengths = []
    for v in data["game_lengths"]:
        if v not in GAME_LENGTHS:
            errors.append(f"game_lengths: {v!r} is not one of {', '.join(GAME_LENGTHS)}")
        else:
            lengths.append(v)

    communication = _bool_list(data["communication"], "communication", errors)
    rounds_known = _bool_list(data["rounds_known"], "rounds_known", errors)

    reps = data.get("repetitions", 10)
    if not isinstance(reps, int) or reps < 1:
        errors.append("repetitions must be an integer >= 1")
    rounds = data.get("repeated_rounds", 10)
    if not isinstance(rounds, int) or rounds < 1:
        errors.append("repeated_rounds must be an integer >= 1")
    workers = data.get("workers", 4)
    if not isinstance(workers, int) or workers < 1:
        errors.append("workers must be an integer >= 1")
    order = tuple(data.get("message_order", ("agent1", "agent2")))
    if sorted(order) != ["agent1", "agent2"]:
        errors.append("message_order must be a permutation of agent1, agent2")

    for label, names in (("games", [g.name for g in games]), ("models", [m.name for m in models])):
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            errors.append(f"{label}: duplicate names {', '.join(dupes)}")
    if errors:
        raise ConfigError(errors)

    template_dir = data.get("template_dir")
    if template_dir is not None:
        template_dir = Path(template_dir)
        if base_dir is not None and not template_dir.is_absolute():
            template_dir = base_dir / template_dir

    return ExperimentConfig(
        games=games,
        languages=sorted(set(data["languages"])),
        models=models,
        personality_pairings=sorted(set(pairings)),
        communication=communication,
        rounds_known=rounds_known,
        game_lengths=sorted(set(lengths)),
        repetitions=reps,
        run_seed=int(data.get("run_seed", 0)),
        repeated_rounds=rounds,
        workers=workers,
        message_order=order,
        template_dir=template_dir,
        personality_text=dict(data.get("personality_text", {})),
        name=str(data.get("name", "experiment")),
    )


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return parse_config(data, base_dir=path.parent)


def game_violations(config: ExperimentConfig) -> list[str]:
    out = []
    for g in config.games:
        if g.kind is GameKind.PRISONERS_DILEMMA and g.matrix.orientation is Orientation.PENALTY:
            out.extend(f"game {g.name!r}: {v}" for v in validate_pd_structure(g.matrix))
        elif g.kind is GameKind.PRISONERS_DILEMMA:
            out.append(f"game {g.name!r}: prisoner's dilemma games must use penalty orientation")
    return out


# -- cells --------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentCell:
    game_variant: str
    game: str
    language: str
    model: str
    personality_pairing: str
    communication: bool
    rounds_known: bool
    game_length: str
    repetition: int

    def factors(self) -> dict:
        return {
            "game_variant": self.game_variant,
            "game": self.game,
            "language": self.language,
            "model": self.model,
            "personality_pairing": self.personality_pairing,
            "communication": self.communication,
            "rounds_known": self.rounds_known,
            "game_length": self.game_length,
            "repetition": self.repetition,
        }

    @property
    def cell_id(self) -> str:
        blob = json.dumps(self.factors(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:20]


def enumerate_cells(config: ExperimentConfig) -> list[ExperimentCell]:
    """Full factorial product in canonical order (each factor sorted)."""
    factors = {
        "games": sorted(config.games, key=lambda g: g.name),
        "languages": sorted(config.languages),
        "models": sorted(m.name for m in config.models),
        "personality_pairings": sorted(config.personality_pairings),
        "communication": sorted(config.communication),
        "rounds_known": sorted(config.rounds_known),
        "game_lengths": sorted(config.game_lengths),
    }
    for name, values in factors.items():
        if not values:
            raise EmptyFactor(name)
    if config.repetitions < 1:
        raise EmptyFactor("repetitions")
    cells = []
    for g, lang, model, pairing, comm, known, length, rep in itertools.product(
        *factors.values(), range(config.repetitions)
    ):
        cells.append(ExperimentCell(g.name, g.game, lang, model, pairing, comm, known, length, rep))
    return cells


def game_spec(config: ExperimentConfig, cell: ExperimentCell) -> GameSpec:
    variant = config.game(cell.game_variant)
    return GameSpec(
        game_id=variant.name,
        matrix=variant.matrix,
        kind=variant.kind,
        n_rounds=config.n_rounds(cell.game_length),
        rounds_known=cell.rounds_known,
        communication_enabled=cell.communication,
    )


@dataclass(frozen=True)
class ExpectedCounts:
    games: int
    decisions: int
    messages: int

    def __str__(self) -> str:
        return f"games={self.games} decisions={self.decisions} messages={self.messages}"


def expected_counts(config: ExperimentConfig) -> ExpectedCounts:
    """Games, decisions and messages implied by the factorial design."""
    cells = enumerate_cells(config)
    decisions = messages = 0
    for c in cells:
        per_game = 2 * config.n_rounds(c.game_length)
        decisions += per_game
        if c.communication:
            messages += per_game
    return ExpectedCounts(len(cells), decisions, messages)
