"""The full metric suite over one log, as written by ``agon analyze``."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .emit import emit
from .lexicon import LexiconConfig, word_frequencies
from .metrics import (
    AnalysisError,
    coordination_series,
    completed,
    message_length_by_round,
    message_length_stats,
    payoff_totals,
    strategy_series,
)

DEFAULT_GROUPS = {
    "payoff_totals": ("game_variant", "game_length", "model", "language", "communication"),
    "strategy_series": ("game_variant", "personality_pairing", "communication"),
    "coordination_series": ("model", "language", "communication"),
    "message_length": [
        ("model", "language", "rounds_known"),
        ("model", "personality_pairing"),
        ("model", "game_variant"),
    ],
    "message_length_by_round": ("game_variant", "model", "language"),
    "word_frequencies": ("language", "game"),
}


def run_suite(records: list[dict], out_dir: Path | str, formats: Sequence[str] = ("csv",),
              group_by: Sequence[str] | None = None,
              lexicon: LexiconConfig | None = None) -> list[Path]:
    """Compute every metric family and write it; returns the written paths.

    ``group_by`` replaces every default grouping when given.
    """
    games = completed(records)
    if not games:
        raise AnalysisError("no completed games")

    def groups(metric):
        if group_by is not None:
            return [tuple(group_by)]
        g = DEFAULT_GROUPS[metric]
        return g if isinstance(g, list) else [g]

    repeated = [r for r in games if r["factors"]["game_length"] == "repeated"]
    coordination = [r for r in repeated if r.get("game_kind") == "coordination"]
    talking = [r for r in games if r["factors"]["communication"]]

    tables, charts = [], []
    for g in groups("payoff_totals"):
        t = payoff_totals(games, g)
        tables.append(t)
        charts.append(t)
    if repeated:
        for g in groups("strategy_series"):
            s = strategy_series(repeated, g)
            tables.append(s)
            charts.append(s)
    if coordination:
        for g in groups("coordination_series"):
            s = coordination_series(coordination, g)
            tables.append(s)
            charts.append(s)
    if talking:
        for g in groups("message_length"):
            tables.append(message_length_stats(talking, g))
        talking_repeated = [r for r in talking if r["factors"]["game_length"] == "repeated"]
        if talking_repeated:
            for g in groups("message_length_by_round"):
                s = message_length_by_round(talking_repeated, g)
                tables.append(s)
                charts.append(s)
        lexicon = lexicon or LexiconConfig.default({r["factors"]["language"] for r in talking})
        for g in groups("word_frequencies"):
            tables.append(word_frequencies(talking, lexicon, g))

    paths = []
    if "csv" in formats:
        paths.extend(emit(t, out_dir, "csv") for t in tables)
    if "svg" in formats:
        paths.extend(emit(c, out_dir, "svg") for c in charts)
    return paths
