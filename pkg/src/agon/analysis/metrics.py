"""Aggregate statistics over run logs.

Every function takes parsed JSONL records, drops failed games, keeps the
latest record per cell and works in cell_id order so outputs never depend on
completion order.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

GROUP_FIELDS = ("model", "language", "game_variant", "game", "personality_pairing",
                "communication", "rounds_known", "game_length")
Z_95 = 1.96
CHOICE_VALUE = {"A": 1, "B": -1}


class AnalysisError(ValueError):
    pass


@dataclass
class MetricsTable:
    name: str
    group_keys: tuple[str, ...]
    stat_columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)

    @property
    def columns(self) -> tuple[str, ...]:
        return self.group_keys + self.stat_columns


@dataclass(frozen=True)
class SeriesPoint:
    round_index: int
    mean_value: float
    n: int


@dataclass
class SeriesSet:
    name: str
    group_keys: tuple[str, ...]
    groups: dict[tuple, list[SeriesPoint]] = field(default_factory=dict)
    y_range: tuple[float, float] | None = None


def completed(records: Iterable[dict]) -> list[dict]:
    latest = {}
    for rec in records:
        latest[rec["cell_id"]] = rec
    return [latest[cid] for cid in sorted(latest) if latest[cid].get("status") == "completed"]


def group_value(record: dict, key: str):
    try:
        return record["factors"][key]
    except KeyError:
        raise AnalysisError(f"records carry no factor {key!r}") from None


def _check_keys(group_by: Sequence[str]) -> tuple[str, ...]:
    keys = tuple(sorted(set(group_by)))
    bad = [k for k in keys if k not in GROUP_FIELDS]
    if bad:
        raise AnalysisError(f"cannot group by {', '.join(bad)}; "
                            f"choose from {', '.join(GROUP_FIELDS)}")
    return keys


def group_records(records: Iterable[dict], group_by: Sequence[str]) -> tuple[tuple[str, ...], dict]:
    keys = _check_keys(group_by)
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for rec in completed(records):
        groups[tuple(group_value(rec, k) for k in keys)].append(rec)
    return keys, dict(sorted(groups.items(), key=lambda kv: _sort_key(kv[0])))


def _sort_key(values: tuple) -> tuple:
    return tuple((type(v).__name__, v) for v in values)


def _exact(v) -> Fraction:
    return Fraction(v) if isinstance(v, int) else Fraction(str(v))


def mean_ci(values: Sequence) -> dict:
    """Mean, sample sd and normal-approximation 95% interval."""
    n = len(values)
    exact = [_exact(v) for v in values]
    mean = sum(exact) / n
    if n > 1:
        var = sum((x - mean) ** 2 for x in exact) / (n - 1)
        sd = math.sqrt(var)
        half = Z_95 * sd / math.sqrt(n)
    else:
        sd = half = math.nan
    return {"n": n, "mean": float(mean), "sd": sd,
            "ci_low": float(mean) - half, "ci_high": float(mean) + half, "ci_half_width": half}


def payoff_totals(records: Iterable[dict], group_by: Sequence[str]) -> MetricsTable:
    """Per group: mean of both agents' final totals with a 95% CI."""
    keys, groups = group_records(records, group_by)
    table = MetricsTable("payoff_totals", keys,
                         ("n", "mean", "sd", "ci_low", "ci_high", "ci_half_width"))
    for gkey, recs in groups.items():
        totals = [sum(_exact(v) for v in rec["cumulative"]) for rec in recs]
        row = dict(zip(keys, gkey))
        row.update(mean_ci(totals))
        table.rows.append(row)
    return table


def _round_series(groups: dict, per_round) -> dict[tuple, list[SeriesPoint]]:
    out = {}
    for gkey, recs in groups.items():
        lengths = {rec["n_rounds"] for rec in recs}
        if len(lengths) > 1:
            raise AnalysisError(
                f"group {gkey} mixes games of {sorted(lengths)} rounds; add game_length to the grouping"
            )
        n_rounds = lengths.pop()
        sums = [Fraction(0)] * n_rounds
        counts = [0] * n_rounds
        for rec in recs:
            for rnd in rec["rounds"]:
                i = rnd["round"] - 1
                for value in per_round(rnd):
                    sums[i] += value
                    counts[i] += 1
        out[gkey] = [SeriesPoint(i + 1, float(sums[i] / counts[i]), counts[i])
                     for i in range(n_rounds) if counts[i]]
    return out


def strategy_series(records: Iterable[dict], group_by: Sequence[str],
                    per_agent: bool = True) -> SeriesSet:
    """Mean strategy value per round: option A counts +1, option B counts -1.

    With ``per_agent`` each agent-round is one observation; otherwise the two
    agents are averaged within the game first.
    """
    keys, groups = group_records(records, group_by)
    if per_agent:
        def values(rnd):
            return [CHOICE_VALUE[c] for c in rnd["choices"]]
    else:
        def values(rnd):
            return [Fraction(sum(CHOICE_VALUE[c] for c in rnd["choices"]), len(rnd["choices"]))]
    return SeriesSet("strategy_series", keys, _round_series(groups, values), (-1.0, 1.0))


def coordination_series(records: Iterable[dict], group_by: Sequence[str]) -> SeriesSet:
    """Mean per round of +1 for mismatched choices and -1 for matched ones."""
    keys, groups = group_records(records, group_by)

    def values(rnd):
        a, b = rnd["choices"]
        return [1 if a != b else -1]

    return SeriesSet("coordination_series", keys, _round_series(groups, values), (-1.0, 1.0))


def _with_messages(records: Iterable[dict]) -> list[dict]:
    return [r for r in records if r.get("factors", {}).get("communication")]


def message_length_stats(records: Iterable[dict], group_by: Sequence[str]) -> MetricsTable:
    """Mean characters per message (each message weighs the same)."""
    keys, groups = group_records(_with_messages(records), group_by)
    table = MetricsTable("message_length", keys, ("n_games", "n_messages", "mean_chars", "sd_chars"))
    for gkey, recs in groups.items():
        lengths = [len(m["text"]) for rec in recs for rnd in rec["rounds"] for m in rnd["messages"]]
        if not lengths:
            continue
        stats = mean_ci(lengths)
        row = dict(zip(keys, gkey))
        row.update(n_games=len(recs), n_messages=len(lengths),
                   mean_chars=stats["mean"], sd_chars=stats["sd"])
        table.rows.append(row)
    return table


def message_length_by_round(records: Iterable[dict], group_by: Sequence[str]) -> SeriesSet:
    """Mean over games of the combined message length of both agents, per round."""
    keys, groups = group_records(_with_messages(records), group_by)

    def values(rnd):
        return [sum(len(m["text"]) for m in rnd["messages"])]

    return SeriesSet("message_length_by_round", keys, _round_series(groups, values))
