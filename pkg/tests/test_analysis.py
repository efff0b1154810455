import json
import math
import statistics
from collections import defaultdict

import pytest

from agon.analysis import (
    AnalysisError,
    coordination_series,
    mean_ci,
    message_length_by_round,
    message_length_stats,
    payoff_totals,
    strategy_series,
)
from agon.config import enumerate_cells
from agon.runner import read_log, run

from conftest import make_config, record


def test_ci_of_two_games():
    table = payoff_totals([record((20, 20)), record((30, 30))], [])
    row = table.rows[0]
    assert row["n"] == 2 and row["mean"] == 50
    assert row["sd"] == pytest.approx(math.sqrt(200))
    assert abs(row["ci_half_width"] - 19.60) <= 0.01
    assert row["ci_low"] == pytest.approx(50 - 19.6)


def test_zero_variance_has_zero_width():
    stats = mean_ci([120, 120, 120])
    assert stats["sd"] == 0 and stats["ci_half_width"] == 0
    assert stats["ci_low"] == stats["ci_high"] == 120


def test_single_observation_has_undefined_sd():
    stats = mean_ci([7])
    assert stats["mean"] == 7 and math.isnan(stats["sd"])


def test_fractional_payoffs_are_exact():
    assert mean_ci([0.1, 0.2])["mean"] == 0.15


def test_failed_games_excluded():
    recs = [record((10, 10)), record((99, 99), status="failed")]
    assert payoff_totals(recs, []).rows[0]["n"] == 1


def test_latest_record_per_cell_wins():
    recs = [record((1, 1), cell_id="x", status="failed"), record((5, 5), cell_id="x")]
    assert payoff_totals(recs, []).rows[0]["mean"] == 10


def test_grouping_and_sorted_keys():
    recs = [record((1, 1), language="vn"), record((2, 2), language="en"),
            record((3, 3), language="en", model="z")]
    table = payoff_totals(recs, ["model", "language"])
    assert table.group_keys == ("language", "model")
    assert [(r["language"], r["model"]) for r in table.rows] == [("en", "m"), ("en", "z"), ("vn", "m")]


def test_unknown_group_key():
    with pytest.raises(AnalysisError, match="cannot group by"):
        payoff_totals([record()], ["colour"])


def test_strategy_closed_forms():
    alld_allc = record(rounds=[("AB", ())] * 10)
    tft_alld = record(rounds=[("BA", ())] + [("AA", ())] * 9, model="tft")
    series = strategy_series([alld_allc, tft_alld], ["model"])
    assert [p.mean_value for p in series.groups[("m",)]] == [0.0] * 10
    assert [p.mean_value for p in series.groups[("tft",)]] == [0.0] + [1.0] * 9
    assert series.y_range == (-1.0, 1.0)


def test_strategy_averaged_per_game():
    recs = [record(rounds=[("AA", ())]), record(rounds=[("BB", ())])]
    s = strategy_series(recs, [], per_agent=False)
    assert s.groups[()][0].mean_value == 0 and s.groups[()][0].n == 2


def test_mixed_lengths_rejected():
    with pytest.raises(AnalysisError, match="game_length"):
        strategy_series([record(rounds=[("AA", ())]), record(rounds=[("AA", ())] * 2)], [])


def test_coordination_values():
    matched = record(rounds=[("AA", ()), ("BB", ())], game="bos")
    mismatched = record(rounds=[("AB", ()), ("BA", ())], game="bos", model="x")
    s = coordination_series([matched, mismatched], ["model"])
    assert [p.mean_value for p in s.groups[("m",)]] == [-1, -1]
    assert [p.mean_value for p in s.groups[("x",)]] == [1, 1]


def test_coordination_four_mismatches_in_ten():
    recs = [record(rounds=[("AB" if g < 4 else "AA", ())], game="bos", cell_id=f"g{g}") for g in range(10)]
    assert coordination_series(recs, []).groups[()][0].mean_value == pytest.approx(-0.2)


def test_message_length_mean():
    stats = message_length_stats([record(rounds=[("AA", ("ab", "abcd"))])], [])
    assert stats.rows[0]["mean_chars"] == 3.0 and stats.rows[0]["n_messages"] == 2


def test_message_length_by_round_constant():
    recs = [record(rounds=[("AA", ("hello", "goodbye"))] * 10) for _ in range(3)]
    s = message_length_by_round(recs, [])
    assert [p.mean_value for p in s.groups[()]] == [12] * 10


def test_message_length_counts_codepoints():
    stats = message_length_stats([record(rounds=[("AA", ("مرحبا", "Việt"))])], [])
    assert stats.rows[0]["mean_chars"] == 4.5


def test_against_independent_recount(tmp_path):
    cfg = make_config(languages=["en", "ar"], communication=["on", "off"],
                      personality_pairings=["c_c", "c_s", "s_s"], repetitions=2)
    log = tmp_path / "log.jsonl"
    run(cfg, log, workers=3)
    raw = [json.loads(line) for line in log.read_text(encoding="utf-8").splitlines()]
    assert len(raw) == len(enumerate_cells(cfg))

    totals = defaultdict(list)
    strat = defaultdict(lambda: defaultdict(list))
    for rec in raw:
        key = (rec["factors"]["language"], rec["factors"]["personality_pairing"])
        totals[key].append(sum(rec["cumulative"]))
        for rnd in rec["rounds"]:
            for c in rnd["choices"]:
                strat[key][rnd["round"]].append(1 if c == "A" else -1)

    table = payoff_totals(read_log(log), ["personality_pairing", "language"])
    for row in table.rows:
        values = totals[(row["language"], row["personality_pairing"])]
        assert row["mean"] == pytest.approx(statistics.mean(values))
        assert row["sd"] == pytest.approx(statistics.stdev(values))
        assert row["ci_half_width"] == pytest.approx(1.96 * statistics.stdev(values) / math.sqrt(len(values)))

    series = strategy_series(read_log(log), ["language", "personality_pairing"])
    for (lang, pairing), points in series.groups.items():
        for p in points:
            assert p.mean_value == pytest.approx(statistics.mean(strat[(lang, pairing)][p.round_index]))
