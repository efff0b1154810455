import copy
import json
from pathlib import Path

import pytest

from agon.config import parse_config

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


BASE = {
    "games": [{"preset": "conventional"}],
    "languages": ["en"],
    "models": [{"name": "mock", "provider": "mock", "model_name": "mock-chat", "seed": 3}],
    "personality_pairings": ["c_c"],
    "communication": ["off"],
    "rounds_known": [True],
    "game_lengths": ["repeated"],
    "repetitions": 1,
    "run_seed": 0,
    "workers": 1,
}


def config_dict(**overrides):
    data = copy.deepcopy(BASE)
    data.update(overrides)
    return data


def make_config(**overrides):
    return parse_config(config_dict(**overrides))


def write_config(path: Path, **overrides) -> Path:
    path.write_text(json.dumps(config_dict(**overrides)), encoding="utf-8")
    return path


def record(cumulative=(0, 0), rounds=(), status="completed", cell_id=None, **factors):
    """Minimal log record for analysis tests.

    ``rounds`` items are ``(choices, messages)`` with choices like ``"AB"``.
    """
    f = {
        "game_variant": "conventional", "game": "pd", "language": "en", "model": "m",
        "personality_pairing": "c_c", "communication": True, "rounds_known": True,
        "game_length": "repeated", "repetition": 0,
    }
    f.update(factors)
    out_rounds = []
    for i, (choices, msgs) in enumerate(rounds, start=1):
        out_rounds.append({
            "round": i,
            "choices": list(choices),
            "payoffs": [0, 0],
            "messages": [{"agent_id": f"agent{j + 1}", "text": t, "chars": len(t)}
                         for j, t in enumerate(msgs)],
        })
    return {
        "v": 1,
        "cell_id": cell_id or json.dumps(f, sort_keys=True) + str(cumulative) + str(rounds),
        "factors": f,
        "game_kind": "coordination" if f["game"] == "bos" else "pd",
        "n_rounds": len(out_rounds) or 1,
        "rounds": out_rounds,
        "cumulative": list(cumulative),
        "status": status,
    }


@pytest.fixture
def make_record():
    return record


# one PASS/FAIL line per acceptance criterion, printed after the run
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or report.failed:
        prev = _CRITERIA.get(number, (title, "PASS"))[1]
        outcome = "FAIL" if report.failed or prev == "FAIL" else "PASS"
        _CRITERIA[number] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"{outcome} criterion {number}: {title}")
