"""Two-player normal-form games: payoff matrices, round records and game state.

Row index is player 1's option, column index is player 2's option.
Index 0 is option A, index 1 is option B.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Sequence, Union

Number = Union[int, Fraction]


class Option(enum.Enum):
    A = "A"
    B = "B"

    @property
    def index(self) -> int:
        return 0 if self is Option.A else 1

    @classmethod
    def parse(cls, value: "Option | str") -> "Option":
        if isinstance(value, Option):
            return value
        return cls(str(value).strip().upper())


class Orientation(enum.Enum):
    PENALTY = "penalty"
    REWARD = "reward"


class GameKind(enum.Enum):
    PRISONERS_DILEMMA = "pd"
    COORDINATION = "coordination"


# Semantic role of each option, per game kind.
ROLES = {
    GameKind.PRISONERS_DILEMMA: {Option.A: "defect", Option.B: "cooperate"},
    GameKind.COORDINATION: {Option.A: "prefer_first", Option.B: "prefer_second"},
}


class GameError(ValueError):
    pass


def exact(value) -> Number:
    """Convert a config number to an exact int or Fraction."""
    if isinstance(value, bool):
        raise GameError(f"payoff must be a number, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, Rational):
        frac = Fraction(value)
    elif isinstance(value, float):
        frac = Fraction(str(value))
    elif isinstance(value, str):
        frac = Fraction(value)
    else:
        raise GameError(f"payoff must be a number, got {value!r}")
    return frac.numerator if frac.denominator == 1 else frac


def to_json_number(value: Number):
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else float(value)
    return value


@dataclass(frozen=True)
class PayoffMatrix:
    cells: tuple[tuple[tuple[Number, Number], tuple[Number, Number]],
                 tuple[tuple[Number, Number], tuple[Number, Number]]]
    orientation: Orientation = Orientation.PENALTY

    def __post_init__(self):
        if len(self.cells) != 2 or any(len(row) != 2 for row in self.cells):
            raise GameError("payoff matrix must be 2x2")
        for row in self.cells:
            for pair in row:
                if len(pair) != 2:
                    raise GameError("each payoff cell must hold one value per player")
                for v in pair:
                    if v < 0:
                        raise GameError(f"payoff values must be non-negative, got {v}")

    @classmethod
    def from_lists(cls, cells: Sequence, orientation="penalty") -> "PayoffMatrix":
        """Build from nested lists ``[[[a1, a2], [b1, b2]], [[c1, c2], [d1, d2]]]``."""
        try:
            converted = tuple(
                tuple((exact(pair[0]), exact(pair[1])) for pair in row) for row in cells
            )
        except (TypeError, IndexError, ValueError, ZeroDivisionError) as exc:
            raise GameError(f"malformed payoff matrix: {exc}") from exc
        if len(converted) != 2 or any(len(row) != 2 for row in converted):
            raise GameError("payoff matrix must be 2x2")
        for row, raw in zip(converted, cells):
            if any(len(pair) != 2 for pair in raw):
                raise GameError("each payoff cell must hold one value per player")
        return cls(converted, Orientation(orientation))

    def to_lists(self) -> list:
        return [[[to_json_number(v) for v in pair] for pair in row] for row in self.cells]

    def cell(self, c1: Option, c2: Option) -> tuple[Number, Number]:
        return self.cells[c1.index][c2.index]

    def is_symmetric(self) -> bool:
        c = self.cells
        return (
            c[0][0][0] == c[0][0][1]
            and c[1][1][0] == c[1][1][1]
            and c[0][1] == (c[1][0][1], c[1][0][0])
        )


def payoff(matrix: PayoffMatrix, c1: Option, c2: Option) -> tuple[Number, Number]:
    return matrix.cell(c1, c2)


def dilemma_strength(matrix: PayoffMatrix) -> Number:
    """Mutual-defection penalty minus mutual-cooperation penalty for player 1."""
    if matrix.orientation is not Orientation.PENALTY:
        raise GameError("dilemma strength is only defined for penalty-oriented matrices")
    return matrix.cell(Option.A, Option.A)[0] - matrix.cell(Option.B, Option.B)[0]


def validate_pd_structure(matrix: PayoffMatrix) -> list[str]:
    """Check the penalty ordering sucker > mutual defect > mutual coop > temptation.

    Returns human-readable violations; empty when the matrix is a valid
    penalty-form prisoner's dilemma.
    """
    if matrix.orientation is not Orientation.PENALTY:
        return ["prisoner's dilemma matrix must be penalty-oriented"]
    temptation = matrix.cell(Option.A, Option.B)[0]
    mutual_defect = matrix.cell(Option.A, Option.A)[0]
    mutual_coop = matrix.cell(Option.B, Option.B)[0]
    sucker = matrix.cell(Option.B, Option.A)[0]
    violations = []
    named = [
        ("defect-vs-cooperate", temptation),
        ("mutual cooperation", mutual_coop),
        ("mutual defection", mutual_defect),
        ("cooperate-vs-defect", sucker),
    ]
    for (lo_name, lo), (hi_name, hi) in zip(named, named[1:]):
        if not lo < hi:
            violations.append(
                f"ordering violated: {lo_name} penalty ({to_json_number(lo)}) "
                f"must be below {hi_name} penalty ({to_json_number(hi)})"
            )
    if not matrix.is_symmetric():
        violations.append("matrix is not symmetric across players")
    return violations


@dataclass(frozen=True)
class GameSpec:
    game_id: str
    matrix: PayoffMatrix
    kind: GameKind = GameKind.PRISONERS_DILEMMA
    n_rounds: int = 1
    rounds_known: bool = True
    communication_enabled: bool = False

    def __post_init__(self):
        if not isinstance(self.n_rounds, int) or self.n_rounds < 1:
            raise GameError(f"n_rounds must be a positive integer, got {self.n_rounds!r}")


@dataclass(frozen=True)
class Message:
    agent_id: str
    text: str


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    choices: tuple[Option, Option]
    payoffs: tuple[Number, Number]
    messages: tuple[Message, ...] = ()


class Status(enum.Enum):
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass(frozen=True)
class GameState:
    spec: GameSpec
    history: tuple[RoundRecord, ...] = ()
    cumulative: tuple[Number, Number] = (0, 0)
    status: Status = Status.IN_PROGRESS
    failure: str | None = field(default=None)

    @property
    def next_round(self) -> int:
        return len(self.history) + 1

    def fail(self, reason: str) -> "GameState":
        return replace(self, status=Status.FAILED, failure=reason)


def make_record(spec: GameSpec, round_index: int, c1: Option, c2: Option,
                messages: Sequence[Message] = ()) -> RoundRecord:
    return RoundRecord(round_index, (c1, c2), payoff(spec.matrix, c1, c2), tuple(messages))


def apply_round(state: GameState, record: RoundRecord) -> GameState:
    if state.status is not Status.IN_PROGRESS:
        raise GameError(f"cannot apply a round to a game that is {state.status.value}")
    if record.round_index != state.next_round:
        raise GameError(
            f"expected round {state.next_round}, got round {record.round_index}"
        )
    expected = payoff(state.spec.matrix, *record.choices)
    if tuple(record.payoffs) != tuple(expected):
        raise GameError(
            f"payoffs {record.payoffs} do not match matrix entry {expected} "
            f"for choices {record.choices[0].value},{record.choices[1].value}"
        )
    if state.spec.communication_enabled:
        if len(record.messages) != 2:
            raise GameError("communication rounds need exactly one message per agent")
    elif record.messages:
        raise GameError("messages recorded in a game without communication")
    history = state.history + (record,)
    cumulative = (
        state.cumulative[0] + record.payoffs[0],
        state.cumulative[1] + record.payoffs[1],
    )
    status = Status.COMPLETED if len(history) == state.spec.n_rounds else Status.IN_PROGRESS
    return replace(state, history=history, cumulative=cumulative, status=status)


CONVENTIONAL_PD = PayoffMatrix.from_lists([[[6, 6], [0, 10]], [[10, 0], [2, 2]]])
HARSH_PD = PayoffMatrix.from_lists([[[8, 8], [0, 10]], [[10, 0], [5, 5]]])
MILD_PD = PayoffMatrix.from_lists([[[8, 8], [0, 10]], [[10, 0], [2, 2]]])
BATTLE_OF_THE_SEXES = PayoffMatrix.from_lists(
    [[[10, 7], [0, 0]], [[0, 0], [7, 10]]], orientation="reward"
)

SHIPPED_MATRICES = {
    "conventional": CONVENTIONAL_PD,
    "harsh": HARSH_PD,
    "mild": MILD_PD,
    "bos": BATTLE_OF_THE_SEXES,
}
