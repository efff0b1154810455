"""Decision makers: scripted rules, a seeded random rule, and model-backed agents."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Sequence

from .game import GameSpec, Message, Option, RoundRecord
from .gateway import Gateway, GatewayError, ModelConfig, NoChoiceFound, parse_choice

PERSONALITIES = ("cooperative", "selfish")


@dataclass(frozen=True)
class AgentProfile:
    agent_id: str
    personality: str
    personality_text: str = ""

    def __post_init__(self):
        if self.personality not in PERSONALITIES:
            raise ValueError(f"unknown personality {self.personality!r}")


@dataclass(frozen=True)
class DecisionContext:
    spec: GameSpec
    self_profile: AgentProfile
    opponent_id: str
    seat: int
    history: tuple[RoundRecord, ...]
    current_round_messages: tuple[Message, ...]
    round_index: int
    rendered_prompt: str = ""
    option_labels: tuple[str, str] = ("Option A", "Option B")

    def opponent_choice(self, round_index: int) -> Option:
        return self.history[round_index - 1].choices[1 - self.seat]


class PolicyError(Exception):
    def __init__(self, round_index: int, reason: str, attempt_count: int = 1):
        super().__init__(f"round {round_index}: {reason}")
        self.round_index = round_index
        self.reason = reason
        self.attempt_count = attempt_count


class ChoiceParseFailure(PolicyError):
    pass


def agent_seed(run_seed: int, cell_id: str, agent_id: str) -> int:
    """Independent, reproducible stream seed for one agent in one cell."""
    digest = hashlib.sha256(f"{run_seed}\x1f{cell_id}\x1f{agent_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class Policy:
    name = "policy"
    #: gateway attempts used by the most recent call
    last_attempts = 0

    def compose_message(self, ctx: DecisionContext) -> str:
        raise NotImplementedError

    def decide(self, ctx: DecisionContext) -> Option:
        raise NotImplementedError


class ScriptedPolicy(Policy):
    """Prompt-free rule; sends empty messages."""

    def compose_message(self, ctx: DecisionContext) -> str:
        if not ctx.spec.communication_enabled:
            raise ValueError("compose_message called in a game without communication")
        self.last_attempts = 0
        return ""

    def decide(self, ctx: DecisionContext) -> Option:
        self.last_attempts = 0
        return self.choose(ctx)

    def choose(self, ctx: DecisionContext) -> Option:
        raise NotImplementedError


class Fixed(ScriptedPolicy):
    def __init__(self, option: Option):
        self.option = option
        self.name = f"fixed_{option.value.lower()}"

    def choose(self, ctx):
        return self.option


class AlwaysDefect(Fixed):
    def __init__(self):
        super().__init__(Option.A)
        self.name = "always_defect"


class AlwaysCooperate(Fixed):
    def __init__(self):
        super().__init__(Option.B)
        self.name = "always_cooperate"


class TitForTat(ScriptedPolicy):
    name = "tit_for_tat"

    def choose(self, ctx):
        if ctx.round_index == 1:
            return Option.B
        return ctx.opponent_choice(ctx.round_index - 1)


class GrimTrigger(ScriptedPolicy):
    """Cooperate until the opponent defects once, then defect forever."""

    name = "grim_trigger"

    def choose(self, ctx):
        for rec in ctx.history:
            if rec.choices[1 - ctx.seat] is Option.A:
                return Option.A
        return Option.B


class SeededRandom(ScriptedPolicy):
    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def choose(self, ctx):
        digest = hashlib.sha256(f"{self.seed}:{ctx.round_index}".encode()).digest()
        return Option.A if digest[0] & 1 == 0 else Option.B


class ModelPolicy(Policy):
    """Delegates both phases to a chat model through the gateway."""

    def __init__(self, gateway: Gateway, cfg: ModelConfig, seed: int | None = None,
                 parse_retries: int = 3):
        self.gateway = gateway
        self.cfg = cfg
        self.seed = seed
        self.parse_retries = parse_retries
        self.name = f"model:{cfg.name}"

    def _complete(self, ctx: DecisionContext) -> str:
        if not ctx.rendered_prompt:
            raise PolicyError(ctx.round_index, "no rendered prompt")
        try:
            ex = self.gateway.complete(self.cfg, ctx.rendered_prompt, seed=self.seed)
        except GatewayError as exc:
            self.last_attempts += exc.attempt_count
            raise PolicyError(ctx.round_index, f"{type(exc).__name__}: {exc}",
                              self.last_attempts) from exc
        self.last_attempts += ex.attempt_count
        return ex.response_text

    def compose_message(self, ctx: DecisionContext) -> str:
        if not ctx.spec.communication_enabled:
            raise ValueError("compose_message called in a game without communication")
        self.last_attempts = 0
        return self._complete(ctx)

    def decide(self, ctx: DecisionContext) -> Option:
        self.last_attempts = 0
        for _ in range(self.parse_retries + 1):
            text = self._complete(ctx)
            try:
                return parse_choice(text, ctx.option_labels)
            except NoChoiceFound:
                continue
        raise ChoiceParseFailure(
            ctx.round_index,
            f"no option label in response after {self.parse_retries + 1} queries",
            self.last_attempts,
        )


BUILTIN: dict[str, Callable[[int], Policy]] = {
    "always_cooperate": lambda seed: AlwaysCooperate(),
    "always_defect": lambda seed: AlwaysDefect(),
    "tit_for_tat": lambda seed: TitForTat(),
    "grim_trigger": lambda seed: GrimTrigger(),
    "random": lambda seed: SeededRandom(seed),
    "fixed_a": lambda seed: Fixed(Option.A),
    "fixed_b": lambda seed: Fixed(Option.B),
}


def builtin_policies() -> dict[str, Callable[[int], Policy]]:
    """Catalog of scripted policies, keyed by name; values take a seed."""
    return dict(BUILTIN)


def make_scripted(name: str, seed: int = 0) -> Policy:
    try:
        return BUILTIN[name](seed)
    except KeyError:
        raise ValueError(f"unknown scripted policy {name!r}; "
                         f"choose from {', '.join(sorted(BUILTIN))}") from None


def transcript(policies: Sequence[Policy], spec: GameSpec) -> list[tuple[Option, Option]]:
    """Play two scripted policies without prompts; used for quick checks."""
    from .game import GameState, apply_round, make_record

    state = GameState(spec)
    profiles = (AgentProfile("agent1", "cooperative"), AgentProfile("agent2", "cooperative"))
    while state.next_round <= spec.n_rounds:
        r = state.next_round
        choices = []
        for seat, policy in enumerate(policies):
            ctx = DecisionContext(spec, profiles[seat], profiles[1 - seat].agent_id, seat,
                                  state.history, (), r)
            choices.append(policy.decide(ctx))
        messages = (Message("agent1", ""), Message("agent2", "")) if spec.communication_enabled else ()
        state = apply_round(state, make_record(spec, r, *choices, messages=messages))
    return [rec.choices for rec in state.history]
