"""Localized prompt templates and single-pass placeholder rendering.

Template files are named ``<game>_<lang>_<phase>_<known|unknown>.txt`` and use
``{name}`` placeholders. ``{{`` and ``}}`` render as literal braces. Each
language also has a ``locale_<lang>.json`` holding option labels,
personality texts and the line formats used for history and messages.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .game import Message, Option, RoundRecord, to_json_number

DEFAULT_TEMPLATE_DIR = Path(__file__).parent / "data" / "templates"

PHASES = ("communication", "decision")
VARIANTS = ("known", "unknown")

COMMON_PLACEHOLDERS = frozenset(
    {"game_description", "option_a", "option_b", "payoffs", "personality",
     "opponent_id", "round"}
)
DECISION_PLACEHOLDERS = frozenset({"history", "messages"})

_TOKEN = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}")


class TemplateError(ValueError):
    pass


class MissingPlaceholder(TemplateError):
    def __init__(self, name: str):
        super().__init__(f"no binding for placeholder {{{name}}}")
        self.name = name


class UnknownPlaceholder(TemplateError):
    def __init__(self, name: str):
        super().__init__(f"binding {name!r} is not used by the template")
        self.name = name


@dataclass(frozen=True)
class PromptTemplate:
    game: str
    language: str
    phase: str
    variant: str
    body: str

    @property
    def placeholders(self) -> frozenset[str]:
        return placeholders(self.body)

    @property
    def filename(self) -> str:
        return f"{self.game}_{self.language}_{self.phase}_{self.variant}.txt"


@dataclass
class RenderBinding:
    values: dict[str, str] = field(default_factory=dict)


def placeholders(body: str) -> frozenset[str]:
    return frozenset(m.group(1) for m in _TOKEN.finditer(body) if m.group(1))


def substitute(body: str, values: Mapping[str, object], strict: bool = False) -> str:
    """Replace every ``{name}`` in one pass; substituted text is never rescanned."""
    if strict:
        used = placeholders(body)
        for name in sorted(values):
            if name not in used:
                raise UnknownPlaceholder(name)

    def repl(m: re.Match) -> str:
        token = m.group(0)
        if token == "{{":
            return "{"
        if token == "}}":
            return "}"
        name = m.group(1)
        if name not in values:
            raise MissingPlaceholder(name)
        return str(values[name])

    return _TOKEN.sub(repl, body)


def render(template: PromptTemplate | str, binding: RenderBinding | Mapping[str, object],
           strict: bool = False) -> str:
    body = template.body if isinstance(template, PromptTemplate) else template
    values = binding.values if isinstance(binding, RenderBinding) else binding
    return substitute(body, values, strict=strict)


@dataclass(frozen=True)
class Locale:
    """Per-language strings that are not part of the phase templates."""

    language: str
    option_labels: tuple[str, str]
    personalities: Mapping[str, str]
    games: Mapping[str, str]
    payoff_line: Mapping[str, str]
    history_line: str
    history_empty: str
    message_line: str
    messages_empty: str
    game_terms: tuple[str, ...] = ()

    def label(self, option: Option) -> str:
        return self.option_labels[option.index]

    @classmethod
    def from_dict(cls, language: str, data: Mapping) -> "Locale":
        return cls(
            language=language,
            option_labels=tuple(data["option_labels"]),
            personalities=dict(data["personalities"]),
            games=dict(data["games"]),
            payoff_line=dict(data["payoff_line"]),
            history_line=data["history_line"],
            history_empty=data["history_empty"],
            message_line=data["message_line"],
            messages_empty=data.get("messages_empty", ""),
            game_terms=tuple(data.get("game_terms", ())),
        )


@lru_cache(maxsize=None)
def _load_locale(path: Path) -> Locale:
    language = path.stem.split("_", 1)[1]
    with path.open(encoding="utf-8") as fh:
        return Locale.from_dict(language, json.load(fh))


def load_locale(language: str, template_dir: Path | str | None = None) -> Locale:
    root = Path(template_dir) if template_dir else DEFAULT_TEMPLATE_DIR
    path = root / f"locale_{language}.json"
    if not path.exists():
        raise TemplateError(f"no locale file for language {language!r} in {root}")
    return _load_locale(path.resolve())


def _as_locale(language: str | Locale) -> Locale:
    return language if isinstance(language, Locale) else load_locale(language)


def render_history(records: Sequence[RoundRecord], language: str | Locale,
                   agent_ids: tuple[str, str] = ("agent1", "agent2")) -> str:
    """One line per past round with both choices and both payoffs."""
    locale = _as_locale(language)
    if not records:
        return locale.history_empty
    lines = []
    for rec in records:
        lines.append(substitute(locale.history_line, {
            "round": rec.round_index,
            "agent1": agent_ids[0],
            "agent2": agent_ids[1],
            "choice1": locale.label(rec.choices[0]),
            "choice2": locale.label(rec.choices[1]),
            "value1": to_json_number(rec.payoffs[0]),
            "value2": to_json_number(rec.payoffs[1]),
        }))
    return "\n".join(lines)


def render_messages(messages: Sequence[Message | tuple[str, str]],
                    language: str | Locale) -> str:
    locale = _as_locale(language)
    if not messages:
        return locale.messages_empty
    lines = []
    for msg in messages:
        agent_id, text = (msg.agent_id, msg.text) if isinstance(msg, Message) else msg
        lines.append(substitute(locale.message_line, {"agent_id": agent_id, "text": text}))
    return "\n".join(lines)


def render_payoffs(matrix, locale: Locale, seat: int, opponent_id: str) -> str:
    """Describe every outcome from the point of view of the agent in ``seat``."""
    fmt = locale.payoff_line[matrix.orientation.value]
    lines = []
    for own in (Option.A, Option.B):
        for other in (Option.A, Option.B):
            pair = (own, other) if seat == 0 else (other, own)
            values = matrix.cell(*pair)
            lines.append(substitute(fmt, {
                "own": locale.label(own),
                "other": locale.label(other),
                "opponent": opponent_id,
                "own_value": to_json_number(values[seat]),
                "other_value": to_json_number(values[1 - seat]),
            }))
    return "\n".join(lines)


class TemplateSet:
    """Templates indexed by (game, language, phase, variant)."""

    def __init__(self, templates: Iterable[PromptTemplate] = (), locales: Mapping[str, Locale] | None = None):
        self.templates = {(t.game, t.language, t.phase, t.variant): t for t in templates}
        self.locales = dict(locales or {})

    def get(self, game: str, language: str, phase: str, known: bool) -> PromptTemplate:
        key = (game, language, phase, "known" if known else "unknown")
        try:
            return self.templates[key]
        except KeyError:
            raise TemplateError(f"missing template {'_'.join(key)}.txt") from None

    def locale(self, language: str) -> Locale:
        try:
            return self.locales[language]
        except KeyError:
            raise TemplateError(f"missing locale for language {language!r}") from None

    @classmethod
    def load(cls, directory: Path | str | None = None) -> "TemplateSet":
        root = Path(directory) if directory else DEFAULT_TEMPLATE_DIR
        templates = []
        for path in sorted(root.glob("*.txt")):
            parts = path.stem.rsplit("_", 3)
            if len(parts) != 4 or parts[2] not in PHASES or parts[3] not in VARIANTS:
                continue
            templates.append(PromptTemplate(*parts, body=path.read_text(encoding="utf-8")))
        locales = {}
        for path in sorted(root.glob("locale_*.json")):
            loc = _load_locale(path.resolve())
            locales[loc.language] = loc
        return cls(templates, locales)


def template_violations(template: PromptTemplate) -> list[str]:
    found = template.placeholders
    required = set(COMMON_PLACEHOLDERS)
    if template.phase == "decision":
        required |= DECISION_PLACEHOLDERS
    out = [f"{template.filename}: missing placeholder {{{name}}}"
           for name in sorted(required - found)]
    if template.variant == "known" and "total" not in found:
        out.append(f"{template.filename}: missing placeholder {{total}}")
    if template.variant == "unknown" and "total" in found:
        out.append(f"{template.filename}: rounds-unknown template must not use {{total}}")
    return out


def validate_template_set(templates: TemplateSet, config) -> list[str]:
    """Report missing (game, language, phase, variant) files, bad placeholders and locales.

    ``config`` must provide ``template_requirements()`` yielding
    ``(game, language, phase, variant)`` tuples and ``languages``.
    """
    violations = []
    for key in sorted(set(config.template_requirements())):
        game, language, phase, variant = key
        tmpl = templates.templates.get(key)
        if tmpl is None:
            violations.append(
                f"missing template {'_'.join(key)}.txt (language={language}, phase={phase})"
            )
            continue
        violations.extend(template_violations(tmpl))
    games = sorted({key[0] for key in config.template_requirements()})
    for language in sorted(set(config.languages)):
        loc = templates.locales.get(language)
        if loc is None:
            violations.append(f"missing locale_{language}.json")
            continue
        for trait in ("cooperative", "selfish"):
            if not loc.personalities.get(trait):
                violations.append(f"locale_{language}.json: no {trait} personality text")
        for game in games:
            if not loc.games.get(game):
                violations.append(f"locale_{language}.json: no description for game {game!r}")
        a, b = loc.option_labels
        if not a or not b or a.casefold() == b.casefold():
            violations.append(f"locale_{language}.json: option labels must be nonempty and distinct")
    return violations
