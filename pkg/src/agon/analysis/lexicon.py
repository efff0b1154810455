"""Tokenization and stopword-filtered word counts for agent messages."""

from __future__ import annotations

import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..prompts import DEFAULT_TEMPLATE_DIR, TemplateError, load_locale
from .metrics import AnalysisError, MetricsTable, completed, group_value, _check_keys, _sort_key

LEXICON_DIR = Path(__file__).resolve().parent.parent / "data" / "lexicons"


class MissingStopwords(AnalysisError):
    def __init__(self, language: str):
        super().__init__(f"no stopword list for language {language!r}")
        self.language = language


def _is_word_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "LMN"


def tokenize(text: str) -> list[str]:
    """Split on anything that is not a letter, mark or digit; lowercase.

    Text is NFC-normalized first. Tokens made only of digits are dropped.
    """
    text = unicodedata.normalize("NFC", text)
    tokens, current = [], []
    for ch in text:
        if _is_word_char(ch):
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return [t.lower() for t in tokens if not all(unicodedata.category(c)[0] == "N" for c in t)]


def load_stopwords(language: str, directory: Path | None = None) -> frozenset[str]:
    path = (directory or LEXICON_DIR) / f"{language}.txt"
    if not path.exists():
        raise MissingStopwords(language)
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.update(tokenize(line))
    return frozenset(words)


@dataclass
class LexiconConfig:
    stopwords: Mapping[str, frozenset[str]]
    excluded_terms: Mapping[str, Sequence[str]] = field(default_factory=dict)
    top_k: int = 5

    def excluded_tokens(self, language: str) -> frozenset[str]:
        out = set()
        for term in self.excluded_terms.get(language, ()):
            out.update(tokenize(term))
        return frozenset(out)

    @classmethod
    def default(cls, languages: Iterable[str], top_k: int = 5,
                lexicon_dir: Path | None = None,
                template_dir: Path | None = None) -> "LexiconConfig":
        """Shipped stopwords plus the locale's option labels and game terms."""
        stop, excluded = {}, {}
        for lang in sorted(set(languages)):
            stop[lang] = load_stopwords(lang, lexicon_dir)
            try:
                loc = load_locale(lang, template_dir or DEFAULT_TEMPLATE_DIR)
                excluded[lang] = list(loc.option_labels) + list(loc.game_terms)
            except TemplateError:
                excluded[lang] = []
        return cls(stop, excluded, top_k)


def word_frequencies(records: Iterable[dict], lexicon: LexiconConfig,
                     group_by: Sequence[str] = ("language", "game")) -> MetricsTable:
    """Top-k words per group by raw count; ties go to the smaller codepoint string."""
    keys = _check_keys(group_by)
    counts: dict[tuple, Counter] = defaultdict(Counter)
    for rec in completed(records):
        if not rec["factors"].get("communication"):
            continue
        language = rec["factors"]["language"]
        if language not in lexicon.stopwords:
            raise MissingStopwords(language)
        drop = lexicon.stopwords[language] | lexicon.excluded_tokens(language)
        bucket = counts[tuple(group_value(rec, k) for k in keys)]
        for rnd in rec["rounds"]:
            for msg in rnd["messages"]:
                bucket.update(t for t in tokenize(msg["text"]) if t not in drop)
    table = MetricsTable("word_frequencies", keys, ("rank", "word", "count"))
    for gkey in sorted(counts, key=_sort_key):
        ranked = sorted(counts[gkey].items(), key=lambda kv: (-kv[1], kv[0]))[: lexicon.top_k]
        for rank, (word, n) in enumerate(ranked, start=1):
            row = dict(zip(keys, gkey))
            row.update(rank=rank, word=word, count=n)
            table.rows.append(row)
    return table
