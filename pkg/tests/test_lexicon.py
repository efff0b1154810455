import string
from collections import Counter

import pytest

from agon.analysis import (
    LexiconConfig,
    MissingStopwords,
    load_stopwords,
    tokenize,
    word_frequencies,
)

from conftest import record


def lex(stop=(), excluded=(), lang="en", top_k=5):
    return LexiconConfig({lang: frozenset(stop)}, {lang: list(excluded)}, top_k)


def top(table):
    return [(r["word"], r["count"]) for r in table.rows]


def test_tokenize_basic():
    assert tokenize("Trust, trust; PENALTY!") == ["trust", "trust", "penalty"]
    assert tokenize("round 10 and r2") == ["round", "and", "r2"]


def test_tokenize_vietnamese_nfc():
    decomposed = "Việt"
    assert tokenize(decomposed) == ["việt"]


def test_tokenize_arabic_marks_stay_in_word():
    assert tokenize("نَتَعاوَن معاً.") == ["نَتَعاوَن", "معاً"]


def test_trust_counts():
    recs = [record(rounds=[("AA", ("trust trust", "penalty"))])]
    assert top(word_frequencies(recs, lex())) == [("trust", 2), ("penalty", 1)]


def test_game_terms_excluded():
    recs = [record(rounds=[("AA", ("choose option a this round", "Option B round"))])]
    table = word_frequencies(recs, lex(stop={"this"}, excluded=["Option A", "Option B", "round", "choose"]))
    assert top(table) == []


def test_ties_break_by_word():
    recs = [record(rounds=[("AA", ("good bad", "fine"))])]
    assert [w for w, _ in top(word_frequencies(recs, lex()))] == ["bad", "fine", "good"]


def test_top_k_limit():
    recs = [record(rounds=[("AA", ("a b c d e f g", ""))])]
    assert len(word_frequencies(recs, lex(top_k=3)).rows) == 3


def test_missing_stopwords():
    with pytest.raises(MissingStopwords) as info:
        word_frequencies([record(rounds=[("AA", ("x", "y"))], language="fr")], lex())
    assert info.value.language == "fr"
    with pytest.raises(MissingStopwords):
        load_stopwords("fr")


def test_shipped_lists_load():
    for lang in ("en", "ar", "vn"):
        assert len(load_stopwords(lang)) > 10
    assert "the" in load_stopwords("en")


def test_default_excludes_option_labels():
    cfg = LexiconConfig.default(["en", "ar", "vn"])
    assert "option" in cfg.excluded_tokens("en")
    assert "lựa" in cfg.excluded_tokens("vn")


TEXTS = {
    "en": ["Let's trust each other, trust matters!", "I will cooperate; trust me.",
           "Defecting hurts us both. Cooperate?"],
    "ar": ["لنثق ببعضنا، الثقة مهمة!", "سأتعاون معك؛ الثقة أولاً.", "التعاون أفضل لنا. الثقة؟"],
    "vn": ["Hãy tin tưởng nhau, tin tưởng là quan trọng!", "Tôi sẽ hợp tác; tin tôi.",
           "Hợp tác tốt hơn. Tin nhé?"],
}


def brute_force(texts, drop):
    punct = set(string.punctuation) | set("،؛؟")
    counts = Counter()
    for text in texts:
        for raw in text.split():
            word = "".join(ch for ch in raw if ch not in punct).lower()
            if word and word not in drop:
                counts[word] += 1
    return counts


@pytest.mark.parametrize("lang", sorted(TEXTS))
def test_trilingual_recount(lang):
    texts = TEXTS[lang]
    stop = load_stopwords(lang)
    recs = [record(rounds=[("AA", (t, ""))], language=lang) for t in texts]
    table = word_frequencies(recs, LexiconConfig({lang: stop}, {lang: []}, top_k=50), ["language"])
    oracle = brute_force(texts, stop)
    got = {r["word"]: r["count"] for r in table.rows}
    # "Let's" splits on the apostrophe in the tokenizer; skip it in the comparison
    oracle.pop("lets", None)
    got.pop("let", None)
    got.pop("s", None)
    assert got == dict(oracle)
