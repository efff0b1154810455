import pytest
from hypothesis import given, strategies as st

from agon.game import CONVENTIONAL_PD, GameSpec, Message, Option, make_record
from agon.prompts import (
    MissingPlaceholder,
    PromptTemplate,
    TemplateSet,
    UnknownPlaceholder,
    load_locale,
    render,
    render_history,
    render_messages,
    render_payoffs,
    template_violations,
    validate_template_set,
)

from conftest import make_config

A, B = Option.A, Option.B
SPEC = GameSpec("conventional", CONVENTIONAL_PD, n_rounds=10)
SHIPPED = TemplateSet.load()


def full_binding(**extra):
    values = {
        "agent_id": "agent1", "opponent_id": "agent2", "personality": "You are cooperative.",
        "game_description": "A game.", "option_a": "Option A", "option_b": "Option B",
        "payoffs": "...", "round": 1, "total": 10, "history": "No previous rounds.",
        "messages": "",
    }
    values.update(extra)
    return values


def test_direct_substitution():
    assert render("Round {round} of {total}", {"round": 3, "total": 10}) == "Round 3 of 10"


def test_missing_placeholder():
    with pytest.raises(MissingPlaceholder) as info:
        render("Round {round} of {total}", {"round": 3})
    assert info.value.name == "total"


def test_strict_mode_rejects_unused_bindings():
    with pytest.raises(UnknownPlaceholder):
        render("Round {round}", {"round": 1, "total": 10}, strict=True)
    assert render("Round {round}", {"round": 1, "total": 10}) == "Round 1"


def test_escaped_braces():
    assert render("{{literal}} {x}", {"x": 1}) == "{literal} 1"


def test_rounds_unknown_template_has_no_round_count():
    tmpl = SHIPPED.get("pd", "en", "decision", known=False)
    out = render(tmpl, full_binding(round=4))
    assert "This is round 4." in out
    assert " of 10" not in out


def test_shipped_template_empty_history_block():
    tmpl = SHIPPED.get("pd", "en", "decision", known=True)
    out = render(tmpl, full_binding(history=render_history([], "en")))
    assert "Previous rounds:\nNo previous rounds." in out
    assert "{" not in out


def test_render_history_empty_marker():
    assert render_history([], "en") == "No previous rounds."
    assert render_history([], "vn") == load_locale("vn").history_empty


def test_render_history_line_content():
    text = render_history([make_record(SPEC, 1, A, B)], "en")
    assert "Option A" in text and "Option B" in text
    assert "0" in text and "10" in text
    assert text.count("\n") == 0


def test_render_history_one_line_per_round():
    recs = [make_record(SPEC, r, A, B) for r in range(1, 11)]
    for lang in ("en", "ar", "vn"):
        assert len(render_history(recs, lang).splitlines()) == 10


def test_history_uses_localized_labels():
    text = render_history([make_record(SPEC, 1, A, B)], "ar")
    assert "الخيار أ" in text and "Option" not in text


def test_render_messages_order_and_verbatim():
    assert render_messages([], "en") == ""
    out = render_messages([("agent1", "hi"), ("agent2", "ok")], "en")
    assert out.index("agent1") < out.index("agent2")
    assert out == "agent1: hi\nagent2: ok"


def test_message_text_is_not_resubstituted():
    block = render_messages([Message("agent1", "see {round} and {{x}}")], "en")
    tmpl = SHIPPED.get("pd", "en", "decision", known=True)
    out = render(tmpl, full_binding(messages=block, round=2))
    assert "see {round} and {{x}}" in out


@given(st.text(min_size=1, max_size=60), st.text(max_size=60))
def test_message_bodies_pass_through(t1, t2):
    block = render_messages([("agent1", t1), ("agent2", t2)], "en")
    out = render(SHIPPED.get("pd", "en", "decision", known=True), full_binding(messages=block))
    assert t1 in out and t2 in out


@given(st.lists(st.tuples(st.sampled_from([A, B]), st.sampled_from([A, B])), min_size=1, max_size=6),
       st.integers(0, 5), st.integers(0, 1))
def test_history_rendering_is_injective(moves, pos, seat):
    pos = pos % len(moves)
    flipped = list(moves)
    pair = list(flipped[pos])
    pair[seat] = B if pair[seat] is A else A
    flipped[pos] = tuple(pair)
    recs1 = [make_record(SPEC, i + 1, *m) for i, m in enumerate(moves)]
    recs2 = [make_record(SPEC, i + 1, *m) for i, m in enumerate(flipped)]
    for lang in ("en", "ar", "vn"):
        assert render_history(recs1, lang) != render_history(recs2, lang)


def test_rendering_is_byte_identical():
    tmpl = SHIPPED.get("bos", "vn", "communication", known=True)
    assert render(tmpl, full_binding()).encode() == render(tmpl, full_binding()).encode()


def test_payoff_description_is_from_each_seat():
    loc = load_locale("en")
    seat0 = render_payoffs(CONVENTIONAL_PD, loc, 0, "agent2").splitlines()
    seat1 = render_payoffs(CONVENTIONAL_PD, loc, 1, "agent1").splitlines()
    # you defect, the other cooperates: row player gets 0, column player also gets 0
    assert "If you choose Option A and agent2 chooses Option B: you receive a penalty of 0 " in seat0[1]
    assert "If you choose Option A and agent1 chooses Option B: you receive a penalty of 0 " in seat1[1]
    assert "penalty of 10" in seat0[2]


def test_shipped_set_is_complete_for_replication_configs():
    from agon.config import load_config
    from conftest import CONFIGS

    for name in ("replication_pd.json", "replication_bos.json", "mock_demo.json"):
        assert validate_template_set(SHIPPED, load_config(CONFIGS / name)) == []


def test_missing_communication_template_reported():
    templates = TemplateSet(
        [t for key, t in SHIPPED.templates.items()
         if not (key[1] == "ar" and key[2] == "communication")],
        SHIPPED.locales,
    )
    cfg = make_config(languages=["en", "ar"], communication=["on"], rounds_known=[True])
    violations = validate_template_set(templates, cfg)
    assert len(violations) == 1
    assert "pd_ar_communication_known" in violations[0]


def test_template_without_personality_reported():
    body = SHIPPED.get("pd", "en", "decision", known=True).body.replace("{personality}", "")
    tmpl = PromptTemplate("pd", "en", "decision", "known", body)
    violations = template_violations(tmpl)
    assert len(violations) == 1 and "personality" in violations[0]


def test_unknown_variant_must_not_mention_total():
    tmpl = PromptTemplate("pd", "en", "decision", "unknown",
                          SHIPPED.get("pd", "en", "decision", known=True).body)
    assert any("total" in v for v in template_violations(tmpl))


def test_all_shipped_templates_have_required_placeholders():
    assert len(SHIPPED.templates) == 24
    for tmpl in SHIPPED.templates.values():
        assert template_violations(tmpl) == []
