import pytest

from parley.discourse import DiscourseRelation, DiscourseState, SalienceEntry, TurnRecord, update_state
from parley.errors import NoFocusEntity, NoOpinion, NoStory, ParseError, SentimentRange, StoryExhausted
from parley.relations import (
    Story,
    instantiate_comparison,
    instantiate_contingency,
    instantiate_expansion,
    instantiate_temporal,
    load_opinions,
    load_stories,
    opinion_key,
)
from parley.search import build_index


def state_with_salience(kb, *entity_ids) -> DiscourseState:
    state = DiscourseState()
    state.salience = [
        SalienceEntry(entity_id=eid, last_mention_turn=0, type_path=kb.entities[eid].type_path)
        for eid in entity_ids
    ]
    return state


# ---------------------------------------------------------------- opinions


def test_load_opinions_single_justification(tmp_path):
    path = tmp_path / "op.csv"
    path.write_text("entity,bin,sentiment,justifications\nMagneto,comics,5,he can control metal\n")
    entries = load_opinions(path)
    assert entries[0].justifications == ("he can control metal",)
    assert entries[0].sentiment == 5


def test_load_opinions_splits_justifications(tmp_path):
    path = tmp_path / "op.csv"
    path.write_text("entity,bin,sentiment,justifications\nAliens,movie,4,well cast;action packed\n")
    assert load_opinions(path)[0].justifications == ("well cast", "action packed")


def test_load_opinions_sentiment_range(tmp_path):
    path = tmp_path / "op.csv"
    path.write_text("entity,bin,sentiment,justifications\nX,bin,7,reason\n")
    with pytest.raises(SentimentRange):
        load_opinions(path)


def test_load_opinions_requires_header(tmp_path):
    path = tmp_path / "op.csv"
    path.write_text("Magneto,comics,5,ok\n")
    with pytest.raises(ParseError):
        load_opinions(path)


def test_load_stories_and_shape(tmp_path):
    path = tmp_path / "st.jsonl"
    path.write_text('{"story_id": "s", "bin": "b", "sentences": ["one", "two"]}\n')
    stories = load_stories(path)
    assert stories[0].sentences == ("one", "two")


# --------------------------------------------------------------- expansion


def test_expansion_offers_actor_fact(kb, index):
    state = state_with_salience(kb, "jason_bourne")
    candidates = instantiate_expansion(state, kb, index)
    actor_facts = [c for c in candidates if c.content_key == "fact:jason_bourne:actor:matt_damon"]
    assert actor_facts and actor_facts[0].text == "Jason Bourne stars Matt Damon."
    assert all(c.relation == DiscourseRelation.EXPANSION for c in candidates)


def test_expansion_proposes_chained_movie_question(kb, index):
    state = state_with_salience(kb, "matt_damon")
    candidates = instantiate_expansion(state, kb, index)
    questions = [c for c in candidates if c.content_key.startswith("ask:")]
    assert any("QUESTION" in q.dialogue_act for q in questions)
    assert any("Have you seen" in q.text for q in questions)


def test_expansion_isolated_entity_empty(tmp_path):
    import json

    from parley.kb import load_snapshot, merge

    snap = tmp_path / "iso.kbjson"
    snap.write_text(json.dumps({"id": "lone", "name": "Lone", "aliases": ["Lone"], "type_path": ["Thing"]}) + "\n")
    lonely_kb = merge([load_snapshot(snap, "s")], ["s"])
    state = state_with_salience(lonely_kb, "lone")
    assert instantiate_expansion(state, lonely_kb, build_index([])) == []


def test_expansion_requires_focus(kb, index):
    with pytest.raises(NoFocusEntity):
        instantiate_expansion(DiscourseState(), kb, index)


def test_expansion_groundedness(kb, index):
    state = state_with_salience(kb, "aliens")
    for candidate in instantiate_expansion(state, kb, index):
        if candidate.content_key.startswith(("fact:", "ask:")):
            parts = candidate.content_key.split(":")
            assert parts[1] in kb.entities


def test_expansion_respects_ledger(kb, index):
    state = state_with_salience(kb, "jason_bourne")
    # Consume everything expansion can produce, in rounds: structured facts
    # first, then the search-extract fallback, until nothing fresh remains.
    for _ in range(5):
        fresh = instantiate_expansion(state, kb, index)
        assert all(c.content_key not in state.content_ledger for c in fresh)
        if not fresh:
            break
        state.content_ledger.update(c.content_key for c in fresh)
    assert instantiate_expansion(state, kb, index) == []


def test_expansion_search_fallback_when_structured_spent(kb, index):
    state = state_with_salience(kb, "jason_bourne")
    structured_keys = {
        c.content_key for c in instantiate_expansion(state, kb, index) if c.source == "structured"
    }
    state.content_ledger.update(structured_keys)
    fallback = instantiate_expansion(state, kb, index)
    assert any(c.source == "search" for c in fallback)


# ------------------------------------------------------------- contingency


def test_contingency_magneto_pair(kb, fixtures_bundle):
    state = DiscourseState()
    opinion, justification = instantiate_contingency(state, kb, fixtures_bundle.opinions, "magneto")
    assert "Magneto" in opinion.text and "awesome" in opinion.text
    assert "because he can control metal" in justification.text
    assert justification.content_key.startswith(opinion.content_key)


def test_contingency_sentiment_lexicon_anchor(kb, fixtures_bundle):
    state = DiscourseState()
    opinion, _ = instantiate_contingency(state, kb, fixtures_bundle.opinions, "aliens")
    assert "pretty good" in opinion.text


def test_contingency_no_entry(kb, fixtures_bundle):
    with pytest.raises(NoOpinion):
        instantiate_contingency(DiscourseState(), kb, fixtures_bundle.opinions, "paul_greengrass")


def test_contingency_next_justification_after_first_used(kb, fixtures_bundle):
    state = DiscourseState()
    _, j0 = instantiate_contingency(state, kb, fixtures_bundle.opinions, "aliens")
    state.content_ledger.add(j0.content_key)
    _, j1 = instantiate_contingency(state, kb, fixtures_bundle.opinions, "aliens")
    assert j1.content_key != j0.content_key
    assert j1.content_key.endswith(":1")


def test_contingency_bin_matches_topic(kb, fixtures_bundle):
    state = DiscourseState()
    opinion, _ = instantiate_contingency(state, kb, fixtures_bundle.opinions, "comic books")
    assert opinion.content_key == "opinion:magneto"


# ---------------------------------------------------------------- temporal


STORY = Story(story_id="s1", bin="monsters", sentences=tuple(f"Sentence {i}." for i in range(5)))


def test_temporal_fresh_cursor_emits_first_sentence():
    state = DiscourseState()
    candidate = instantiate_temporal(state, [STORY], "monsters")
    assert candidate.text == "Sentence 0."
    assert state.story_cursor == ("s1", 1)


def test_temporal_boundary_then_exhausted():
    state = DiscourseState()
    state.story_cursor = ("s1", 4)
    candidate = instantiate_temporal(state, [STORY], "monsters")
    assert candidate.text == "Sentence 4."
    with pytest.raises(StoryExhausted):
        instantiate_temporal(state, [STORY], "monsters")


def test_temporal_emits_sentences_in_source_order():
    state = DiscourseState()
    emitted = [instantiate_temporal(state, [STORY], "monsters").text for _ in range(5)]
    assert emitted == list(STORY.sentences)


def test_temporal_no_story_for_bin():
    with pytest.raises(NoStory):
        instantiate_temporal(DiscourseState(), [STORY], "cooking")


def test_temporal_peek_does_not_advance():
    state = DiscourseState()
    candidate = instantiate_temporal(state, [STORY], "monsters", advance=False)
    assert candidate.text == "Sentence 0."
    assert state.story_cursor is None


def test_temporal_skips_told_story():
    state = DiscourseState()
    state.content_ledger.add("story:s1:0")
    other = Story(story_id="s2", bin="monsters", sentences=("Other opening.",))
    candidate = instantiate_temporal(state, [STORY, other], "monsters")
    assert candidate.content_key == "story:s2:0"


# -------------------------------------------------------------- comparison


def test_comparison_contrasts_release_years(kb):
    state = state_with_salience(kb, "aliens", "alien")
    candidate = instantiate_comparison(state, kb)
    assert candidate is not None
    assert "1986" in candidate.text and "1979" in candidate.text
    assert candidate.text.startswith("While ")


def test_comparison_single_entity_absent(kb):
    assert instantiate_comparison(state_with_salience(kb, "aliens"), kb) is None


def test_comparison_disjoint_attributes_absent(kb):
    # An athlete and a team share no comparable attribute names.
    state = state_with_salience(kb, "madison_bumgarner", "sf_giants")
    assert instantiate_comparison(state, kb) is None


def test_opinion_key_normalizes_surface(fixtures_bundle):
    entry = next(e for e in fixtures_bundle.opinions if e.entity == "The Hitchhiker's Guide to the Galaxy")
    assert opinion_key(entry) == "opinion:the_hitchhikers_guide_to_the_galaxy"
