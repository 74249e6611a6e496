import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paylens.tokenizer import (EMOJI, EMOTICON, NUMBER, PUNCT, SHORTCODE,
                               WORD, Token, generate_ngrams, lemma_for_word,
                               lemmatize, tokenize_post, user_ngrams)


def kinds_and_surfaces(note):
    return [(t.kind, t.surface) for t in tokenize_post(note).tokens]


class TestTokenizePost:
    def test_shortcode_and_word(self):
        assert kinds_and_surfaces(":uber: ride") == [
            (SHORTCODE, ":uber:"), (WORD, "ride")]

    def test_empty_note(self):
        assert tokenize_post("").tokens == ()

    def test_adjacent_emoji_stay_separate(self):
        assert kinds_and_surfaces("pizza🍕🍕 :-)") == [
            (WORD, "pizza"), (EMOJI, "🍕"), (EMOJI, "🍕"), (EMOTICON, ":-)")]

    def test_zwj_family_is_one_token(self):
        note = "👩‍👩‍👧"
        assert kinds_and_surfaces(note) == [(EMOJI, note)]

    def test_skin_tone_modifier_attaches(self):
        note = "👍🏽"
        assert kinds_and_surfaces(note) == [(EMOJI, note)]

    def test_variation_selector_attaches(self):
        note = "❤️"
        assert kinds_and_surfaces(note) == [(EMOJI, note)]

    def test_flag_pair_is_one_token(self):
        assert kinds_and_surfaces("🇺🇸 trip") == [(EMOJI, "🇺🇸"), (WORD, "trip")]

    def test_keycap_sequence(self):
        assert kinds_and_surfaces("1️⃣") == [(EMOJI, "1️⃣")]

    def test_currency_splits_off_number(self):
        assert kinds_and_surfaces("$10") == [(PUNCT, "$"), (NUMBER, "10")]

    def test_emoticon_lexicon(self):
        assert kinds_and_surfaces("thanks :-) <3") == [
            (WORD, "thanks"), (EMOTICON, ":-)"), (EMOTICON, "<3")]

    def test_emoticon_not_inside_word(self):
        # xD is an emoticon alone but not when a word continues
        assert kinds_and_surfaces("xD")[0][0] == EMOTICON
        assert kinds_and_surfaces("xDay")[0] == (WORD, "xDay")

    def test_shortcode_beats_emoticon(self):
        assert kinds_and_surfaces(":p:")[0] == (SHORTCODE, ":p:")

    def test_punct_runs_collapse(self):
        assert kinds_and_surfaces("wow!!!") == [(WORD, "wow"), (PUNCT, "!!!")]

    def test_mixed_punct_split(self):
        assert kinds_and_surfaces("?!") == [(PUNCT, "?"), (PUNCT, "!")]

    def test_apostrophe_word(self):
        assert kinds_and_surfaces("don't") == [(WORD, "don't")]

    @given(st.text(max_size=80))
    @settings(max_examples=300, deadline=None)
    def test_total_and_reconstructs_up_to_whitespace(self, note):
        post = tokenize_post(note)
        joined = "".join(t.surface for t in post.tokens)
        assert joined == "".join(note.split())
        assert all(t.surface for t in post.tokens)

    @given(st.text(max_size=80))
    @settings(max_examples=200, deadline=None)
    def test_deterministic(self, note):
        first = tokenize_post(note)
        second = tokenize_post(note)
        assert first == second

    def test_word_lemma_is_lowercase(self):
        for tok in tokenize_post("Huge PIZZA Party").tokens:
            assert tok.lemma == tok.lemma.lower()


class TestLemmatize:
    @pytest.mark.parametrize("word,expected", [
        ("Drinks", "drink"),
        ("parties", "party"),
        ("running", "run"),
        ("making", "make"),
        ("falling", "fall"),
        ("boxes", "box"),
        ("dishes", "dish"),
        ("classes", "class"),
        ("movies", "movie"),
        ("tried", "try"),
        ("stopped", "stop"),
        ("baked", "bake"),
        ("played", "play"),
        ("went", "go"),
        ("bought", "buy"),
        ("women", "woman"),
        ("thing", "thing"),
        ("kiss", "kiss"),
        ("bus", "bus"),
        ("this", "this"),
        ("gas", "gas"),
        ("mom's", "mom"),
    ])
    def test_rules_and_exceptions(self, word, expected):
        assert lemma_for_word(word) == expected

    def test_non_word_tokens_unchanged(self):
        tok = Token(surface="🍕", lemma="🍕", kind=EMOJI)
        assert lemmatize(tok) is tok
        code = Token(surface=":uber:", lemma=":uber:", kind=SHORTCODE)
        assert lemmatize(code) is code

    def test_word_token_gets_lemma(self):
        tok = Token(surface="Drinks", lemma="Drinks", kind=WORD)
        assert lemmatize(tok).lemma == "drink"


class TestGenerateNgrams:
    def test_unigrams_and_bigrams(self):
        post = tokenize_post("pizza night")
        assert generate_ngrams(post, (1, 2)) == ["pizza", "night", "pizza night"]

    def test_single_token(self):
        post = tokenize_post("pizza")
        assert generate_ngrams(post, (1, 2)) == ["pizza"]

    def test_separate_posts_never_combine(self):
        posts = [tokenize_post("a"), tokenize_post("b")]
        grams = user_ngrams(posts, (1, 2))
        assert "a b" not in grams
        assert sorted(grams) == ["a", "b"]

    def test_emission_order_by_n_then_position(self):
        post = tokenize_post("a b c")
        assert generate_ngrams(post, (1, 3)) == [
            "a", "b", "c", "a b", "b c", "a b c"]

    def test_invalid_range_rejected(self):
        post = tokenize_post("a b")
        for bad in ((0, 1), (2, 1), (1, 4)):
            with pytest.raises(ValueError):
                generate_ngrams(post, bad)

    @given(st.lists(st.sampled_from("abcdef"), max_size=12),
           st.integers(1, 3), st.integers(1, 3))
    @settings(max_examples=200, deadline=None)
    def test_count_formula(self, tokens, low, span):
        high = min(3, low + span - 1)
        post = tokenize_post(" ".join(tokens))
        grams = generate_ngrams(post, (low, high))
        expected = sum(max(0, len(post.tokens) - n + 1)
                       for n in range(low, high + 1))
        assert len(grams) == expected

    def test_user_multiset_equals_union_of_posts(self):
        notes = ["pizza night out", "rent", "coffee run club", ""]
        posts = [tokenize_post(n) for n in notes]
        combined = sorted(user_ngrams(posts, (1, 2)))
        per_post = sorted(g for p in posts for g in generate_ngrams(p, (1, 2)))
        assert combined == per_post
