"""Per-post content feature detection and per-user aggregation.

Eleven content features are counted per post: emoji, emoticon, venmo_emoji,
repeated_chars, excitement, single_exclaim, ellipses, shouting, laughing,
omg, curse. Punctuation-driven features (excitement, single_exclaim,
ellipses, shouting) are detected on the raw note text; lexical features on
word tokens. Per user we report the average count per post and the fraction
of posts containing each feature, plus structural features.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .corpus import UserProfile
from .errors import EmptyProfile
from .tokenizer import (EMOJI, EMOTICON, SHORTCODE, WORD, TokenizedPost,
                        _read_data_lines)

CONTENT_FEATURES = (
    "emoji", "emoticon", "venmo_emoji", "repeated_chars", "excitement",
    "single_exclaim", "ellipses", "shouting", "laughing", "omg", "curse",
)

STRUCTURAL_FEATURES = ("pct_charge", "avg_likes", "avg_len_chars", "avg_len_tokens")

_REPEATED_RE = re.compile(r"(.)\1\1")          # same character 3+ in a row
_EXCITEMENT_RE = re.compile(r"!{2,}")          # maximal runs of 2+ '!'
_ELLIPSIS_RE = re.compile(r"…|\.{3,}")    # '…' or runs of 3+ '.'
_LAUGH_RE = re.compile(r"(?:ha|he){2,}$")
_OMG_RE = re.compile(r"o+m+g+$")


@lru_cache(maxsize=1)
def default_curse_lexicon() -> frozenset[str]:
    return frozenset(_read_data_lines("curse_words.txt"))


@lru_cache(maxsize=1)
def default_laughing_lexicon() -> frozenset[str]:
    return frozenset(_read_data_lines("laughing.txt"))


@dataclass(frozen=True)
class ContentCounts:
    emoji: int = 0
    emoticon: int = 0
    venmo_emoji: int = 0
    repeated_chars: int = 0
    excitement: int = 0
    single_exclaim: int = 0
    ellipses: int = 0
    shouting: int = 0
    laughing: int = 0
    omg: int = 0
    curse: int = 0

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in CONTENT_FEATURES], dtype=np.float64)


assert tuple(f.name for f in fields(ContentCounts)) == CONTENT_FEATURES


@dataclass(frozen=True)
class EngineeredFeatures:
    """Per-user aggregates: (avg, pct) per content feature plus structure."""

    avg_per_post: dict[str, float]
    pct_posts_containing: dict[str, float]
    pct_charge: float
    avg_likes: float
    avg_len_chars: float
    avg_len_tokens: float
    pct_as_actor: float

    def to_vector(self, include_actor_pct: bool = False) -> np.ndarray:
        vals: list[float] = []
        for name in CONTENT_FEATURES:
            vals.append(self.avg_per_post[name])
            vals.append(self.pct_posts_containing[name])
        vals.extend([self.pct_charge, self.avg_likes,
                     self.avg_len_chars, self.avg_len_tokens])
        if include_actor_pct:
            vals.append(self.pct_as_actor)
        return np.array(vals, dtype=np.float64)


def engineered_feature_names(include_actor_pct: bool = False) -> list[str]:
    """Column names in the order produced by EngineeredFeatures.to_vector."""
    names: list[str] = []
    for f in CONTENT_FEATURES:
        names.append(f"{f}_avg")
        names.append(f"{f}_pct")
    names.extend(STRUCTURAL_FEATURES)
    if include_actor_pct:
        names.append("pct_as_actor")
    return names


def detect_content_features(post: TokenizedPost,
                            curse_lexicon: frozenset[str] | None = None,
                            laughing_lexicon: frozenset[str] | None = None) -> ContentCounts:
    """Count the eleven content features in one tokenized post."""
    if curse_lexicon is None:
        curse_lexicon = default_curse_lexicon()
    if laughing_lexicon is None:
        laughing_lexicon = default_laughing_lexicon()

    raw = post.raw
    emoji = emoticon = venmo = repeated = laughing = omg = curse = 0
    for tok in post.tokens:
        if tok.kind == EMOJI:
            emoji += 1
        elif tok.kind == EMOTICON:
            emoticon += 1
        elif tok.kind == SHORTCODE:
            venmo += 1
        elif tok.kind == WORD:
            low = tok.surface.lower()
            if _REPEATED_RE.search(low):
                repeated += 1
            if low in laughing_lexicon or _LAUGH_RE.fullmatch(low):
                laughing += 1
            if _OMG_RE.fullmatch(low):
                omg += 1
            if low in curse_lexicon:
                curse += 1

    excitement = len(_EXCITEMENT_RE.findall(raw))
    stripped = raw.rstrip()
    single_exclaim = 1 if stripped.endswith("!") and raw.count("!") == 1 else 0
    ellipses = len(_ELLIPSIS_RE.findall(raw))
    alpha = [c for c in raw if c.isalpha()]
    shouting = 1 if len(alpha) >= 2 and all(c.isupper() for c in alpha) else 0

    return ContentCounts(
        emoji=emoji, emoticon=emoticon, venmo_emoji=venmo,
        repeated_chars=repeated, excitement=excitement,
        single_exclaim=single_exclaim, ellipses=ellipses, shouting=shouting,
        laughing=laughing, omg=omg, curse=curse,
    )


def aggregate_user_features(profile: UserProfile,
                            posts: list[TokenizedPost],
                            counts: list[ContentCounts] | None = None) -> EngineeredFeatures:
    """Aggregate per-post counts and structure into one user's feature row.

    posts must align one-to-one with profile.posts. Precomputed counts may be
    passed to avoid re-detection.
    """
    n = len(profile.posts)
    if n == 0:
        raise EmptyProfile(f"user {profile.user_id} has no posts")
    if len(posts) != n:
        raise ValueError("posts must align with profile.posts")
    if counts is None:
        counts = [detect_content_features(p) for p in posts]

    matrix = np.stack([c.as_vector() for c in counts])
    avg = matrix.mean(axis=0)
    pct = (matrix > 0).mean(axis=0)

    kinds = [t.kind for t, _ in profile.posts]
    roles = [role for _, role in profile.posts]
    likes = [t.likes_count for t, _ in profile.posts]
    notes = [t.note for t, _ in profile.posts]

    return EngineeredFeatures(
        avg_per_post={name: float(avg[i]) for i, name in enumerate(CONTENT_FEATURES)},
        pct_posts_containing={name: float(pct[i]) for i, name in enumerate(CONTENT_FEATURES)},
        pct_charge=sum(1 for k in kinds if k == "charge") / n,
        avg_likes=float(np.mean(likes)),
        avg_len_chars=float(np.mean([len(s) for s in notes])),
        avg_len_tokens=float(np.mean([len(p.tokens) for p in posts])),
        pct_as_actor=sum(1 for r in roles if r == "actor") / n,
    )
