"""Behavioral and review-content features for (user, review) pairs.

Each dataset row describes one review: the writing user's behavioral
profile (history, rating, feedback and time signals, identical across that
user's rows) concatenated with the review's product-context signals. Every
feature is listed in ``USER_FEATURES`` / ``REVIEW_FEATURES`` with its scope
tag (one of history, rating, feedback, time, product, review) and its kind
(continuous or categorical); the shipped ``data/feature_manifest.json``
pins the order and names, and feature files reference its version.

Conventions that apply throughout:

* Entropies are in nats; a single-bin distribution has entropy 0.
* Review-time entropy bins by calendar year; product comment-time entropy
  bins by calendar month.
* Every feature named ``*_ratio`` lies in [0, 1]; ratios with a zero
  denominator emit 0.
* Categorical features are emitted as numeric codes and tagged
  ``categorical`` so the screening module routes them to the
  contingency-table test.

All functions here are pure: the same records always produce the same
vector, and extraction may safely run user- or product-parallel.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from functools import lru_cache
from importlib import resources

import numpy as np

from .numerics import entropy

__all__ = [
    "ReviewRecord",
    "FeatureVector",
    "FeatureMatrix",
    "MANIFEST_VERSION",
    "USER_FEATURES",
    "REVIEW_FEATURES",
    "SCOPES",
    "extract_user_features",
    "extract_review_features",
    "sentiment_score",
    "build_feature_matrix",
    "build_manifest",
    "load_packaged_manifest",
]

MANIFEST_VERSION = 1

SCOPES = ("history", "rating", "feedback", "time", "product", "review")

_EPOCH = date(1970, 1, 1)

_WORD_RE = re.compile(r"[a-z']+")


@dataclass(frozen=True)
class ReviewRecord:
    """One raw review. ``timestamp`` counts days since 1970-01-01."""

    user_id: str
    product_id: str
    rating: int
    helpful_votes: int
    unhelpful_votes: int
    timestamp: int
    category: str
    summary_text: str
    review_text: str
    user_name: str = ""
    user_memo: str = ""

    def __post_init__(self):
        if not 1 <= self.rating <= 5:
            raise ValueError(f"rating must be in 1..5, got {self.rating}")
        if self.helpful_votes < 0 or self.unhelpful_votes < 0:
            raise ValueError("vote counts must be nonnegative")

    @property
    def review_date(self) -> date:
        return _EPOCH + timedelta(days=int(self.timestamp))


@dataclass
class FeatureVector:
    """Parallel lists of values, names, scope tags and kinds."""

    values: list[float] = field(default_factory=list)
    names: list[str] = field(default_factory=list)
    scopes: list[str] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)

    def add(self, name: str, scope: str, kind: str, value: float):
        self.names.append(name)
        self.scopes.append(scope)
        self.kinds.append(kind)
        self.values.append(float(value))

    def extend(self, other: "FeatureVector"):
        self.values.extend(other.values)
        self.names.extend(other.names)
        self.scopes.extend(other.scopes)
        self.kinds.extend(other.kinds)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))


@dataclass
class FeatureMatrix:
    """n x d feature table with per-column names, scopes and kinds."""

    values: np.ndarray
    names: list[str]
    scopes: list[str]
    kinds: list[str]
    manifest_version: int = MANIFEST_VERSION

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        d = self.values.shape[1] if self.values.ndim == 2 else 0
        if not (len(self.names) == len(self.scopes) == len(self.kinds) == d):
            raise ValueError(
                f"column metadata lengths {len(self.names)}/{len(self.scopes)}/"
                f"{len(self.kinds)} do not match width {d}"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def columns_for_scope(self, scope: str) -> list[int]:
        return [i for i, s in enumerate(self.scopes) if s == scope]


# (name, scope, kind) in pinned order. The reviewed-product category block
# (one ratio per catalog category, scope history) is appended after the
# user block; its names are data-driven, prefixed "category_ratio:".
USER_FEATURES = [
    ("n_products", "history", "continuous"),
    ("name_length", "history", "continuous"),
    ("uncommon_name", "history", "categorical"),
    ("has_memo", "history", "categorical"),
    ("memo_length", "history", "continuous"),
    ("min_score", "rating", "categorical"),
    ("max_score", "rating", "categorical"),
    ("score_ratio_1", "rating", "continuous"),
    ("score_ratio_2", "rating", "continuous"),
    ("score_ratio_3", "rating", "continuous"),
    ("score_ratio_4", "rating", "continuous"),
    ("score_ratio_5", "rating", "continuous"),
    ("score_count_1", "rating", "continuous"),
    ("score_count_2", "rating", "continuous"),
    ("score_count_3", "rating", "continuous"),
    ("score_count_4", "rating", "continuous"),
    ("score_count_5", "rating", "continuous"),
    ("positive_ratio", "rating", "continuous"),
    ("negative_ratio", "rating", "continuous"),
    ("rating_entropy", "rating", "continuous"),
    ("mean_rating", "rating", "continuous"),
    ("help_sum", "feedback", "continuous"),
    ("unhelp_sum", "feedback", "continuous"),
    ("help_mean", "feedback", "continuous"),
    ("unhelp_mean", "feedback", "continuous"),
    ("help_ratio", "feedback", "continuous"),
    ("unhelp_ratio", "feedback", "continuous"),
    ("help_median", "feedback", "continuous"),
    ("help_min", "feedback", "continuous"),
    ("help_max", "feedback", "continuous"),
    ("unhelp_median", "feedback", "continuous"),
    ("unhelp_min", "feedback", "continuous"),
    ("unhelp_max", "feedback", "continuous"),
    ("day_gap", "time", "continuous"),
    ("review_time_entropy", "time", "continuous"),
    ("same_date_indicator", "time", "continuous"),
    ("active_ratio", "time", "continuous"),
]

REVIEW_FEATURES = [
    ("product_mean_rating", "product", "continuous"),
    ("product_review_count", "product", "continuous"),
    ("product_score_entropy", "product", "continuous"),
    ("product_time_gap", "product", "continuous"),
    ("product_time_entropy", "product", "continuous"),
    ("product_first_day_reviews", "product", "continuous"),
    ("user_rate", "review", "categorical"),
    ("review_help_votes", "review", "continuous"),
    ("review_unhelp_votes", "review", "continuous"),
    ("comment_gap_days", "review", "continuous"),
    ("comment_gap_ratio", "review", "continuous"),
    ("comment_rank", "review", "continuous"),
    ("comment_rank_ratio", "review", "continuous"),
    ("summary_length", "review", "continuous"),
    ("review_length", "review", "continuous"),
    ("summary_sentiment", "review", "categorical"),
    ("review_sentiment", "review", "categorical"),
]


def _read_wordlist(filename: str) -> frozenset[str]:
    text = resources.files("spamforest.data").joinpath(filename).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def _positive_words() -> frozenset[str]:
    return _read_wordlist("positive_words.txt")


@lru_cache(maxsize=None)
def _negative_words() -> frozenset[str]:
    return _read_wordlist("negative_words.txt")


@lru_cache(maxsize=None)
def _common_names_default() -> frozenset[str]:
    return _read_wordlist("common_names.txt")


def sentiment_score(text: str, positive=None, negative=None) -> int:
    """Sign of (positive hits - negative hits) against the bundled lexicon:
    1 positive, -1 negative, 0 on ties or empty text."""
    positive = _positive_words() if positive is None else positive
    negative = _negative_words() if negative is None else negative
    words = _WORD_RE.findall(text.lower())
    score = sum(w in positive for w in words) - sum(w in negative for w in words)
    return (score > 0) - (score < 0)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _year_month_index(d: date) -> int:
    return d.year * 12 + (d.month - 1)


def extract_user_features(reviews: list[ReviewRecord], categories=None,
                          common_names=None) -> FeatureVector:
    """Behavioral profile of one user over all their reviews.

    ``categories`` is the corpus-wide catalog backing the reviewed-product
    structure block; it defaults to the categories present in ``reviews``.
    ``common_names`` overrides the bundled given-name list.
    """
    if not reviews:
        raise ValueError("cannot extract features from an empty review list")
    users = {r.user_id for r in reviews}
    if len(users) != 1:
        raise ValueError(f"reviews must belong to one user, got {sorted(users)}")

    if categories is None:
        categories = sorted({r.category for r in reviews})
    if common_names is None:
        common_names = _common_names_default()

    out = FeatureVector()
    first = reviews[0]
    name = first.user_name if first.user_name else first.user_id
    name_token = name.lower().split()[0] if name.split() else ""

    ratings = np.array([r.rating for r in reviews])
    helps = np.array([r.helpful_votes for r in reviews], dtype=np.float64)
    unhelps = np.array([r.unhelpful_votes for r in reviews], dtype=np.float64)
    n = len(reviews)

    out.add("n_products", "history", "continuous",
            len({r.product_id for r in reviews}))
    out.add("name_length", "history", "continuous", len(name))
    out.add("uncommon_name", "history", "categorical",
            0 if name_token in common_names else 1)
    out.add("has_memo", "history", "categorical", 1 if first.user_memo else 0)
    out.add("memo_length", "history", "continuous", len(first.user_memo))

    score_counts = np.array([(ratings == s).sum() for s in range(1, 6)],
                            dtype=np.float64)
    score_ratios = score_counts / n
    out.add("min_score", "rating", "categorical", ratings.min())
    out.add("max_score", "rating", "categorical", ratings.max())
    for s in range(1, 6):
        out.add(f"score_ratio_{s}", "rating", "continuous", score_ratios[s - 1])
    for s in range(1, 6):
        out.add(f"score_count_{s}", "rating", "continuous", score_counts[s - 1])
    # High rates are scores 4 and 5; low rates are 1 and 2. Score 3 counts
    # toward neither, so the two ratios sum to at most 1.
    out.add("positive_ratio", "rating", "continuous", (ratings >= 4).mean())
    out.add("negative_ratio", "rating", "continuous", (ratings <= 2).mean())
    out.add("rating_entropy", "rating", "continuous", entropy(score_ratios))
    out.add("mean_rating", "rating", "continuous", ratings.mean())

    out.add("help_sum", "feedback", "continuous", helps.sum())
    out.add("unhelp_sum", "feedback", "continuous", unhelps.sum())
    out.add("help_mean", "feedback", "continuous", helps.mean())
    out.add("unhelp_mean", "feedback", "continuous", unhelps.mean())
    total_votes = helps.sum() + unhelps.sum()
    out.add("help_ratio", "feedback", "continuous", _ratio(helps.sum(), total_votes))
    out.add("unhelp_ratio", "feedback", "continuous", _ratio(unhelps.sum(), total_votes))
    out.add("help_median", "feedback", "continuous", np.median(helps))
    out.add("help_min", "feedback", "continuous", helps.min())
    out.add("help_max", "feedback", "continuous", helps.max())
    out.add("unhelp_median", "feedback", "continuous", np.median(unhelps))
    out.add("unhelp_min", "feedback", "continuous", unhelps.min())
    out.add("unhelp_max", "feedback", "continuous", unhelps.max())

    days = np.array([r.timestamp for r in reviews])
    years = [r.review_date.year for r in reviews]
    first_year, last_year = min(years), max(years)
    span = last_year - first_year + 1
    year_counts = np.zeros(span)
    for yr in years:
        year_counts[yr - first_year] += 1
    out.add("day_gap", "time", "continuous", days.max() - days.min())
    out.add("review_time_entropy", "time", "continuous",
            entropy(year_counts / n))
    out.add("same_date_indicator", "time", "continuous",
            1 if days.max() == days.min() else 0)
    out.add("active_ratio", "time", "continuous",
            (year_counts > 0).sum() / span)

    cat_counts = {c: 0 for c in categories}
    for r in reviews:
        if r.category in cat_counts:
            cat_counts[r.category] += 1
    for c in categories:
        out.add(f"category_ratio:{c}", "history", "continuous", cat_counts[c] / n)

    return out


def extract_review_features(review: ReviewRecord,
                            product_reviews: list[ReviewRecord]) -> FeatureVector:
    """Product-context signals for one review.

    ``product_reviews`` holds every corpus review of the same product,
    including ``review`` itself. Rank 1 means this user reviewed first;
    ties in posting day share the earliest rank.
    """
    if review not in product_reviews:
        raise ValueError(
            f"review by {review.user_id!r} is not among the product's reviews"
        )
    ratings = np.array([r.rating for r in product_reviews])
    days = np.array([r.timestamp for r in product_reviews])
    n = len(product_reviews)
    first_day, last_day = days.min(), days.max()
    gap = last_day - first_day

    score_ratios = np.array([(ratings == s).sum() for s in range(1, 6)]) / n
    month_idx = [_year_month_index(r.review_date) for r in product_reviews]
    lo, hi = min(month_idx), max(month_idx)
    month_counts = np.zeros(hi - lo + 1)
    for m in month_idx:
        month_counts[m - lo] += 1

    out = FeatureVector()
    out.add("product_mean_rating", "product", "continuous", ratings.mean())
    out.add("product_review_count", "product", "continuous", n)
    out.add("product_score_entropy", "product", "continuous", entropy(score_ratios))
    out.add("product_time_gap", "product", "continuous", gap)
    out.add("product_time_entropy", "product", "continuous",
            entropy(month_counts / n))
    out.add("product_first_day_reviews", "product", "continuous",
            (days == first_day).sum())

    rank = 1 + int((days < review.timestamp).sum())
    out.add("user_rate", "review", "categorical", review.rating)
    out.add("review_help_votes", "review", "continuous", review.helpful_votes)
    out.add("review_unhelp_votes", "review", "continuous", review.unhelpful_votes)
    out.add("comment_gap_days", "review", "continuous",
            review.timestamp - first_day)
    out.add("comment_gap_ratio", "review", "continuous",
            _ratio(review.timestamp - first_day, gap))
    out.add("comment_rank", "review", "continuous", rank)
    out.add("comment_rank_ratio", "review", "continuous", rank / n)
    out.add("summary_length", "review", "continuous",
            len(review.summary_text.split()))
    out.add("review_length", "review", "continuous",
            len(review.review_text.split()))
    out.add("summary_sentiment", "review", "categorical",
            sentiment_score(review.summary_text))
    out.add("review_sentiment", "review", "categorical",
            sentiment_score(review.review_text))
    return out


def build_feature_matrix(records: list[ReviewRecord], categories=None,
                         common_names=None):
    """One feature row per record: user profile + category block + review part.

    Returns ``(FeatureMatrix, user_ids)`` with ``user_ids[i]`` naming the
    author of row i. The category catalog defaults to every category seen
    in ``records``, sorted.
    """
    if not records:
        raise ValueError("cannot build a feature matrix from zero records")
    if categories is None:
        categories = sorted({r.category for r in records})

    by_user: dict[str, list[ReviewRecord]] = {}
    by_product: dict[str, list[ReviewRecord]] = {}
    for r in records:
        by_user.setdefault(r.user_id, []).append(r)
        by_product.setdefault(r.product_id, []).append(r)

    user_vectors = {
        uid: extract_user_features(revs, categories=categories,
                                   common_names=common_names)
        for uid, revs in by_user.items()
    }

    rows = []
    names = scopes = kinds = None
    user_ids = []
    for r in records:
        vec = FeatureVector()
        vec.extend(user_vectors[r.user_id])
        vec.extend(extract_review_features(r, by_product[r.product_id]))
        rows.append(vec.values)
        user_ids.append(r.user_id)
        if names is None:
            names, scopes, kinds = vec.names, vec.scopes, vec.kinds

    matrix = FeatureMatrix(np.array(rows, dtype=np.float64), names, scopes, kinds)
    return matrix, user_ids


def build_manifest() -> dict:
    """Manifest dict pinning the fixed feature order plus the category-block rule."""
    return {
        "manifest_version": MANIFEST_VERSION,
        "user_features": [
            {"name": n, "scope": s, "kind": k} for n, s, k in USER_FEATURES
        ],
        "review_features": [
            {"name": n, "scope": s, "kind": k} for n, s, k in REVIEW_FEATURES
        ],
        "category_block": {
            "prefix": "category_ratio:",
            "scope": "history",
            "kind": "continuous",
            "position": "after user features",
        },
    }


def load_packaged_manifest() -> dict:
    text = resources.files("spamforest.data").joinpath(
        "feature_manifest.json").read_text("utf-8")
    return json.loads(text)
