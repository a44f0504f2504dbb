"""Account records, dataset ingestion, derived features and feature matrices.

Two record layouts exist, one per dataset:

* ``fake``: media/follower/following counts, username digit count and the
  private-account flag.
* ``automated``: profile counts and flags plus averages over media posted in
  the last 18 months; LCR, FFR and has-no-media are derived from them.

The canonical JSON document is ``{"schema": ..., "records": [...]}``.  The
public release of the original datasets uses a different layout (one flat
list per class, camelCase keys); :func:`load_authors_layout` maps it, see
``AUTHORS_FAKE_FIELDS`` / ``AUTHORS_AUTOMATED_FIELDS``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Iterable

import numpy as np

from .errors import DomainViolation, MalformedInput, SchemaViolation


class Schema(str, Enum):
    FAKE = "fake"
    AUTOMATED = "automated"


class ColumnKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


FAKE_COLUMNS = (
    "media_count",
    "follower_count",
    "following_count",
    "username_digit_count",
    "is_private",
)

# Frozen to the order of the feature cost table so masks and costs align.
AUTOMATED_COLUMNS = (
    "media_count",
    "follower_count",
    "following_count",
    "has_highlight_reel",
    "has_external_url",
    "tagged_photo_count",
    "avg_recent_hashtag_count",
    "has_no_media",
    "lcr",
    "ffr",
)

BINARY_COLUMNS = frozenset(
    {"is_private", "has_highlight_reel", "has_external_url", "has_no_media"}
)

# Continuous columns that hold counts; oversampling rounds these.
INTEGER_COLUMNS = frozenset(
    {
        "media_count",
        "follower_count",
        "following_count",
        "username_digit_count",
        "tagged_photo_count",
    }
)

POSITIVE_LABEL = {Schema.FAKE: "fake", Schema.AUTOMATED: "automated"}


def count_digits(username: str) -> int:
    """Number of decimal digit characters in ``username``."""
    return sum(1 for ch in username if ch.isdecimal())


@dataclass(frozen=True)
class FakeAccountRecord:
    media_count: int
    follower_count: int
    following_count: int
    username_digit_count: int
    is_private: int
    label: str

    def __post_init__(self):
        _check_label(self.label, Schema.FAKE)
        for name in ("media_count", "follower_count", "following_count", "username_digit_count"):
            _check_count(name, getattr(self, name))
        _check_flag("is_private", self.is_private)

    @property
    def is_positive(self) -> bool:
        return self.label == "fake"


@dataclass(frozen=True)
class AutomatedAccountRecord:
    media_count: int
    follower_count: int
    following_count: int
    has_highlight_reel: int
    has_external_url: int
    tagged_photo_count: int
    avg_recent_hashtag_count: float
    avg_recent_like_count: float
    avg_recent_comment_count: float
    label: str

    def __post_init__(self):
        _check_label(self.label, Schema.AUTOMATED)
        for name in ("media_count", "follower_count", "following_count", "tagged_photo_count"):
            _check_count(name, getattr(self, name))
        _check_flag("has_highlight_reel", self.has_highlight_reel)
        _check_flag("has_external_url", self.has_external_url)
        averages = ("avg_recent_hashtag_count", "avg_recent_like_count", "avg_recent_comment_count")
        for name in averages:
            _check_average(name, getattr(self, name))
        if self.media_count == 0 and any(getattr(self, n) != 0 for n in averages):
            raise DomainViolation("domain violation: media-derived averages must be 0 when media_count is 0")

    @property
    def is_positive(self) -> bool:
        return self.label == "automated"


RECORD_TYPES = {Schema.FAKE: FakeAccountRecord, Schema.AUTOMATED: AutomatedAccountRecord}


@dataclass(frozen=True)
class DerivedAutomatedFeatures:
    lcr: float
    ffr: float
    has_no_media: int


def derive_automated_features(record: AutomatedAccountRecord) -> DerivedAutomatedFeatures:
    # Denominators are clamped to 1 so both ratios stay finite.
    lcr = record.avg_recent_like_count / max(record.avg_recent_comment_count, 1.0)
    ffr = record.follower_count / max(record.following_count, 1)
    return DerivedAutomatedFeatures(
        lcr=float(lcr), ffr=float(ffr), has_no_media=int(record.media_count == 0)
    )


def _check_label(label, schema: Schema):
    allowed = ("real", POSITIVE_LABEL[schema])
    if label not in allowed:
        raise SchemaViolation(f"schema violation: label must be one of {allowed}, got {label!r}")


def _check_count(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise SchemaViolation(f"schema violation: {name} must be an integer, got {value!r}")
    if value < 0:
        raise DomainViolation(f"domain violation: {name} must be >= 0, got {value}")


def _check_flag(name, value):
    if value not in (0, 1) or isinstance(value, float):
        raise SchemaViolation(f"schema violation: {name} must be 0 or 1, got {value!r}")


def _check_average(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise SchemaViolation(f"schema violation: {name} must be a number, got {value!r}")
    if not math.isfinite(value) or value < 0:
        raise DomainViolation(f"domain violation: {name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    records: tuple
    source: str = ""

    def __post_init__(self):
        record_type = RECORD_TYPES[self.schema]
        for rec in self.records:
            if not isinstance(rec, record_type):
                raise SchemaViolation(
                    f"schema violation: {type(rec).__name__} in a {self.schema.value} dataset"
                )

    def __len__(self):
        return len(self.records)

    def class_counts(self) -> tuple[int, int]:
        positives = sum(rec.is_positive for rec in self.records)
        return len(self.records) - positives, positives

    def to_json(self) -> str:
        payload = {
            "schema": self.schema.value,
            "records": [asdict(rec) for rec in self.records],
        }
        return json.dumps(payload, indent=1)


def _record_from_mapping(raw: Any, schema: Schema, index: int):
    record_type = RECORD_TYPES[schema]
    if not isinstance(raw, dict):
        raise SchemaViolation(f"schema violation: record {index} is not an object")
    names = [f.name for f in fields(record_type)]
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise SchemaViolation(f"schema violation: record {index} has unknown field(s) {unknown}")
    missing = [n for n in names if n not in raw]
    if missing:
        raise SchemaViolation(f"schema violation: record {index} is missing field(s) {missing}")
    values = dict(raw)
    for flag in BINARY_COLUMNS & set(names):
        if isinstance(values[flag], bool):
            values[flag] = int(values[flag])
    try:
        return record_type(**values)
    except (SchemaViolation, DomainViolation) as exc:
        raise type(exc)(f"record {index}: {exc}") from None


def load_dataset(text: str, schema: Schema | str, source: str = "") -> Dataset:
    """Parse a canonical dataset document and validate every record."""
    schema = Schema(schema)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(
            f"malformed input: {exc.msg} at line {exc.lineno}, column {exc.colno}"
        ) from None
    if not isinstance(doc, dict) or set(doc) - {"schema", "records"}:
        raise MalformedInput('malformed input: expected an object with "schema" and "records"')
    if "records" not in doc or not isinstance(doc["records"], list):
        raise SchemaViolation('schema violation: "records" must be an array')
    declared = doc.get("schema", schema.value)
    if declared != schema.value:
        raise SchemaViolation(
            f"schema violation: document declares schema {declared!r}, expected {schema.value!r}"
        )
    records = tuple(_record_from_mapping(r, schema, i) for i, r in enumerate(doc["records"]))
    return Dataset(schema=schema, records=records, source=source)


# Field mapping from the authors' public release (one list per class file).
AUTHORS_FAKE_FIELDS = {
    "userMediaCount": "media_count",
    "userFollowerCount": "follower_count",
    "userFollowingCount": "following_count",
    "usernameDigitCount": "username_digit_count",
    "userIsPrivate": "is_private",
}
AUTHORS_FAKE_LABEL = "isFake"

AUTHORS_AUTOMATED_FIELDS = {
    "userMediaCount": "media_count",
    "userFollowerCount": "follower_count",
    "userFollowingCount": "following_count",
    "userHasHighlighReels": "has_highlight_reel",
    "userHasExternalUrl": "has_external_url",
    "userTagsCount": "tagged_photo_count",
}
# Per-media lists; averaged into the recent-media features.
AUTHORS_AUTOMATED_LISTS = {
    "mediaHashtagNumbers": "avg_recent_hashtag_count",
    "mediaLikeNumbers": "avg_recent_like_count",
    "mediaCommentNumbers": "avg_recent_comment_count",
}
AUTHORS_AUTOMATED_LABEL = "automatedBehaviour"


def load_authors_layout(texts: Iterable[str], schema: Schema | str, source: str = "") -> Dataset:
    """Ingest one or more files in the authors' published layout.

    Each file is a JSON array of flat objects.  Keys not in the mapping
    tables (biography length, username length, ...) are ignored because the
    pipeline never uses them.
    """
    schema = Schema(schema)
    records = []
    for text in texts:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput(
                f"malformed input: {exc.msg} at line {exc.lineno}, column {exc.colno}"
            ) from None
        if not isinstance(doc, list):
            raise MalformedInput("malformed input: authors' layout is a JSON array")
        for raw in doc:
            records.append(_authors_record(raw, schema, len(records)))
    return Dataset(schema=schema, records=tuple(records), source=source)


def _authors_record(raw, schema: Schema, index: int):
    if not isinstance(raw, dict):
        raise SchemaViolation(f"schema violation: record {index} is not an object")
    if schema is Schema.FAKE:
        mapping, label_key = AUTHORS_FAKE_FIELDS, AUTHORS_FAKE_LABEL
    else:
        mapping, label_key = AUTHORS_AUTOMATED_FIELDS, AUTHORS_AUTOMATED_LABEL
    missing = [k for k in (*mapping, label_key) if k not in raw]
    if missing:
        raise SchemaViolation(f"schema violation: record {index} is missing field(s) {missing}")
    values = {ours: _as_int(raw[theirs]) for theirs, ours in mapping.items()}
    values["label"] = POSITIVE_LABEL[schema] if _as_int(raw[label_key]) else "real"
    if schema is Schema.AUTOMATED:
        for theirs, ours in AUTHORS_AUTOMATED_LISTS.items():
            seq = raw.get(theirs) or []
            values[ours] = float(np.mean(seq)) if seq and values["media_count"] > 0 else 0.0
    return _record_from_mapping(values, schema, index)


def _as_int(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


@dataclass(frozen=True)
class FeatureMatrix:
    """Design matrix with per-column kinds and 0/1 labels (1 = positive class)."""

    column_names: tuple
    column_kinds: tuple
    rows: np.ndarray
    labels: np.ndarray
    integer_columns: frozenset = field(default=frozenset())

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if rows.ndim == 1:
            rows = rows.reshape(-1, len(self.column_names))
        names, kinds = tuple(self.column_names), tuple(ColumnKind(k) for k in self.column_kinds)
        if rows.shape[1] != len(names) or len(names) != len(kinds):
            raise ValueError("column names, kinds and row width disagree")
        if labels.shape != (rows.shape[0],):
            raise ValueError("labels must have one entry per row")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        for j, kind in enumerate(kinds):
            if kind is ColumnKind.BINARY and not np.isin(rows[:, j], (0.0, 1.0)).all():
                raise ValueError(f"binary column {names[j]!r} holds values other than 0/1")
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "column_kinds", kinds)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "integer_columns", frozenset(self.integer_columns) & set(names))

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @property
    def binary_mask(self) -> np.ndarray:
        return np.array([k is ColumnKind.BINARY for k in self.column_kinds])

    def index_of(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no such feature: {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.index_of(name)]

    def class_counts(self) -> tuple[int, int]:
        positives = int(self.labels.sum())
        return self.n_rows - positives, positives

    def take(self, indices) -> "FeatureMatrix":
        indices = np.asarray(indices, dtype=np.int64)
        return self.replace(rows=self.rows[indices], labels=self.labels[indices])

    def replace(self, **changes) -> "FeatureMatrix":
        current = dict(
            column_names=self.column_names,
            column_kinds=self.column_kinds,
            rows=self.rows,
            labels=self.labels,
            integer_columns=self.integer_columns,
        )
        current.update(changes)
        return FeatureMatrix(**current)

    def same_layout(self, other: "FeatureMatrix") -> bool:
        return self.column_names == other.column_names and self.column_kinds == other.column_kinds


def _fake_row(rec: FakeAccountRecord):
    return [rec.media_count, rec.follower_count, rec.following_count,
            rec.username_digit_count, rec.is_private]


def _automated_row(rec: AutomatedAccountRecord):
    derived = derive_automated_features(rec)
    return [rec.media_count, rec.follower_count, rec.following_count,
            rec.has_highlight_reel, rec.has_external_url, rec.tagged_photo_count,
            rec.avg_recent_hashtag_count, derived.has_no_media, derived.lcr, derived.ffr]


def to_matrix(dataset: Dataset) -> FeatureMatrix:
    if len(dataset) < 2 or 0 in dataset.class_counts():
        raise ValueError("precondition violation: need at least 2 records covering both labels")
    if dataset.schema is Schema.FAKE:
        names, build = FAKE_COLUMNS, _fake_row
    else:
        names, build = AUTOMATED_COLUMNS, _automated_row
    kinds = [ColumnKind.BINARY if n in BINARY_COLUMNS else ColumnKind.CONTINUOUS for n in names]
    rows = np.array([build(rec) for rec in dataset.records], dtype=float)
    labels = np.array([int(rec.is_positive) for rec in dataset.records])
    return FeatureMatrix(names, kinds, rows, labels, integer_columns=INTEGER_COLUMNS)


def records_from_matrix(matrix: FeatureMatrix, schema: Schema | str) -> tuple:
    """Inverse of :func:`to_matrix` for the fake schema.

    Automated matrices cannot be inverted (likes and comments collapse into
    LCR), so only the fake layout is supported.
    """
    schema = Schema(schema)
    if schema is not Schema.FAKE or matrix.column_names != FAKE_COLUMNS:
        raise ValueError("only fake-schema matrices map back to records")
    out = []
    for row, label in zip(matrix.rows, matrix.labels):
        values = {name: int(round(v)) for name, v in zip(FAKE_COLUMNS, row)}
        out.append(FakeAccountRecord(**values, label="fake" if label else "real"))
    return tuple(out)


# ---------------------------------------------------------------------------
# Synthetic datasets
#
# Binary and digit-count marginals are the published per-class frequencies.
# Continuous features are log-uniform on [lo, hi] shifted by one,
# i.e. exp(U(log(lo+1), log(hi+1))) - 1, with class ranges chosen only to keep
# the direction of the published in-class separations: positives follow
# many and are followed by few (fake), automated accounts carry more
# hashtags and have larger audiences.  Ranges overlap on purpose.
# ---------------------------------------------------------------------------

DIGIT_CLASS_PROBS = {
    # digits: 0, 1, 2, 3, more than 3
    "real": (0.889, 0.025, 0.053, 0.007, 0.026),
    "fake": (0.468, 0.100, 0.139, 0.114, 0.179),
}
MANY_DIGITS_RANGE = (4, 8)

FAKE_SYNTH = {
    "real": {
        "media_count": (3, 1500),
        "follower_count": (60, 5000),
        "following_count": (50, 2500),
        "is_private": 0.45,
        "no_media": 0.04,
    },
    "fake": {
        "media_count": (0, 40),
        "follower_count": (0, 400),
        "following_count": (200, 7500),
        "is_private": 0.30,
        "no_media": 0.45,
    },
}

AUTOMATED_SYNTH = {
    "real": {
        "media_count": (1, 800),
        "follower_count": (40, 1500),
        "following_count": (40, 1200),
        "tagged_photo_count": (0, 150),
        "avg_recent_hashtag_count": (0, 6),
        "avg_recent_like_count": (5, 250),
        "avg_recent_comment_count": (0.5, 25),
        "has_highlight_reel": 232 / 700,
        "has_external_url": 46 / 700,
        "no_media": 0.05,
    },
    "automated": {
        "media_count": (5, 2500),
        "follower_count": (150, 30000),
        "following_count": (150, 7500),
        "tagged_photo_count": (0, 400),
        "avg_recent_hashtag_count": (3, 30),
        "avg_recent_like_count": (20, 1500),
        "avg_recent_comment_count": (0.5, 40),
        "has_highlight_reel": 440 / 700,
        "has_external_url": 383 / 700,
        "no_media": 0.02,
    },
}


def _log_uniform(rng: np.random.Generator, bounds, size):
    lo, hi = bounds
    return np.expm1(rng.uniform(np.log1p(lo), np.log1p(hi), size))


def _digit_counts(rng, probs, size):
    cls = rng.choice(len(probs), size=size, p=np.asarray(probs) / sum(probs))
    many = rng.integers(MANY_DIGITS_RANGE[0], MANY_DIGITS_RANGE[1] + 1, size)
    return np.where(cls == len(probs) - 1, many, cls)


def _synth_fake(rng, label, n):
    p = FAKE_SYNTH[label]
    media = np.rint(_log_uniform(rng, p["media_count"], n)).astype(int)
    media[rng.random(n) < p["no_media"]] = 0
    follower = np.rint(_log_uniform(rng, p["follower_count"], n)).astype(int)
    following = np.rint(_log_uniform(rng, p["following_count"], n)).astype(int)
    digits = _digit_counts(rng, DIGIT_CLASS_PROBS[label], n)
    private = (rng.random(n) < p["is_private"]).astype(int)
    return [
        FakeAccountRecord(int(m), int(fr), int(fg), int(d), int(pv), label)
        for m, fr, fg, d, pv in zip(media, follower, following, digits, private)
    ]


def _synth_automated(rng, label, n):
    p = AUTOMATED_SYNTH[label]
    media = np.rint(_log_uniform(rng, p["media_count"], n)).astype(int)
    media[rng.random(n) < p["no_media"]] = 0
    follower = np.rint(_log_uniform(rng, p["follower_count"], n)).astype(int)
    following = np.rint(_log_uniform(rng, p["following_count"], n)).astype(int)
    tagged = np.rint(_log_uniform(rng, p["tagged_photo_count"], n)).astype(int)
    reel = (rng.random(n) < p["has_highlight_reel"]).astype(int)
    url = (rng.random(n) < p["has_external_url"]).astype(int)
    hashtags = _log_uniform(rng, p["avg_recent_hashtag_count"], n)
    likes = _log_uniform(rng, p["avg_recent_like_count"], n)
    comments = _log_uniform(rng, p["avg_recent_comment_count"], n)
    no_media = media == 0
    hashtags[no_media] = likes[no_media] = comments[no_media] = 0.0
    return [
        AutomatedAccountRecord(
            int(m), int(fr), int(fg), int(r), int(u), int(t),
            round(float(h), 4), round(float(lk), 4), round(float(c), 4), label,
        )
        for m, fr, fg, r, u, t, h, lk, c in zip(
            media, follower, following, reel, url, tagged, hashtags, likes, comments
        )
    ]


def generate_synthetic_dataset(schema: Schema | str, n_real: int, n_positive: int,
                               seed: int) -> Dataset:
    """Sample a labelled dataset from the per-class marginals above.

    Real records come first, then positives; the order is part of the
    deterministic output for a given seed.
    """
    schema = Schema(schema)
    if n_real < 1 or n_positive < 1:
        raise ValueError("class counts must be >= 1")
    rng = np.random.default_rng(seed)
    make = _synth_fake if schema is Schema.FAKE else _synth_automated
    records = make(rng, "real", n_real) + make(rng, POSITIVE_LABEL[schema], n_positive)
    return Dataset(schema=schema, records=tuple(records), source=f"synthetic:{schema.value}:seed={seed}")


@dataclass(frozen=True)
class ClassHistogram:
    column: str
    edges: np.ndarray
    class0: np.ndarray
    class1: np.ndarray

    def to_dict(self) -> dict:
        return {
            "column": self.column,
            "edges": self.edges.tolist(),
            "class0": self.class0.astype(int).tolist(),
            "class1": self.class1.astype(int).tolist(),
        }


def class_histogram(matrix: FeatureMatrix, column: str, bins: int) -> ClassHistogram:
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = matrix.column(column)
    edges = np.histogram_bin_edges(values, bins=bins)
    class0, _ = np.histogram(values[matrix.labels == 0], bins=edges)
    class1, _ = np.histogram(values[matrix.labels == 1], bins=edges)
    return ClassHistogram(column, edges, class0, class1)

