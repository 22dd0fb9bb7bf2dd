"""
Multimodal feature fusion.

Each job is embedded per modality and the blocks are concatenated in a fixed order:

- ``text``: hashed character 3-grams of the company, hashed words of the title, hashed words of the description.
- ``categorical``: one-hot blocks for job type, state, channel, and job level, each with a trailing unknown slot.
- ``skills``: mean of the skill embeddings (hashed unit vectors for skills missing from the table).
- ``location``: latitude and longitude on the unit sphere.
- ``numeric``: z-normalized salary plus a presence indicator.
- ``day``: one-hot day block (joint training only).
"""

import csv
import hashlib
import math
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Final, NamedTuple

import numpy as np

from jacforecast.cli import io, reporters
from jacforecast.cli.types import ErrorReporter, JsonObject
from . import tables
from .datamodel import Dataset, JobPosting, SkillEmbeddingTable, Split
from .errors import ConfigError, DataError, ModelError

#: Categorical fields in block order.
CATEGORICAL_FIELDS: Final[tuple[str, ...]] = ("job_type", "state", "channel", "job_level")

#: Schema slot that receives values not seen when the schema was built.
UNKNOWN_VALUE: Final[str] = "<unknown>"

#: Skill dimension used when no embedding table is supplied.
DEFAULT_SKILL_DIM: Final[int] = 32

#: Leading columns of a feature matrix file.
KEY_COLUMNS: Final[tuple[str, ...]] = ("job_id", "t", "split", "label")

_LOCATION_SLOTS: Final[tuple[str, ...]] = ("x", "y", "z")
_NUMERIC_SLOTS: Final[tuple[str, ...]] = ("salary_z", "salary_present")
_WORD_PATTERN: Final[re.Pattern[str]] = re.compile(r"\w+")
_CHAR_GRAM_SIZE: Final[int] = 3

# Hash salts keep the three text streams independent.
_COMPANY_SALT: Final[bytes] = b"company"
_TITLE_SALT: Final[bytes] = b"title"
_DESCRIPTION_SALT: Final[bytes] = b"description"
_SKILL_SALT: Final[bytes] = b"skill"


def categorical_schema(values: Iterable[str]) -> tuple[str, ...]:
    """Return the sorted distinct ``values`` followed by the unknown slot."""
    return (*sorted(set(values) - {UNKNOWN_VALUE}), UNKNOWN_VALUE)


@dataclass(frozen=True, kw_only=True, slots=True)
class FusionConfig:
    """
    Fusion dimensions, categorical schemas, and frozen normalization statistics.

    Attributes:
        d_company: Buckets of the company character stream.
        d_title: Buckets of the title word stream.
        d_desc: Buckets of the description word stream.
        schemas: Ordered values per categorical field, each ending with ``UNKNOWN_VALUE``.
        skill_dim: Dimension of the skill block.
        include_day: Whether a one-hot day block is appended (joint training).
        days: Ordered day values of the day block.
        salary_mean: Training-split salary mean.
        salary_std: Training-split salary standard deviation (``> 0``).
    """
    d_company: int = 64
    d_title: int = 128
    d_desc: int = 256
    schemas: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: {name: (UNKNOWN_VALUE,) for name in CATEGORICAL_FIELDS})
    skill_dim: int = DEFAULT_SKILL_DIM
    include_day: bool = False
    days: tuple[int, ...] = ()
    salary_mean: float = 0.0
    salary_std: float = 1.0

    def __post_init__(self) -> None:
        """Enforce the configuration invariants."""
        for name, dimension in (("d_company", self.d_company), ("d_title", self.d_title), ("d_desc", self.d_desc),
                                ("skill_dim", self.skill_dim)):
            if dimension < 1:
                raise ConfigError(f"{name} must be >= 1")

        if sorted(self.schemas) != sorted(CATEGORICAL_FIELDS):
            raise ConfigError(f"schemas must cover exactly: {', '.join(CATEGORICAL_FIELDS)}")

        for name, values in self.schemas.items():
            if len(set(values)) != len(values):
                raise ConfigError(f"schema {name!r}: values must be unique")

            if not values or values[-1] != UNKNOWN_VALUE:
                raise ConfigError(f"schema {name!r}: last slot must be {UNKNOWN_VALUE!r}")

        if self.include_day and not self.days:
            raise ConfigError("include_day requires at least one day")

        if len(set(self.days)) != len(self.days) or any(day < 1 for day in self.days):
            raise ConfigError("days must be unique and >= 1")

        if not (math.isfinite(self.salary_std) and self.salary_std > 0):
            raise ConfigError("salary_std must be > 0")

    @classmethod
    def from_json(cls, document: JsonObject) -> "FusionConfig":
        """Return a configuration from its JSON form; raises ``ConfigError`` for malformed documents."""
        try:
            return cls(d_company=int(document["d_company"]), d_title=int(document["d_title"]),
                       d_desc=int(document["d_desc"]),
                       schemas={name: tuple(str(v) for v in values) for name, values in document["schemas"].items()},
                       skill_dim=int(document["skill_dim"]), include_day=bool(document["include_day"]),
                       days=tuple(int(day) for day in document["days"]), salary_mean=float(document["salary_mean"]),
                       salary_std=float(document["salary_std"]))
        except (AttributeError, KeyError, TypeError, ValueError) as error:
            if isinstance(error, ConfigError):
                raise

            raise ConfigError(f"malformed fusion configuration ({error!r})") from None

    def to_json(self) -> JsonObject:
        """Return the JSON form of the configuration."""
        return {
            "d_company": self.d_company,
            "d_title": self.d_title,
            "d_desc": self.d_desc,
            "schemas": {name: list(self.schemas[name]) for name in CATEGORICAL_FIELDS},
            "skill_dim": self.skill_dim,
            "include_day": self.include_day,
            "days": list(self.days),
            "salary_mean": self.salary_mean,
            "salary_std": self.salary_std,
        }


class Span(NamedTuple):
    """Half-open range ``[start, stop)`` of one modality block, with its slot labels."""
    name: str
    start: int
    stop: int
    slots: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class FeatureLayout:
    """Ordered spans that tile a fused feature vector exactly."""
    spans: tuple[Span, ...]

    @property
    def width(self) -> int:
        """Return the total vector length."""
        return self.spans[-1].stop if self.spans else 0

    def column_names(self) -> tuple[str, ...]:
        """Return one ``<span>:<slot>`` column name per feature."""
        return tuple(f"{span.name}:{slot}" for span in self.spans for slot in span.slots)

    def span(self, name: str) -> Span:
        """Return the span called ``name``; raises ``KeyError`` when absent."""
        for span in self.spans:
            if span.name == name:
                return span

        raise KeyError(name)

    def to_json(self) -> JsonObject:
        """Return the spans as JSON (names and offsets)."""
        return {"spans": [{"name": span.name, "start": span.start, "stop": span.stop} for span in self.spans]}


@dataclass(frozen=True, slots=True)
class FusedFeatureVector:
    """A fused feature vector with the layout that describes it."""
    values: np.ndarray
    layout: FeatureLayout


class FeatureRow(NamedTuple):
    """One fused feature row for an observation."""
    job_id: str
    t: int
    split: Split | None
    label: int
    values: np.ndarray


class FeatureMatrix(NamedTuple):
    """Feature rows loaded column-wise; ``values`` has one row per ``(job_id, t)`` key."""
    keys: tuple[tuple[str, int], ...]
    splits: tuple[Split | None, ...]
    labels: np.ndarray
    values: np.ndarray
    columns: tuple[str, ...]


def embed_location(latitude: float, longitude: float) -> np.ndarray:
    """
    Return the unit-sphere point of a location given in degrees.

    - ``(cos(lat) * cos(lon), cos(lat) * sin(lon), sin(lat))`` with angles converted to radians.
    - Raises ``DataError`` for a latitude outside ``[-90, 90]`` or a longitude outside ``(-180, 180]``.
    """
    if not -90.0 <= latitude <= 90.0:
        raise DataError("latitude out of range")

    if not -180.0 < longitude <= 180.0:
        raise DataError("longitude out of range")

    theta, phi = math.radians(latitude), math.radians(longitude)

    return np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), math.sin(theta)])


def embed_skills(skills: Sequence[str], table: SkillEmbeddingTable) -> np.ndarray:
    """
    Return the mean embedding of ``skills``.

    - Skills absent from ``table`` contribute a deterministic hashed unit vector.
    - An empty list gives the zero vector.
    - Summation follows the sorted skill order, so permuting ``skills`` never changes the result.
    """
    if not skills:
        return np.zeros(table.dimension)

    total = np.zeros(table.dimension)

    for skill in sorted(skills):
        vector = table.entries.get(skill)
        total += vector if vector is not None else hashed_skill_vector(skill, table.dimension)

    return total / len(skills)


def embed_text(company: str, title: str, description: str, config: FusionConfig) -> np.ndarray:
    """Return the company, title, and description hashing streams, each L2-normalized when nonzero."""
    return np.concatenate((
        _hashed_counts(_char_grams(company), config.d_company, _COMPANY_SALT),
        _hashed_counts(_words(title), config.d_title, _TITLE_SALT),
        _hashed_counts(_words(description), config.d_desc, _DESCRIPTION_SALT),
    ))


def encode_categorical(job: JobPosting, schemas: Mapping[str, Sequence[str]]) -> np.ndarray:
    """Return the concatenated one-hot blocks; values missing from a schema set its unknown slot."""
    blocks = []

    for name in CATEGORICAL_FIELDS:
        values = schemas[name]
        block = np.zeros(len(values))
        value = getattr(job, name)
        block[values.index(value) if value in values else len(values) - 1] = 1.0
        blocks.append(block)

    return np.concatenate(blocks)


def encode_day(t: int | None, config: FusionConfig) -> np.ndarray:
    """Return the one-hot day block, empty unless ``config.include_day``; raises ``DataError`` for unlisted days."""
    if not config.include_day:
        return np.zeros(0)

    if t is None or t not in config.days:
        raise DataError(f"unlisted day: {t}")

    block = np.zeros(len(config.days))
    block[config.days.index(t)] = 1.0

    return block


def encode_numeric(salary: float | None, config: FusionConfig) -> np.ndarray:
    """Return ``[salary_z, presence]``; a missing salary gives ``[0, 0]``."""
    if salary is None:
        return np.zeros(len(_NUMERIC_SLOTS))

    return np.array([(salary - config.salary_mean) / config.salary_std, 1.0])


def feature_layout(config: FusionConfig) -> FeatureLayout:
    """Return the spans of a fused vector under ``config``."""
    blocks: list[tuple[str, tuple[str, ...]]] = [
        ("text", (*(f"company/{i}" for i in range(config.d_company)), *(f"title/{i}" for i in range(config.d_title)),
                  *(f"description/{i}" for i in range(config.d_desc)))),
        ("categorical", tuple(f"{name}={value}" for name in CATEGORICAL_FIELDS for value in config.schemas[name])),
        ("skills", tuple(str(i) for i in range(config.skill_dim))),
        ("location", _LOCATION_SLOTS),
        ("numeric", _NUMERIC_SLOTS),
    ]

    if config.include_day:
        blocks.append(("day", tuple(str(day) for day in config.days)))

    spans = []
    start = 0

    for name, slots in blocks:
        spans.append(Span(name, start, start + len(slots), slots))
        start += len(slots)

    return FeatureLayout(tuple(spans))


def featurize_corpus(dataset: Dataset, table: SkillEmbeddingTable, config: FusionConfig) -> Iterator[FeatureRow]:
    """Yield one fused row per observation, in observation order; job blocks are computed once per job."""
    _check_skill_dimension(table, config)
    job_blocks: dict[str, np.ndarray] = {}

    for observation in dataset.observations:
        if (blocks := job_blocks.get(observation.job_id)) is None:
            blocks = _job_blocks(dataset.jobs[observation.job_id], table, config)
            job_blocks[observation.job_id] = blocks

        values = np.concatenate((blocks, encode_day(observation.t, config)))

        yield FeatureRow(observation.job_id, observation.t, dataset.splits.get(observation.job_id), observation.jac,
                         values)


def fit_fusion_config(train_jobs: Iterable[JobPosting], skill_dim: int, *, d_company: int = 64, d_title: int = 128,
                      d_desc: int = 256, include_day: bool = False, days: Sequence[int] = ()) -> FusionConfig:
    """
    Return a configuration fitted on training jobs.

    - Schemas hold the values seen in training plus the unknown slot.
    - Salary statistics come from training salaries only; a zero or undefined spread becomes ``1``.
    """
    train_jobs = list(train_jobs)
    schemas = {name: categorical_schema(getattr(job, name) for job in train_jobs) for name in CATEGORICAL_FIELDS}
    salaries = np.array([job.salary for job in train_jobs if job.salary is not None])
    salary_mean = float(salaries.mean()) if salaries.size else 0.0
    salary_std = float(salaries.std()) if salaries.size > 1 else 0.0

    return FusionConfig(d_company=d_company, d_title=d_title, d_desc=d_desc, schemas=schemas, skill_dim=skill_dim,
                        include_day=include_day, days=tuple(days), salary_mean=salary_mean,
                        salary_std=salary_std if salary_std > 0 else 1.0)


def fuse(job: JobPosting, t: int | None, table: SkillEmbeddingTable, config: FusionConfig) -> FusedFeatureVector:
    """
    Return the fused vector ``text || categorical || skills || location || numeric (|| day)``.

    - Raises ``DataError`` when the day block is enabled and ``t`` is absent or unlisted.
    """
    _check_skill_dimension(table, config)
    values = np.concatenate((_job_blocks(job, table, config), encode_day(t, config)))

    return FusedFeatureVector(values, feature_layout(config))


@lru_cache(maxsize=4096)
def hashed_skill_vector(skill: str, dimension: int) -> np.ndarray:
    """Return the deterministic, read-only unit vector standing in for a skill missing from the embedding table."""
    seed = int.from_bytes(hashlib.blake2b(skill.encode("utf-8"), digest_size=8, salt=_SKILL_SALT).digest(), "little")
    vector = np.random.default_rng(seed).standard_normal(dimension)
    vector /= np.linalg.norm(vector)
    vector.setflags(write=False)

    return vector


def load_feature_matrix(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> FeatureMatrix:
    """
    Load a feature matrix CSV written by ``write_feature_matrix``.

    - Rows with non-numeric values, unknown splits, or a bad day/label are reported and skipped.
    """
    columns: tuple[str, ...] = ()
    keys, splits, labels, rows = [], [], [], []

    for file_info in io.read_text_files([path], on_error=on_error):
        reader = csv.reader(file_info.text_stream)
        header = next(reader, None)

        if header is None:
            on_error(f"{path!r}: empty file (header expected)")
            break

        if tuple(header[:len(KEY_COLUMNS)]) != KEY_COLUMNS:
            on_error(f"{path!r}: line 1: header must start with {','.join(KEY_COLUMNS)}")
            break

        columns = tuple(header[len(KEY_COLUMNS):])

        for fields in reader:
            if not fields:
                continue

            if len(fields) != len(header):
                on_error(f"{path!r}: line {reader.line_num}: expected {len(header)} fields, found {len(fields)}")
                continue

            try:
                key = (fields[0], int(fields[1]))
                split = Split(fields[2]) if fields[2] else None
                label = int(fields[3])
                values = [float(value) for value in fields[len(KEY_COLUMNS):]]
            except ValueError:
                on_error(f"{path!r}: line {reader.line_num}: malformed row")
                continue

            keys.append(key)
            splits.append(split)
            labels.append(label)
            rows.append(values)

    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))

    return FeatureMatrix(tuple(keys), tuple(splits), np.array(labels, dtype=np.float64), values, columns)


def load_fusion_config(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> FusionConfig | None:
    """Return the configuration stored in ``path``, or ``None`` after reporting an unreadable file."""
    document = tables.read_json(path, on_error=on_error)

    return FusionConfig.from_json(document) if document is not None else None


def write_feature_matrix(path: str, rows: Iterable[FeatureRow], layout: FeatureLayout, *,
                         on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write ``rows`` as CSV with the ``job_id,t,split,label`` key columns and one column per feature."""

    def records() -> Iterator[list[str]]:
        for row in rows:
            if row.values.size != layout.width:
                raise ModelError(f"row {row.job_id!r}, t={row.t}: expected {layout.width} features, "
                                 f"found {row.values.size}")

            split = row.split.value if row.split is not None else ""
            yield [row.job_id, str(row.t), split, str(row.label), *(repr(float(v)) for v in row.values)]

    return tables.write_csv(path, header=(*KEY_COLUMNS, *layout.column_names()), rows=records(), on_error=on_error)


def write_fusion_config(path: str, config: FusionConfig, *,
                        on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write ``config`` as JSON; returns ``True`` on success."""
    return tables.write_json(path, config.to_json(), on_error=on_error)


def _char_grams(text: str) -> list[str]:
    """Return casefolded character 3-grams of ``text`` (the whole string when shorter)."""
    text = text.casefold()

    if len(text) < _CHAR_GRAM_SIZE:
        return [text] if text else []

    return [text[i:i + _CHAR_GRAM_SIZE] for i in range(len(text) - _CHAR_GRAM_SIZE + 1)]


def _check_skill_dimension(table: SkillEmbeddingTable, config: FusionConfig) -> None:
    """Raise ``ModelError`` when the table and configuration disagree on the skill dimension."""
    if table.dimension != config.skill_dim:
        raise ModelError(f"skill table dimension {table.dimension} does not match configured {config.skill_dim}")


@lru_cache(maxsize=65_536)
def _hash_bucket(token: str, salt: bytes, buckets: int) -> int:
    """Return the bucket of ``token`` in a salted stream."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, salt=salt[:16]).digest()

    return int.from_bytes(digest, "little") % buckets


def _hashed_counts(tokens: Iterable[str], buckets: int, salt: bytes) -> np.ndarray:
    """Return L2-normalized bucket counts of ``tokens`` (zeros when there are none)."""
    counts = np.zeros(buckets)

    for token in tokens:
        counts[_hash_bucket(token, salt, buckets)] += 1.0

    norm = np.linalg.norm(counts)

    return counts / norm if norm > 0 else counts


def _job_blocks(job: JobPosting, table: SkillEmbeddingTable, config: FusionConfig) -> np.ndarray:
    """Return every block of ``job`` except the day block."""
    return np.concatenate((
        embed_text(job.company, job.title, job.description, config),
        encode_categorical(job, config.schemas),
        embed_skills(job.skills, table),
        embed_location(job.latitude, job.longitude),
        encode_numeric(job.salary, config),
    ))


def _words(text: str) -> list[str]:
    """Return the casefolded word tokens of ``text``."""
    return _WORD_PATTERN.findall(text.casefold())


__all__: Final[tuple[str, ...]] = (
    "CATEGORICAL_FIELDS",
    "DEFAULT_SKILL_DIM",
    "FeatureLayout",
    "FeatureMatrix",
    "FeatureRow",
    "FusedFeatureVector",
    "FusionConfig",
    "KEY_COLUMNS",
    "Span",
    "UNKNOWN_VALUE",
    "categorical_schema",
    "embed_location",
    "embed_skills",
    "embed_text",
    "encode_categorical",
    "encode_day",
    "encode_numeric",
    "feature_layout",
    "featurize_corpus",
    "fit_fusion_config",
    "fuse",
    "hashed_skill_vector",
    "load_feature_matrix",
    "load_fusion_config",
    "write_feature_matrix",
    "write_fusion_config",
)
