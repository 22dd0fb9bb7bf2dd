"""Domain types, file ingestion, and validation for job postings, observations, splits, and skill embeddings."""

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Any, Final, NamedTuple

import numpy as np

from jacforecast.cli import io, reporters
from jacforecast.cli.types import ErrorReporter, JsonObject
from . import tables
from .errors import DataError

# Keys of a job record; ``salary`` is the only optional key.
_JOB_KEYS: Final[tuple[str, ...]] = (
    "job_id", "title", "company", "description", "skills", "job_type", "state", "channel", "job_level", "city",
    "latitude", "longitude", "salary",
)
_OPTIONAL_JOB_KEYS: Final[frozenset[str]] = frozenset({"salary"})
_TEXT_JOB_KEYS: Final[tuple[str, ...]] = (
    "job_id", "title", "company", "description", "job_type", "state", "channel", "job_level", "city",
)
_OBSERVATION_KEYS: Final[frozenset[str]] = frozenset({"job_id", "t", "jac"})


class Split(StrEnum):
    """Dataset partition a job belongs to."""
    TRAIN = "train"
    TEST = "test"
    VAL = "val"


@dataclass(frozen=True, slots=True, kw_only=True)
class JobPosting:
    """
    One job posting with its text, categorical, skill, location, and numeric fields.

    Attributes:
        job_id: Unique, non-empty identifier.
        title: Job title.
        company: Company name.
        description: Free-text description.
        skills: Skill identifiers (may be empty).
        job_type: Categorical job type (e.g., ``"full-time"``).
        state: Categorical state code.
        channel: Categorical posting channel.
        job_level: Categorical seniority level.
        city: City name.
        latitude: Degrees in ``[-90, 90]``.
        longitude: Degrees in ``(-180, 180]``.
        salary: Yearly salary, or ``None`` when unknown (``0`` is a legal salary).
    """
    job_id: str
    title: str
    company: str
    description: str
    skills: tuple[str, ...]
    job_type: str
    state: str
    channel: str
    job_level: str
    city: str
    latitude: float
    longitude: float
    salary: float | None = None

    def __post_init__(self) -> None:
        """Enforce the job invariants."""
        if not self.job_id:
            raise DataError("job_id must be non-empty")

        if not -90.0 <= self.latitude <= 90.0:
            raise DataError("latitude out of range")

        if not -180.0 < self.longitude <= 180.0:
            raise DataError("longitude out of range")

        if self.salary is not None and not (math.isfinite(self.salary) and self.salary >= 0):
            raise DataError("salary must be a non-negative number")

    def to_record(self) -> JsonObject:
        """Return the JSONL record; ``salary`` is omitted when unknown."""
        record: JsonObject = {
            "job_id": self.job_id,
            "title": self.title,
            "company": self.company,
            "description": self.description,
            "skills": list(self.skills),
            "job_type": self.job_type,
            "state": self.state,
            "channel": self.channel,
            "job_level": self.job_level,
            "city": self.city,
            "latitude": self.latitude,
            "longitude": self.longitude,
        }

        if self.salary is not None:
            record["salary"] = self.salary

        return record


class Observation(NamedTuple):
    """Cumulative applicant count ``jac`` of job ``job_id`` observed ``t`` days after posting."""
    job_id: str
    t: int
    jac: int

    def to_record(self) -> JsonObject:
        """Return the JSONL record."""
        return {"job_id": self.job_id, "t": self.t, "jac": self.jac}


@dataclass(frozen=True, slots=True)
class SkillEmbeddingTable:
    """
    Skill embeddings placed in a shared ``dimension``-dimensional latent space.

    Attributes:
        dimension: Length of every vector (``d >= 1``).
        entries: Mapping of skill identifier to its vector.
    """
    dimension: int
    entries: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Enforce a positive, uniform dimension."""
        if self.dimension < 1:
            raise DataError("skill embedding dimension must be >= 1")

        for skill, vector in self.entries.items():
            if vector.shape != (self.dimension,):
                raise DataError(f"skill {skill!r}: expected {self.dimension} components, found {vector.size}")

    def __contains__(self, skill: object) -> bool:
        """Return ``True`` if ``skill`` has a stored vector."""
        return skill in self.entries

    def __len__(self) -> int:
        """Return the number of stored skills."""
        return len(self.entries)


@dataclass(frozen=True, slots=True)
class Dataset:
    """
    Jobs, their observations, and the per-job split assignment.

    - Every observation references a known job.
    - When ``splits`` is non-empty, every job with observations has exactly one split, so the split tags partition
      the observations (splitting is by job, so no job leaks across splits).

    Attributes:
        jobs: Jobs keyed by ``job_id`` in load order.
        observations: Observations in load order.
        splits: Split of each job (empty until assigned).
    """
    jobs: Mapping[str, JobPosting]
    observations: tuple[Observation, ...]
    splits: Mapping[str, Split] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Enforce reference integrity and split coverage."""
        for observation in self.observations:
            if observation.job_id not in self.jobs:
                raise DataError(f"observation references unknown job_id {observation.job_id!r}")

        if self.splits:
            if unknown := sorted(set(self.splits) - set(self.jobs)):
                raise DataError(f"split assigned to unknown job_id {unknown[0]!r}")

            if unsplit := sorted({o.job_id for o in self.observations} - set(self.splits)):
                raise DataError(f"job {unsplit[0]!r} has observations but no split ({len(unsplit)} job(s) in total)")

    @property
    def size(self) -> int:
        """Return the number of observations."""
        return len(self.observations)

    def jobs_in(self, split: Split) -> list[JobPosting]:
        """Return the jobs assigned to ``split`` in load order."""
        return [job for job_id, job in self.jobs.items() if self.splits.get(job_id) == split]

    def observations_in(self, split: Split) -> list[Observation]:
        """Return the observations whose job is assigned to ``split``."""
        return [o for o in self.observations if self.splits.get(o.job_id) == split]

    def split_of(self, observation: Observation) -> Split:
        """Return the split tag of ``observation``."""
        try:
            return self.splits[observation.job_id]
        except KeyError:
            raise DataError(f"job {observation.job_id!r} has no split") from None

    def with_splits(self, splits: Mapping[str, Split]) -> "Dataset":
        """Return a copy of the dataset with ``splits`` assigned."""
        return replace(self, splits=dict(splits))


def job_from_record(record: JsonObject) -> JobPosting:
    """
    Return a validated ``JobPosting`` from a decoded JSON record.

    - Keys must be exactly the job keys (``salary`` may be absent or ``null``).
    - Longitude is normalized into ``(-180, 180]``.
    - Raises ``DataError`` naming the offending field.
    """
    if missing := [key for key in _JOB_KEYS if key not in record and key not in _OPTIONAL_JOB_KEYS]:
        raise DataError(f"missing key(s): {', '.join(missing)}")

    if unexpected := sorted(set(record) - set(_JOB_KEYS)):
        raise DataError(f"unexpected key(s): {', '.join(unexpected)}")

    for key in _TEXT_JOB_KEYS:
        if not isinstance(record[key], str):
            raise DataError(f"{key}: expected a string")

    skills = record["skills"]

    if not isinstance(skills, list) or not all(isinstance(skill, str) for skill in skills):
        raise DataError("skills: expected a list of strings")

    latitude = _number(record, "latitude")
    longitude = _number(record, "longitude")
    salary = None if record.get("salary") is None else _number(record, "salary")

    if not -90.0 <= latitude <= 90.0:
        raise DataError("latitude out of range")

    return JobPosting(job_id=record["job_id"], title=record["title"], company=record["company"],
                      description=record["description"], skills=tuple(skills), job_type=record["job_type"],
                      state=record["state"], channel=record["channel"], job_level=record["job_level"],
                      city=record["city"], latitude=latitude, longitude=normalize_longitude(longitude), salary=salary)


def load_dataset(jobs_path: str, observations_path: str, splits_path: str | None = None, *,
                 on_error: ErrorReporter = reporters.raises(DataError)) -> Dataset:
    """Load jobs, observations, and (optionally) splits, and return them as a validated ``Dataset``."""
    jobs = {job.job_id: job for job in load_jobs(jobs_path, on_error=on_error)}
    observations = load_observations(observations_path, set(jobs), on_error=on_error)
    splits = load_splits(splits_path, set(jobs), on_error=on_error) if splits_path else {}

    return Dataset(jobs, tuple(observations), splits)


def load_jobs(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> list[JobPosting]:
    """
    Load job postings from a JSONL file, preserving order.

    - Every malformed line is reported through ``on_error`` with its line number and is skipped.
    - Errors reported: parse failures, invariant violations (field + line), duplicate ``job_id``.
    """
    jobs = []
    seen_ids: set[str] = set()

    for line_number, record in tables.iter_jsonl_records(path, on_error=on_error):
        try:
            job = job_from_record(record)
        except DataError as error:
            on_error(f"{path!r}: line {line_number}: {error}")
            continue

        if job.job_id in seen_ids:
            on_error(f"{path!r}: line {line_number}: duplicate job_id {job.job_id!r}")
            continue

        seen_ids.add(job.job_id)
        jobs.append(job)

    return jobs


def load_observations(path: str, jobs: Iterable[str] | None = None, *,
                      on_error: ErrorReporter = reporters.raises(DataError)) -> list[Observation]:
    """
    Load observations from a JSONL file, preserving order.

    - Every malformed line is reported through ``on_error`` with its line number and is skipped.
    - Errors reported: dangling ``job_id``, ``t < 1``, negative ``jac``, non-integer fields, duplicate
      ``(job_id, t)``, and a ``jac`` that decreases as ``t`` grows for one job.
    - With ``jobs`` set to ``None`` any ``job_id`` is accepted (scoring needs no job file).
    """
    known_jobs = set(jobs) if jobs is not None else None
    observations = []
    seen: set[tuple[str, int]] = set()

    for line_number, record in tables.iter_jsonl_records(path, on_error=on_error):
        try:
            observation = observation_from_record(record, known_jobs)
        except DataError as error:
            on_error(f"{path!r}: line {line_number}: {error}")
            continue

        if (observation.job_id, observation.t) in seen:
            on_error(f"{path!r}: line {line_number}: duplicate observation for job {observation.job_id!r} "
                     f"at t={observation.t}")
            continue

        seen.add((observation.job_id, observation.t))
        observations.append(observation)

    for message in _iter_monotonicity_violations(observations):
        on_error(f"{path!r}: {message}")

    return observations


def load_skill_table(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> SkillEmbeddingTable:
    """
    Load a skill embedding table from ``skill<TAB>v1<TAB>...<TAB>vd`` lines.

    - The dimension ``d`` is inferred from the first line; every other row must conform.
    - Ragged rows, non-numeric components, and duplicate skills are reported through ``on_error`` and skipped.
    - Raises ``DataError`` for an empty table (``d`` undefined).
    """
    dimension = 0
    entries: dict[str, np.ndarray] = {}

    for line_number, fields in tables.iter_tsv_fields(path, on_error=on_error):
        skill, components = fields[0], fields[1:]

        if not dimension:
            if not components:
                raise DataError(f"{path!r}: line {line_number}: row has no vector components")

            dimension = len(components)

        if len(components) != dimension:
            on_error(f"{path!r}: line {line_number}: ragged row: expected {dimension} components, "
                     f"found {len(components)}")
            continue

        try:
            vector = np.array([float(component) for component in components], dtype=np.float64)
        except ValueError:
            on_error(f"{path!r}: line {line_number}: non-numeric component")
            continue

        if not np.all(np.isfinite(vector)):
            on_error(f"{path!r}: line {line_number}: non-finite component")
            continue

        if skill in entries:
            on_error(f"{path!r}: line {line_number}: duplicate skill {skill!r}")
            continue

        entries[skill] = vector

    if not dimension:
        raise DataError(f"{path!r}: empty table")

    return SkillEmbeddingTable(dimension, entries)


def load_splits(path: str, jobs: Iterable[str], *,
                on_error: ErrorReporter = reporters.raises(DataError)) -> dict[str, Split]:
    """
    Load the ``job_id,split`` CSV written by the generator.

    - Errors reported: unknown split names, unknown jobs, duplicate jobs.
    """
    known_jobs = set(jobs)
    splits: dict[str, Split] = {}

    for line_number, row in tables.iter_csv_records(path, required=("job_id", "split"), on_error=on_error):
        job_id = row["job_id"]

        try:
            split = Split(row["split"])
        except ValueError:
            on_error(f"{path!r}: line {line_number}: unknown split {row['split']!r}")
            continue

        if job_id not in known_jobs:
            on_error(f"{path!r}: line {line_number}: unknown job_id {job_id!r}")
        elif job_id in splits:
            on_error(f"{path!r}: line {line_number}: duplicate job_id {job_id!r}")
        else:
            splits[job_id] = split

    return splits


def normalize_longitude(longitude: float) -> float:
    """Return ``longitude`` wrapped into ``(-180, 180]``."""
    wrapped = math.fmod(longitude + 180.0, 360.0)

    if wrapped <= 0.0:
        wrapped += 360.0

    return wrapped - 180.0


def observation_from_record(record: JsonObject, known_jobs: set[str] | None) -> Observation:
    """
    Return a validated ``Observation``; raises ``DataError`` naming the offending field.

    - ``known_jobs`` of ``None`` accepts any ``job_id``.
    """
    if missing := sorted(_OBSERVATION_KEYS - set(record)):
        raise DataError(f"missing key(s): {', '.join(missing)}")

    if unexpected := sorted(set(record) - _OBSERVATION_KEYS):
        raise DataError(f"unexpected key(s): {', '.join(unexpected)}")

    job_id, t, jac = record["job_id"], record["t"], record["jac"]

    if not isinstance(job_id, str) or (known_jobs is not None and job_id not in known_jobs):
        raise DataError(f"unknown job_id {job_id!r}")

    if not _is_int(t) or t < 1:
        raise DataError(f"horizon t must be an integer >= 1 (found {t!r})")

    if not _is_int(jac) or jac < 0:
        raise DataError(f"jac must be a non-negative integer (found {jac!r})")

    return Observation(job_id, t, jac)


def write_jobs(path: str, jobs: Iterable[JobPosting], *, on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write job postings as JSONL; returns ``True`` on success."""
    return tables.write_jsonl(path, records=(job.to_record() for job in jobs), on_error=on_error)


def write_observations(path: str, observations: Iterable[Observation], *,
                       on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write observations as JSONL; returns ``True`` on success."""
    return tables.write_jsonl(path, records=(o.to_record() for o in observations), on_error=on_error)


def write_skill_table(path: str, table: SkillEmbeddingTable, *,
                      on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write a skill table as TSV with full-precision components; returns ``True`` on success."""
    lines = ("\t".join([skill, *(repr(float(v)) for v in vector)]) for skill, vector in table.entries.items())

    return io.write_text_file(path, lines=lines, on_error=on_error)


def write_splits(path: str, splits: Mapping[str, Split], *,
                 on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write the ``job_id,split`` CSV; returns ``True`` on success."""
    return tables.write_csv(path, header=("job_id", "split"),
                            rows=((job_id, split.value) for job_id, split in splits.items()), on_error=on_error)


def _is_int(value: Any) -> bool:
    """Return ``True`` for integers that are not booleans."""
    return isinstance(value, int) and not isinstance(value, bool)


def _iter_monotonicity_violations(observations: Iterable[Observation]) -> Iterator[str]:
    """Yield a message for each job whose cumulative count decreases as ``t`` grows."""
    by_job: dict[str, list[Observation]] = {}

    for observation in observations:
        by_job.setdefault(observation.job_id, []).append(observation)

    for job_id, job_observations in by_job.items():
        ordered = sorted(job_observations, key=lambda o: o.t)

        for earlier, later in zip(ordered, ordered[1:]):
            if later.jac < earlier.jac:
                yield (f"job {job_id!r}: jac decreases from {earlier.jac} at t={earlier.t} "
                       f"to {later.jac} at t={later.t}")
                break


def _number(record: JsonObject, key: str) -> float:
    """Return ``record[key]`` as a finite float; raises ``DataError`` naming ``key`` otherwise."""
    value = record[key]

    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise DataError(f"{key}: expected a finite number")

    return float(value)


__all__: Final[tuple[str, ...]] = (
    "Dataset",
    "JobPosting",
    "Observation",
    "SkillEmbeddingTable",
    "Split",
    "job_from_record",
    "load_dataset",
    "load_jobs",
    "load_observations",
    "load_skill_table",
    "load_splits",
    "normalize_longitude",
    "observation_from_record",
    "write_jobs",
    "write_observations",
    "write_skill_table",
    "write_splits",
)
