"""
Text casting of job postings for language-model encoders.

Every modality is rendered as a sentence and the sentences are joined into one paragraph per job, in the fixed
order: title/company/description, categorical fields, skills, location, salary, and (joint mode) day.
"""

import math
import os
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Final, NamedTuple

import numpy as np

from jacforecast.cli import reporters
from jacforecast.cli.types import ErrorReporter
from . import tables
from .datamodel import Dataset, JobPosting, Split
from .errors import ConfigError, DataError
from .featfusion import CATEGORICAL_FIELDS

#: Version of the built-in templates; recorded with every export.
TEMPLATE_VERSION: Final[str] = "1"

#: File name pattern of exported LM datasets (``{split}`` is ``train``, ``test``, or ``val``).
LM_DATASET_PATTERN: Final[str] = "lm_dataset.{split}.jsonl"

#: File name of the export manifest.
LM_MANIFEST_NAME: Final[str] = "lm_dataset.manifest.json"

_LM_RECORD_KEYS: Final[frozenset[str]] = frozenset({"job_id", "t", "paragraph", "label"})


class Modality(StrEnum):
    """Modalities in paragraph order."""
    TEXT = "text"
    CATEGORICAL = "categorical"
    SKILLS = "skills"
    LOCATION = "location"
    NUMERIC = "numeric"
    DAY = "day"


@dataclass(frozen=True, kw_only=True, slots=True)
class TemplateConfig:
    """
    Sentence templates; each is instantiated with ``str.format`` and rendered without its final period.

    Attributes:
        version: Template version recorded with exports.
        title: Title sentence (``{value}``).
        company: Company sentence (``{value}``).
        categorical: Sentence per categorical field (``{value}``).
        skills: Skills sentence (``{value}`` is the comma-joined list).
        location: Location sentence (``{value}`` is ``"city, state"``).
        numeric: Salary sentence (``{value}`` is the decimal string).
        day: Day sentence (``{value}`` is the number of days).
        delimiter: Separator placed between sentences.
    """
    version: str = TEMPLATE_VERSION
    title: str = "Job title: {value}"
    company: str = "Company: {value}"
    categorical: Mapping[str, str] = field(default_factory=lambda: {
        "job_type": "The job type is {value}",
        "state": "The state is {value}",
        "channel": "The posting channel is {value}",
        "job_level": "The job level is {value}",
    })
    skills: str = "Required skills: {value}"
    location: str = "The job is located in {value}"
    numeric: str = "The salary is {value}"
    day: str = "This job has been posted for {value} days"
    delimiter: str = ". "

    def __post_init__(self) -> None:
        """Enforce a template per categorical field and a non-empty delimiter."""
        if sorted(self.categorical) != sorted(CATEGORICAL_FIELDS):
            raise ConfigError(f"categorical templates must cover exactly: {', '.join(CATEGORICAL_FIELDS)}")

        if not self.delimiter:
            raise ConfigError("delimiter must be non-empty")


class Paragraph(NamedTuple):
    """The text rendering of a job, optionally at day ``t``."""
    job_id: str
    t: int | None
    text: str


class LmRecord(NamedTuple):
    """One line of an exported LM dataset."""
    job_id: str
    t: int
    paragraph: str
    label: int


def export_lm_dataset(dataset: Dataset, template: TemplateConfig, directory: str, *, include_day: bool = False,
                      on_error: ErrorReporter = reporters.raises(DataError)) -> dict[Split, int]:
    """
    Write one ``{job_id, t, paragraph, label}`` line per observation into a file per split, plus a manifest.

    - Lines are ordered by ``(job_id, t)``; every split file is written, even when empty.
    - The day sentence is included only when ``include_day`` is set (joint mode).
    - Returns the number of lines per split; raises ``DataError`` when observations lack a split.
    """
    by_split: dict[Split, list[LmRecord]] = {split: [] for split in Split}
    paragraphs: dict[tuple[str, int | None], str] = {}

    for observation in sorted(dataset.observations, key=lambda o: (o.job_id, o.t)):
        split = dataset.split_of(observation)
        day = observation.t if include_day else None

        if (key := (observation.job_id, day)) not in paragraphs:
            paragraphs[key] = serialize_job(dataset.jobs[observation.job_id], day, template).text

        by_split[split].append(LmRecord(observation.job_id, observation.t, paragraphs[key], observation.jac))

    for split, records in by_split.items():
        write_lm_dataset(os.path.join(directory, LM_DATASET_PATTERN.format(split=split.value)), records,
                         on_error=on_error)

    counts = {split: len(records) for split, records in by_split.items()}
    manifest = {
        "template_version": template.version,
        "include_day": include_day,
        "delimiter": template.delimiter,
        "counts": {split.value: count for split, count in counts.items()},
    }

    tables.write_json(os.path.join(directory, LM_MANIFEST_NAME), manifest, on_error=on_error)

    return counts


def import_embeddings(path: str, *,
                      on_error: ErrorReporter = reporters.raises(DataError)) -> dict[tuple[str, int], np.ndarray]:
    """
    Load externally produced embeddings from ``job_id<TAB>t<TAB>v1..vk`` lines.

    - ``k`` is inferred from the first row; ragged rows, bad days, non-numeric components, and duplicate
      ``(job_id, t)`` keys are reported and skipped.
    """
    dimension = 0
    embeddings: dict[tuple[str, int], np.ndarray] = {}

    for line_number, fields in tables.iter_tsv_fields(path, on_error=on_error):
        if len(fields) < 3:
            on_error(f"{path!r}: line {line_number}: expected job_id, t, and at least one component")
            continue

        job_id, day, components = fields[0], fields[1], fields[2:]

        if not dimension:
            dimension = len(components)

        if len(components) != dimension:
            on_error(f"{path!r}: line {line_number}: ragged row: expected {dimension} components, "
                     f"found {len(components)}")
            continue

        try:
            key = (job_id, int(day))
            vector = np.array([float(component) for component in components], dtype=np.float64)
        except ValueError:
            on_error(f"{path!r}: line {line_number}: malformed day or component")
            continue

        if key in embeddings:
            on_error(f"{path!r}: line {line_number}: duplicate key ({job_id!r}, {key[1]})")
            continue

        embeddings[key] = vector

    return embeddings


def load_lm_dataset(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> list[LmRecord]:
    """Load an exported LM dataset file; malformed lines are reported and skipped."""
    records = []

    for line_number, record in tables.iter_jsonl_records(path, on_error=on_error):
        if set(record) != _LM_RECORD_KEYS:
            on_error(f"{path!r}: line {line_number}: expected keys {', '.join(sorted(_LM_RECORD_KEYS))}")
            continue

        job_id, day, paragraph, label = record["job_id"], record["t"], record["paragraph"], record["label"]

        if not (isinstance(job_id, str) and isinstance(paragraph, str) and _is_int(day) and _is_int(label)):
            on_error(f"{path!r}: line {line_number}: malformed record")
            continue

        records.append(LmRecord(job_id, day, paragraph, label))

    return records


def render_number(value: float) -> str:
    """Return ``value`` as a plain decimal string (integral values without a fractional part)."""
    if math.isfinite(value) and float(value).is_integer():
        return str(int(value))

    return repr(float(value))


def serialize_job(job: JobPosting, t: int | None = None, template: TemplateConfig = TemplateConfig()) -> Paragraph:
    """
    Return the paragraph of ``job``: text sentences, categorical, skills, location, salary, then day (when ``t``).

    - Empty sentences are omitted; a job with only empty fields and no ``t`` gives an empty paragraph.
    - Field values keep their own punctuation (``"Acme Inc."`` stays ``"Acme Inc."``).
    """
    bodies = [
        _instantiate(template.title, job.title),
        _instantiate(template.company, job.company),
        job.description.strip(),
        *(_body(Modality.CATEGORICAL, (name, getattr(job, name)), template) for name in CATEGORICAL_FIELDS),
        _body(Modality.SKILLS, job.skills, template),
        _body(Modality.LOCATION, (job.city, job.state), template),
        _body(Modality.NUMERIC, job.salary, template),
        _body(Modality.DAY, t, template),
    ]

    return Paragraph(job.job_id, t, _join(bodies, template.delimiter))


def text_cast(modality: Modality, value: Any, template: TemplateConfig = TemplateConfig()) -> str:
    """
    Return the sentence for one modality payload, or ``""`` when the payload is absent.

    Payloads:

    - ``CATEGORICAL``: ``(field, value)``.
    - ``SKILLS``: sequence of skill names.
    - ``LOCATION``: ``(city, state)``.
    - ``NUMERIC``: salary or ``None``.
    - ``DAY``: day or ``None``.
    - ``TEXT``: free text.
    """
    return _terminate(_body(modality, value, template))


def write_lm_dataset(path: str, records: Iterable[LmRecord], *,
                     on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write LM records as JSONL; returns ``True`` on success."""
    return tables.write_jsonl(path, records=(record._asdict() for record in records), on_error=on_error)


def _body(modality: Modality, value: Any, template: TemplateConfig) -> str:
    """Return the sentence of one modality payload without its terminating period."""
    match modality:
        case Modality.TEXT:
            return str(value).strip()
        case Modality.CATEGORICAL:
            name, category = value
            return _instantiate(template.categorical[name], category)
        case Modality.SKILLS:
            return _instantiate(template.skills, ", ".join(skill for skill in value if skill))
        case Modality.LOCATION:
            return _instantiate(template.location, ", ".join(part for part in value if part))
        case Modality.NUMERIC:
            return "" if value is None else _instantiate(template.numeric, render_number(value))
        case Modality.DAY:
            return "" if value is None else _instantiate(template.day, str(value))
        case _:
            raise ConfigError(f"unknown modality: {modality!r}")


def _instantiate(pattern: str, value: str) -> str:
    """Return ``pattern`` filled with ``value``, or ``""`` when ``value`` is empty."""
    value = value.strip()

    return pattern.format(value=value) if value else ""


def _is_int(value: Any) -> bool:
    """Return ``True`` for integers that are not booleans."""
    return isinstance(value, int) and not isinstance(value, bool)


def _join(bodies: Sequence[str], delimiter: str) -> str:
    """
    Return the non-empty sentence bodies joined by ``delimiter`` and closed with a period.

    - A body that already ends with a period is not given a second one: the delimiter loses its leading period.
    """
    parts: list[str] = []

    for body in filter(None, bodies):
        if parts:
            ends_sentence = parts[-1].endswith(".") and delimiter.startswith(".")
            parts.append(delimiter[1:] if ends_sentence else delimiter)

        parts.append(body)

    return _terminate("".join(parts))


def _terminate(body: str) -> str:
    """Return ``body`` closed with a period unless it is empty or already ends with one."""
    return body if not body or body.endswith(".") else f"{body}."


__all__: Final[tuple[str, ...]] = (
    "LM_DATASET_PATTERN",
    "LM_MANIFEST_NAME",
    "LmRecord",
    "Modality",
    "Paragraph",
    "TEMPLATE_VERSION",
    "TemplateConfig",
    "export_lm_dataset",
    "import_embeddings",
    "load_lm_dataset",
    "render_number",
    "serialize_job",
    "text_cast",
    "write_lm_dataset",
)
