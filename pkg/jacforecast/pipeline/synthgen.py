"""
Deterministic synthetic corpus generator.

Reproduces the shape of a real job-posting corpus: long-tail cumulative applicant counts with a mode at 1, a
horizon availability curve peaking at day 7, and an 8:2:2 job-level split. A planted feature signal drives the
expected counts so that supervised models have something to learn.

Count model:

- A planted score ``s`` combines job level, state, skills, salary, title role, and a role-by-level interaction.
- The latent ``z = rho * s + sqrt(1 - rho**2) * noise`` is rank-transformed across the corpus into exact
  exponential quantiles ``E``, so the per-job intensity ``base * E`` is marginally exponential.
- Applications arrive as Poisson increments of a saturating curve whose onset (channel) and speed (job type)
  depend on the job; ``rho`` scales those effects too, so ``signal_strength = 0`` leaves counts depending on ``t``
  only.
- The cumulative count is ``1 + arrivals`` capped at ``max_jac``, so it never drops below ``1``; a mixture of
  exponentially distributed intensities makes the count histogram non-increasing.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Final, NamedTuple

import numpy as np

from .datamodel import Dataset, JobPosting, Observation, SkillEmbeddingTable, Split
from .errors import ConfigError, DataError

# (city, state, latitude, longitude)
_GAZETTEER: Final[tuple[tuple[str, str, float, float], ...]] = (
    ("Anchorage", "AK", 61.2181, -149.9003),
    ("Atlanta", "GA", 33.7490, -84.3880),
    ("Austin", "TX", 30.2672, -97.7431),
    ("Boston", "MA", 42.3601, -71.0589),
    ("Buffalo", "NY", 42.8864, -78.8784),
    ("Charlotte", "NC", 35.2271, -80.8431),
    ("Chicago", "IL", 41.8781, -87.6298),
    ("Columbus", "OH", 39.9612, -82.9988),
    ("Dallas", "TX", 32.7767, -96.7970),
    ("Denver", "CO", 39.7392, -104.9903),
    ("Detroit", "MI", 42.3314, -83.0458),
    ("Honolulu", "HI", 21.3069, -157.8583),
    ("Houston", "TX", 29.7604, -95.3698),
    ("Indianapolis", "IN", 39.7684, -86.1581),
    ("Los Angeles", "CA", 34.0522, -118.2437),
    ("Miami", "FL", 25.7617, -80.1918),
    ("Minneapolis", "MN", 44.9778, -93.2650),
    ("Nashville", "TN", 36.1627, -86.7816),
    ("New York", "NY", 40.7128, -74.0060),
    ("Orlando", "FL", 28.5383, -81.3792),
    ("Philadelphia", "PA", 39.9526, -75.1652),
    ("Phoenix", "AZ", 33.4484, -112.0740),
    ("Portland", "OR", 45.5152, -122.6784),
    ("Sacramento", "CA", 38.5816, -121.4944),
    ("San Diego", "CA", 32.7157, -117.1611),
    ("Seattle", "WA", 47.6062, -122.3321),
    ("Tucson", "AZ", 32.2226, -110.9747),
)
_STATES: Final[tuple[str, ...]] = tuple(sorted({state for _, state, _, _ in _GAZETTEER}))

_ROLES: Final[tuple[str, ...]] = (
    "accountant", "analyst", "carpenter", "cashier", "chef", "clerk", "designer", "developer", "driver", "electrician",
    "engineer", "mechanic", "nurse", "pharmacist", "plumber", "receptionist", "recruiter", "teacher", "technician",
    "welder",
)
_TITLE_MODIFIERS: Final[tuple[str, ...]] = (
    "", "senior", "junior", "lead", "assistant", "certified", "staff", "associate",
)

_COMPANY_STEMS: Final[tuple[str, ...]] = (
    "Acme", "Apex", "Blue", "Bright", "Cedar", "Crest", "Delta", "Eagle", "Evergreen", "First", "Granite", "Harbor",
    "Iron", "Keystone", "Liberty", "Lumen", "Maple", "Metro", "North", "Oak", "Pioneer", "Prime", "River", "Summit",
    "Union", "Vista",
)
_COMPANY_SUFFIXES: Final[tuple[str, ...]] = (
    "Corp", "Group", "Health", "Industries", "Labs", "Logistics", "Partners", "Services", "Systems", "Works",
)

_SKILL_STEMS: Final[tuple[str, ...]] = (
    "accounting", "bookkeeping", "cad", "carpentry", "cash handling", "cooking", "customer service", "data entry",
    "driving", "excel", "first aid", "forklift", "hvac", "inventory", "java", "patient care", "payroll", "phlebotomy",
    "plumbing", "project management", "python", "quickbooks", "recruiting", "sales", "scheduling", "sql", "teaching",
    "troubleshooting", "welding", "wiring",
)
_SKILL_QUALIFIERS: Final[tuple[str, ...]] = (
    "", "advanced", "applied", "basic", "certified", "clinical", "commercial", "industrial", "remote", "residential",
)

JOB_TYPES: Final[tuple[str, ...]] = ("full-time", "part-time", "contract", "temporary", "internship")
CHANNELS: Final[tuple[str, ...]] = ("web", "mobile", "job-board", "referral", "staffing-agency")
JOB_LEVELS: Final[tuple[str, ...]] = ("entry", "mid", "senior", "manager", "executive")

# Median yearly salary per job level.
_SALARY_MEDIANS: Final[dict[str, float]] = {
    "entry": 38_000.0, "mid": 58_000.0, "senior": 85_000.0, "manager": 95_000.0, "executive": 140_000.0,
}
_SALARY_LOG_SD: Final[float] = 0.25
_SALARY_MISSING_PROBABILITY: Final[float] = 0.2
_SALARY_REFERENCE: Final[float] = 60_000.0

# Onset of applications as a fraction of the last horizon, per channel (at full signal strength).
_CHANNEL_ONSET: Final[dict[str, float]] = {
    "web": 0.0, "mobile": 0.0, "job-board": 0.1, "referral": 0.3, "staffing-agency": 0.55,
}
# Saturation time scale in days, per job type (at full signal strength).
_TYPE_TIME_SCALE: Final[dict[str, float]] = {
    "full-time": 8.0, "part-time": 5.0, "contract": 12.0, "temporary": 4.0, "internship": 20.0,
}
_NEUTRAL_TIME_SCALE: Final[float] = 10.0

# Mean number of arrivals by the last horizon for an average job.
_BASE_INTENSITY: Final[float] = 6.0

# Horizon availability: log-Gaussian bump peaking at day 7, wider on the left.
_PEAK_DAY: Final[float] = 7.0
_PEAK_PROBABILITY: Final[float] = 0.6
_LEFT_LOG_SD: Final[float] = 1.4
_RIGHT_LOG_SD: Final[float] = 0.9

_MAX_SKILLS_PER_JOB: Final[int] = 6
_COORDINATE_JITTER: Final[float] = 0.1

# Streams of the seed sequence: per-job attributes, world tables, splits, per-job arrivals.
_JOB_STREAM: Final[int] = 0
_WORLD_STREAM: Final[int] = 1
_SPLIT_STREAM: Final[int] = 2
_ARRIVAL_STREAM: Final[int] = 3


@dataclass(frozen=True, kw_only=True, slots=True)
class GenConfig:
    """
    Synthetic corpus parameters.

    Attributes:
        n_jobs: Number of jobs.
        horizons: Strictly increasing observation days.
        split_ratio: Relative (train, test, val) sizes.
        max_jac: Cap for cumulative counts.
        seed: Non-negative seed; the corpus is a pure function of the configuration.
        n_titles: Title vocabulary size.
        n_companies: Company vocabulary size.
        n_skills: Skill vocabulary size.
        signal_strength: Weight of the planted feature signal in ``[0, 1]``.
        skill_table_coverage: Fraction of the skill vocabulary present in the planted embedding table.
        skill_dim: Dimension of the planted skill embeddings.
    """
    n_jobs: int = 1000
    horizons: tuple[int, ...] = (1, 3, 7, 14, 30)
    split_ratio: tuple[float, float, float] = (8.0, 2.0, 2.0)
    max_jac: int = 75
    seed: int = 7
    n_titles: int = 60
    n_companies: int = 200
    n_skills: int = 200
    signal_strength: float = 0.8
    skill_table_coverage: float = 0.8
    skill_dim: int = 32

    def __post_init__(self) -> None:
        """Enforce the configuration invariants."""
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

        if not self.horizons or self.horizons[0] < 1:
            raise ConfigError("horizons must be non-empty and >= 1")

        if any(later <= earlier for earlier, later in zip(self.horizons, self.horizons[1:])):
            raise ConfigError("horizons must be strictly increasing")

        _check_split_ratio(self.split_ratio)

        if self.max_jac < 1:
            raise ConfigError("max_jac must be >= 1")

        if self.seed < 0:
            raise ConfigError("seed must be >= 0")

        for name, size, capacity in (("n_titles", self.n_titles, len(_ROLES) * len(_TITLE_MODIFIERS)),
                                     ("n_companies", self.n_companies, len(_COMPANY_STEMS) * len(_COMPANY_SUFFIXES)),
                                     ("n_skills", self.n_skills, len(_SKILL_STEMS) * len(_SKILL_QUALIFIERS))):
            if not 1 <= size <= capacity:
                raise ConfigError(f"{name} must be in [1, {capacity}]")

        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError("signal_strength must be in [0, 1]")

        if not 0.0 <= self.skill_table_coverage <= 1.0:
            raise ConfigError("skill_table_coverage must be in [0, 1]")

        if self.skill_dim < 1:
            raise ConfigError("skill_dim must be >= 1")


class SyntheticCorpus(NamedTuple):
    """A generated corpus: sampled observations, gapless daily paths, and the planted skill table."""
    dataset: Dataset
    daily: tuple[Observation, ...]
    skill_table: SkillEmbeddingTable


class _World(NamedTuple):
    """Vocabularies and planted weight tables shared by every job of a corpus."""
    titles: tuple[str, ...]
    title_roles: tuple[int, ...]
    companies: tuple[str, ...]
    skills: tuple[str, ...]
    level_weights: np.ndarray
    state_weights: np.ndarray
    skill_weights: np.ndarray
    role_weights: np.ndarray
    role_level_weights: np.ndarray
    coefficients: np.ndarray
    skill_table: SkillEmbeddingTable


def generate_corpus(config: GenConfig) -> Dataset:
    """Return the sampled observations of a synthetic corpus (no splits assigned)."""
    return generate_corpus_with_daily(config).dataset


def generate_corpus_with_daily(config: GenConfig) -> SyntheticCorpus:
    """
    Return a synthetic corpus with its daily paths and planted skill table.

    - Every job is observed at a random non-empty subset of ``config.horizons``.
    - Daily paths cover days ``1..max(horizons)``; sampled observations are read off the same paths, so counts are
      non-decreasing in ``t`` and bounded by ``max_jac``.
    - Every count is at least ``1``: generated data never holds a ``jac`` of ``0``, although observations allow it.
    - Identical configurations produce identical corpora.
    """
    world = _build_world(config)
    jobs: list[JobPosting] = []
    scores = np.empty(config.n_jobs)
    noise = np.empty(config.n_jobs)
    horizon_sets: list[tuple[int, ...]] = []

    for index in range(config.n_jobs):
        rng = np.random.default_rng([config.seed, _JOB_STREAM, index])
        job, scores[index] = _sample_job(index, world, rng, width=max(6, len(str(config.n_jobs))))
        noise[index] = rng.standard_normal()
        horizon_sets.append(_sample_horizons(config.horizons, rng))
        jobs.append(job)

    intensities = _BASE_INTENSITY * _exponential_latents(scores, noise, config.signal_strength)
    last_day = config.horizons[-1]
    observations: list[Observation] = []
    daily: list[Observation] = []

    for index, job in enumerate(jobs):
        rng = np.random.default_rng([config.seed, _ARRIVAL_STREAM, index])
        curve = saturation_curve(last_day, onset=_onset_day(job.channel, last_day, config.signal_strength),
                                 time_scale=_time_scale(job.job_type, config.signal_strength))
        arrivals = np.cumsum(rng.poisson(intensities[index] * np.diff(curve, prepend=0.0)))
        path = np.minimum(config.max_jac, 1 + arrivals)

        daily.extend(Observation(job.job_id, day, int(path[day - 1])) for day in range(1, last_day + 1))
        observations.extend(Observation(job.job_id, day, int(path[day - 1])) for day in horizon_sets[index])

    dataset = Dataset({job.job_id: job for job in jobs}, tuple(observations))

    return SyntheticCorpus(dataset, tuple(daily), world.skill_table)


def horizon_probability(day: int) -> float:
    """Return the probability that a job is observed at ``day`` (rises to a peak at day 7, then falls)."""
    offset = math.log(day / _PEAK_DAY)
    sd = _LEFT_LOG_SD if offset < 0 else _RIGHT_LOG_SD

    return _PEAK_PROBABILITY * math.exp(-offset * offset / (2.0 * sd * sd))


def saturation_curve(last_day: int, *, onset: int = 0, time_scale: float = _NEUTRAL_TIME_SCALE) -> np.ndarray:
    """
    Return the cumulative share of arrivals by days ``1..last_day``.

    - Zero through ``onset``, then ``1 - exp(-(t - onset) / time_scale)`` rescaled to reach ``1`` at ``last_day``.
    """
    days = np.arange(1, last_day + 1, dtype=np.float64)
    elapsed = np.maximum(0.0, days - onset)

    return -np.expm1(-elapsed / time_scale) / -math.expm1(-(last_day - onset) / time_scale)


def split(dataset: Dataset, ratio: Sequence[float], seed: int) -> Dataset:
    """
    Return ``dataset`` with a split assigned to every job.

    - Jobs (not observations) are shuffled from ``seed`` and allocated by largest remainder, so no job leaks across
      splits and every split receives at least one job.
    - Raises ``DataError`` for fewer than three jobs.
    """
    _check_split_ratio(ratio)
    job_ids = sorted(dataset.jobs)

    if len(job_ids) < 3:
        raise DataError(f"cannot populate all splits with {len(job_ids)} job(s) (at least 3 required)")

    counts = _allocate(len(job_ids), ratio)
    order = np.random.default_rng([seed, _SPLIT_STREAM]).permutation(len(job_ids))
    boundaries = np.cumsum(counts)
    assignment: dict[str, Split] = {}

    for position, job_index in enumerate(order):
        split_index = int(np.searchsorted(boundaries, position, side="right"))
        assignment[job_ids[job_index]] = (Split.TRAIN, Split.TEST, Split.VAL)[split_index]

    return dataset.with_splits({job_id: assignment[job_id] for job_id in dataset.jobs})


def _allocate(total: int, ratio: Sequence[float]) -> list[int]:
    """Return per-split job counts by largest remainder, each at least ``1``."""
    quotas = [total * part / sum(ratio) for part in ratio]
    counts = [math.floor(quota) for quota in quotas]
    by_remainder = sorted(range(len(ratio)), key=lambda i: (-(quotas[i] - counts[i]), i))

    for i in by_remainder[:total - sum(counts)]:
        counts[i] += 1

    for i, count in enumerate(counts):
        if not count:
            counts[i] = 1
            counts[counts.index(max(counts))] -= 1

    return counts


def _build_world(config: GenConfig) -> _World:
    """Return vocabularies and planted weights derived from ``config.seed``."""
    rng = np.random.default_rng([config.seed, _WORLD_STREAM])

    title_pairs = [(modifier, role) for role in range(len(_ROLES)) for modifier in _TITLE_MODIFIERS]
    title_pairs = [title_pairs[i] for i in rng.permutation(len(title_pairs))[:config.n_titles]]
    titles = tuple(" ".join(word for word in (modifier, _ROLES[role]) if word).title()
                   for modifier, role in title_pairs)

    company_pairs = [(stem, suffix) for stem in _COMPANY_STEMS for suffix in _COMPANY_SUFFIXES]
    companies = tuple(f"{company_pairs[i][0]} {company_pairs[i][1]}"
                      for i in rng.permutation(len(company_pairs))[:config.n_companies])

    skill_names = [" ".join(word for word in (qualifier, stem) if word)
                   for qualifier in _SKILL_QUALIFIERS for stem in _SKILL_STEMS]
    skills = tuple(skill_names[:config.n_skills])
    skill_weights = rng.standard_normal(len(skills))

    # Planted embeddings carry the skill weight in their first component.
    covered = rng.permutation(len(skills))[:round(config.skill_table_coverage * len(skills))]
    entries = {}

    for i in sorted(covered):
        vector = rng.standard_normal(config.skill_dim) / math.sqrt(config.skill_dim)
        vector[0] = skill_weights[i]
        entries[skills[i]] = vector

    coefficients = rng.standard_normal(6)

    return _World(
        titles=titles,
        title_roles=tuple(role for _, role in title_pairs),
        companies=companies,
        skills=skills,
        level_weights=rng.standard_normal(len(JOB_LEVELS)),
        state_weights=rng.standard_normal(len(_STATES)),
        skill_weights=skill_weights,
        role_weights=rng.standard_normal(len(_ROLES)),
        role_level_weights=rng.standard_normal((len(_ROLES), len(JOB_LEVELS))),
        coefficients=coefficients / np.linalg.norm(coefficients),
        skill_table=SkillEmbeddingTable(config.skill_dim, entries),
    )


def _check_split_ratio(ratio: Sequence[float]) -> None:
    """Raise ``ConfigError`` unless ``ratio`` has three positive components."""
    if len(ratio) != 3 or any(not part > 0 for part in ratio):
        raise ConfigError("split ratio must have three positive components (train, test, val)")


def _describe(title: str, company: str, city: str, state: str, skills: Sequence[str], rng: np.random.Generator) -> str:
    """Return a template-generated job description."""
    article = "an" if title[0].lower() in "aeiou" else "a"
    openers = (
        f"{company} is hiring {article} {title} in {city}, {state}.",
        f"Join {company} as {article} {title}.",
        f"{company} seeks {article} {title} for our {city} team.",
    )
    skill_text = ", ".join(skills) if skills else "a friendly team"
    bodies = (
        f"You will work with {skill_text}.",
        f"Daily work involves {skill_text}.",
        f"Candidates should be comfortable with {skill_text}.",
    )
    closers = ("Apply today.", "Competitive pay and benefits.", "Flexible schedules available.", "")
    sentences = (openers[rng.integers(len(openers))], bodies[rng.integers(len(bodies))],
                 closers[rng.integers(len(closers))])

    return " ".join(sentence for sentence in sentences if sentence)


def _exponential_latents(scores: np.ndarray, noise: np.ndarray, signal_strength: float) -> np.ndarray:
    """Return exact exponential quantiles ordered by the mixed latent ``rho * score + sqrt(1 - rho**2) * noise``."""
    spread = scores.std()
    standardized = (scores - scores.mean()) / spread if spread > 0 else np.zeros_like(scores)
    latent = signal_strength * standardized + math.sqrt(1.0 - signal_strength ** 2) * noise
    ranks = np.empty(latent.size)

    ranks[np.argsort(latent, kind="stable")] = np.arange(latent.size)

    return -np.log1p(-(ranks + 0.5) / latent.size)


def _onset_day(channel: str, last_day: int, signal_strength: float) -> int:
    """Return the last day without arrivals for a ``channel`` posting."""
    return min(last_day - 1, round(signal_strength * _CHANNEL_ONSET[channel] * last_day))


def _sample_horizons(horizons: Sequence[int], rng: np.random.Generator) -> tuple[int, ...]:
    """Return a non-empty subset of ``horizons`` drawn from the availability curve."""
    probabilities = np.array([horizon_probability(day) for day in horizons])
    chosen = tuple(day for day, keep in zip(horizons, rng.random(len(horizons)) < probabilities) if keep)

    if chosen:
        return chosen

    return (horizons[int(rng.choice(len(horizons), p=probabilities / probabilities.sum()))],)


def _sample_job(index: int, world: _World, rng: np.random.Generator, *, width: int) -> tuple[JobPosting, float]:
    """Return a job and its planted score."""
    title_index = int(rng.integers(len(world.titles)))
    role = world.title_roles[title_index]
    company = world.companies[rng.integers(len(world.companies))]
    job_type = JOB_TYPES[rng.integers(len(JOB_TYPES))]
    channel = CHANNELS[rng.integers(len(CHANNELS))]
    level_index = int(rng.integers(len(JOB_LEVELS)))
    city, state, latitude, longitude = _GAZETTEER[rng.integers(len(_GAZETTEER))]
    skill_count = min(len(world.skills), int(rng.integers(_MAX_SKILLS_PER_JOB + 1)))
    skill_indices = rng.choice(len(world.skills), size=skill_count, replace=False)
    skills = tuple(world.skills[i] for i in skill_indices)
    salary = _SALARY_MEDIANS[JOB_LEVELS[level_index]] * math.exp(_SALARY_LOG_SD * rng.standard_normal())
    salary_known = rng.random() >= _SALARY_MISSING_PROBABILITY
    latitude = float(np.clip(latitude + rng.uniform(-_COORDINATE_JITTER, _COORDINATE_JITTER), -90.0, 90.0))
    longitude += rng.uniform(-_COORDINATE_JITTER, _COORDINATE_JITTER)

    components = np.array([
        world.level_weights[level_index],
        world.state_weights[_STATES.index(state)],
        math.sqrt(len(skill_indices)) * float(world.skill_weights[skill_indices].mean()) if len(skill_indices) else 0.0,
        math.log(salary / _SALARY_REFERENCE) / (2 * _SALARY_LOG_SD) if salary_known else 0.0,
        world.role_weights[role],
        world.role_level_weights[role, level_index],
    ])
    title = world.titles[title_index]
    job = JobPosting(
        job_id=f"J{index + 1:0{width}d}",
        title=title,
        company=company,
        description=_describe(title, company, city, state, skills, rng),
        skills=skills,
        job_type=job_type,
        state=state,
        channel=channel,
        job_level=JOB_LEVELS[level_index],
        city=city,
        latitude=round(latitude, 4),
        longitude=round(longitude, 4),
        salary=float(round(salary, -2)) if salary_known else None,
    )

    return job, float(world.coefficients @ components)


def _time_scale(job_type: str, signal_strength: float) -> float:
    """Return the saturation time scale for ``job_type``, interpolated geometrically from the neutral scale."""
    return _NEUTRAL_TIME_SCALE ** (1.0 - signal_strength) * _TYPE_TIME_SCALE[job_type] ** signal_strength


__all__: Final[tuple[str, ...]] = (
    "CHANNELS",
    "GenConfig",
    "JOB_LEVELS",
    "JOB_TYPES",
    "SyntheticCorpus",
    "generate_corpus",
    "generate_corpus_with_daily",
    "horizon_probability",
    "saturation_curve",
    "split",
)
