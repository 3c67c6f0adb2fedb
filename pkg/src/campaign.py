"""Seeded Monte Carlo campaigns over spectra, states, orbits and local unitaries.

Every sample draws from its own stream
``Generator(PCG64(SeedSequence(master_seed, spawn_key=(stream, index))))``,
and the first draw of that stream is the sample's reservoir priority, so a
campaign's output depends only on (experiment, n_samples, master_seed).
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from itertools import repeat
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from .deltas import (
    ORDERING_SLACK,
    QUANTITIES,
    SANDWICH_SLACK,
    DeltaBatch,
    compute_deltas_batch,
    delta_s,
    gap_terms,
)
from .entropy import DEFAULT_SUPPORT_TOL, EntropyDiagnostics, Spectrum
from .errors import CampaignIOError, ConfigError, InvariantViolation
from .findings import FindingEntry, FindingStore, get_hostname, get_username
from .linalg import ComplexMatrix, identity, is_density_matrix, sample_random_density
from .marginal import (
    DEFAULT_MAX_TRIES,
    FULL_RANK_FLOOR,
    bravyi_admissible,
    margins_of_state,
    sample_triple,
)
from .orbit import INTERVAL_SLACK, orbit_extremes, verify_orbit_interval
from .results import (
    SIGN_THRESHOLD,
    CampaignSummary,
    CounterexampleFixture,
    FindingKind,
    FindingRecord,
    RowReservoir,
    RunLog,
    Sign,
    classify_sign,
    matrix_from_hex,
    matrix_to_hex,
    write_samples_csv,
    write_samples_json,
)
from .unitary_opt import Manifold, Mode, Objective, OptimizerConfig, local_evidence, optimize

logger = logging.getLogger(__name__)


class Experiment(Enum):
    SPECTRA_DELTAS = "spectra-deltas"
    STATE_DELTAS = "state-deltas"
    ORBIT_VERIFY = "orbit-verify"
    COUNTEREXAMPLE = "counterexample"
    LOCAL_OPT = "local-opt"


DEFAULT_SAMPLES = {
    Experiment.SPECTRA_DELTAS: 1_000_000,
    Experiment.STATE_DELTAS: 10_000,
    Experiment.ORBIT_VERIFY: 300,
    Experiment.COUNTEREXAMPLE: 10_000,
    Experiment.LOCAL_OPT: 100,
}

# spawn_key stream ids; never reuse a number.
_STREAMS = {
    Experiment.SPECTRA_DELTAS: 1,
    Experiment.STATE_DELTAS: 2,
    Experiment.ORBIT_VERIFY: 3,
    Experiment.COUNTEREXAMPLE: 4,
    Experiment.LOCAL_OPT: 5,
}
REFINE_STREAM = 64

_CHUNK_SIZES = {
    Experiment.SPECTRA_DELTAS: 10_000,
    Experiment.STATE_DELTAS: 1_000,
    Experiment.ORBIT_VERIFY: 10,
    Experiment.COUNTEREXAMPLE: 1_000,
    Experiment.LOCAL_OPT: 2,
}

# Counters that must stay at zero; anything else is an internal failure.
INVARIANT_COUNTERS = (
    "ordering_violations",
    "implication_failures",
    "sandwich_violations",
    "interval_violations",
    "unattained_extremes",
)

SPECTRA_HEADER = [
    "index", "l1", "l2", "l3", "l4", "lA", "lB",
    "m1", "m2", "m3", "m4", "mA", "mB", *QUANTITIES,
]
STATE_HEADER = SPECTRA_HEADER + ["delta_s"]
COUNTEREXAMPLE_HEADER = ["index", "delta_s", "joint", "margin_a", "margin_b"]
ORBIT_HEADER = [
    "index", "dim", "min_value", "max_value", "observed_min", "observed_max",
    "violations", "aligned_min", "aligned_max", "coverage",
]
LOCAL_HEADER = ["index", "local_max", "orbit_min", "orbit_max", "margin_a", "margin_b", "gap", "converged"]


@dataclass(frozen=True)
class Thresholds:
    """Every named tolerance a campaign uses."""
    sign: float = SIGN_THRESHOLD
    ordering_slack: float = ORDERING_SLACK
    sandwich_slack: float = SANDWICH_SLACK
    interval_slack: float = INTERVAL_SLACK
    support_tol: float = DEFAULT_SUPPORT_TOL
    full_rank_floor: float = FULL_RANK_FLOOR
    bravyi_slack: float = 1e-10
    strong_violation: float = 1e-6
    margin_max_tries: int = DEFAULT_MAX_TRIES
    haar_samples: int = 1000
    dims: Tuple[int, ...] = (2, 3, 4)
    restarts: int = 20
    optimizer_iters: int = 500
    refine_steps: int = 200
    max_rows: int = 20_000

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["dims"] = list(self.dims)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Thresholds":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown thresholds: {sorted(unknown)}")
        values = dict(data)
        if "dims" in values:
            values["dims"] = tuple(int(d) for d in values["dims"])
        return cls(**values)


@dataclass
class CampaignConfig:
    """Seeded description of one campaign."""
    experiment: Experiment
    n_samples: int
    master_seed: int = 0
    output_dir: Path = Path("results")
    workers: int = 1
    output_format: str = "csv"
    thresholds: Thresholds = field(default_factory=Thresholds)
    sigma_mixed: bool = False          # counterexample: fix σ = I/4
    include_equal_pair: bool = False   # state-deltas: sample 0 has σ = ρ
    objective: Objective = Objective.RELATIVE_ENTROPY

    def validate(self) -> "CampaignConfig":
        if not isinstance(self.experiment, Experiment):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.master_seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.master_seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.output_format!r}")
        th = self.thresholds
        if th.max_rows < 0 or th.haar_samples < 1 or th.restarts < 1 or th.optimizer_iters < 1:
            raise ConfigError("max_rows, haar_samples, restarts and optimizer_iters must be positive")
        if not th.dims or any(d < 1 for d in th.dims):
            raise ConfigError(f"dims must be positive, got {th.dims}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment.value,
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "output_dir": str(self.output_dir),
            "workers": self.workers,
            "output_format": self.output_format,
            "thresholds": self.thresholds.to_dict(),
            "sigma_mixed": self.sigma_mixed,
            "include_equal_pair": self.include_equal_pair,
            "objective": self.objective.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CampaignConfig":
        try:
            experiment = Experiment(data["experiment"])
            return cls(
                experiment=experiment,
                n_samples=int(data.get("n_samples", DEFAULT_SAMPLES[experiment])),
                master_seed=int(data.get("master_seed", 0)),
                output_dir=Path(data.get("output_dir", "results")),
                workers=int(data.get("workers", 1)),
                output_format=data.get("output_format", "csv"),
                thresholds=Thresholds.from_dict(data.get("thresholds", {})),
                sigma_mixed=bool(data.get("sigma_mixed", False)),
                include_equal_pair=bool(data.get("include_equal_pair", False)),
                objective=Objective(data.get("objective", Objective.RELATIVE_ENTROPY.value)),
            ).validate()
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid campaign config: {e}") from e

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str) -> "CampaignConfig":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except OSError as e:
            raise CampaignIOError(f"could not read config ({e.strerror})", str(path)) from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
        return cls.from_dict(data)


def sample_rng(master_seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for one sample, a pure function of its key."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.PCG64(seq))


def _new_summary(config: CampaignConfig, n: int, header: List[str]) -> CampaignSummary:
    return CampaignSummary(
        experiment=config.experiment.value,
        master_seed=config.master_seed,
        n_samples=n,
        header=list(header),
        reservoir=RowReservoir(config.thresholds.max_rows),
    )


def _draw_state(rng: np.random.Generator, th: Thresholds, full_rank: bool = False) -> ComplexMatrix:
    return sample_random_density(4, rng, require_full_rank=full_rank, floor=th.full_rank_floor)


def _state_digest(index: int, rho: ComplexMatrix, sigma: ComplexMatrix) -> Dict[str, Any]:
    return {"index": index, "rho": matrix_to_hex(rho), "sigma": matrix_to_hex(sigma)}


def _fold_deltas(
    summary: CampaignSummary,
    batch: DeltaBatch,
    indices: np.ndarray,
    digest_of: Callable[[int], Dict[str, Any]],
    th: Thresholds,
) -> None:
    """Tallies, ordering and implication checks shared by both Δ campaigns."""
    for q in QUANTITIES:
        summary.tally(q, th.sign).update(batch.column(q), indices, digest_of)

    broken = batch.ordering_violations(th.ordering_slack)
    summary.count("ordering_violations", np.count_nonzero(broken))
    for pos in np.flatnonzero(broken):
        summary.record(FindingRecord(
            FindingKind.ORDERING_VIOLATION, int(indices[pos]), _row_values(batch, pos), digest_of(pos),
        ))

    negative_delta = batch.delta < -th.sign
    summary.count("modified_failures", np.count_nonzero(negative_delta))
    summary.count("implication_failures", np.count_nonzero((batch.delta_mix >= -th.sign) & negative_delta))

    suspicious = negative_delta | (batch.delta_mix < -th.sign)
    for pos in np.flatnonzero(suspicious):
        logger.warning("potential counterexample at sample %d: %s", indices[pos], _row_values(batch, pos))
        summary.record(FindingRecord(
            FindingKind.POTENTIAL_COUNTEREXAMPLE, int(indices[pos]), _row_values(batch, pos), digest_of(pos),
        ))


def _row_values(batch: DeltaBatch, pos: int) -> Dict[str, float]:
    return {q: float(batch.column(q)[pos]) for q in QUANTITIES}


def _spectra_chunk(config: CampaignConfig, start: int, stop: int) -> CampaignSummary:
    th = config.thresholds
    n = stop - start
    stream = _STREAMS[Experiment.SPECTRA_DELTAS]
    rho = np.empty((n, 6))
    sigma = np.empty((n, 6))
    priorities = np.empty(n)
    retries = 0

    for pos, index in enumerate(range(start, stop)):
        rng = sample_rng(config.master_seed, stream, index)
        priorities[pos] = rng.random()
        rho_t, r1 = sample_triple(rng, max_tries=th.margin_max_tries)
        sigma_t, r2 = sample_triple(
            rng, require_full_rank=True, floor=th.full_rank_floor, max_tries=th.margin_max_tries,
        )
        retries += r1 + r2
        rho[pos] = rho_t.to_list()
        sigma[pos] = sigma_t.to_list()

    batch = compute_deltas_batch(
        rho[:, :4], rho[:, 4], rho[:, 5], sigma[:, :4], sigma[:, 4], sigma[:, 5],
    )
    indices = np.arange(start, stop)

    def digest_of(pos: int) -> Dict[str, Any]:
        return {"index": int(indices[pos]), "rho": rho[pos].tolist(), "sigma": sigma[pos].tolist()}

    summary = _new_summary(config, n, SPECTRA_HEADER)
    _fold_deltas(summary, batch, indices, digest_of, th)
    summary.count("sampling_retries", retries)

    values = batch.as_matrix()
    for pos in range(n):
        index = int(indices[pos])
        if summary.reservoir.accepts(priorities[pos], index):
            summary.reservoir.offer(
                priorities[pos], index, [index, *rho[pos].tolist(), *sigma[pos].tolist(), *values[pos].tolist()],
            )
    logger.debug("spectra chunk [%d, %d) done", start, stop)
    return summary


def _state_chunk(config: CampaignConfig, start: int, stop: int) -> CampaignSummary:
    th = config.thresholds
    n = stop - start
    stream = _STREAMS[Experiment.STATE_DELTAS]
    diagnostics = EntropyDiagnostics()
    rho_list: List[ComplexMatrix] = []
    sigma_list: List[ComplexMatrix] = []
    spectra = np.empty((n, 12))
    gaps = np.empty(n)
    priorities = np.empty(n)
    bravyi_failures = 0

    for pos, index in enumerate(range(start, stop)):
        rng = sample_rng(config.master_seed, stream, index)
        priorities[pos] = rng.random()
        if config.include_equal_pair and index == 0:
            rho = _draw_state(rng, th, full_rank=True)
            sigma = rho.copy()
        else:
            rho = _draw_state(rng, th)
            sigma = _draw_state(rng, th, full_rank=True)
        rho_t = margins_of_state(rho, slack=th.bravyi_slack)
        sigma_t = margins_of_state(sigma, slack=th.bravyi_slack)
        for t in (rho_t, sigma_t):
            if not bravyi_admissible(t, slack=th.bravyi_slack).admissible:
                bravyi_failures += 1
        spectra[pos, :6] = rho_t.to_list()
        spectra[pos, 6:] = sigma_t.to_list()
        gaps[pos] = gap_terms(rho, sigma, diagnostics, support_tol=th.support_tol).value
        rho_list.append(rho)
        sigma_list.append(sigma)

    batch = compute_deltas_batch(
        spectra[:, :4], spectra[:, 4], spectra[:, 5], spectra[:, 6:10], spectra[:, 10], spectra[:, 11],
    )
    indices = np.arange(start, stop)

    def digest_of(pos: int) -> Dict[str, Any]:
        return _state_digest(int(indices[pos]), rho_list[pos], sigma_list[pos])

    summary = _new_summary(config, n, STATE_HEADER)
    _fold_deltas(summary, batch, indices, digest_of, th)
    summary.tally("delta_s", th.sign).update(gaps, indices, digest_of)
    summary.count("bravyi_failures", bravyi_failures)
    summary.count("clamped_negatives", diagnostics.clamped_negatives)
    summary.count("support_violations", diagnostics.support_violations)

    finite = np.isfinite(gaps)
    outside = finite & (
        (gaps < batch.delta_bar - th.sandwich_slack) | (gaps > batch.delta + th.sandwich_slack)
    )
    summary.count("sandwich_violations", np.count_nonzero(outside))
    for pos in np.flatnonzero(outside):
        values = {**_row_values(batch, pos), "delta_s": float(gaps[pos])}
        summary.record(FindingRecord(FindingKind.SANDWICH_VIOLATION, int(indices[pos]), values, digest_of(pos)))

    _record_superadditivity(summary, gaps, indices, digest_of, th)

    values = batch.as_matrix()
    for pos in range(n):
        index = int(indices[pos])
        if summary.reservoir.accepts(priorities[pos], index):
            summary.reservoir.offer(
                priorities[pos], index, [index, *spectra[pos].tolist(), *values[pos].tolist(), float(gaps[pos])],
            )
    return summary


def _record_superadditivity(
    summary: CampaignSummary,
    gaps: np.ndarray,
    indices: np.ndarray,
    digest_of: Callable[[int], Dict[str, Any]],
    th: Thresholds,
) -> None:
    summary.count("strong_violations", np.count_nonzero(gaps < -th.strong_violation))
    for pos in np.flatnonzero(gaps < -th.sign):
        summary.record(FindingRecord(
            FindingKind.SUPERADDITIVITY_VIOLATION, int(indices[pos]), {"delta_s": float(gaps[pos])}, digest_of(pos),
        ))


def _counterexample_sigma(rng: np.random.Generator, config: CampaignConfig) -> ComplexMatrix:
    if config.sigma_mixed:
        return identity(4) / 4.0
    return _draw_state(rng, config.thresholds, full_rank=True)


def _counterexample_chunk(config: CampaignConfig, start: int, stop: int) -> CampaignSummary:
    th = config.thresholds
    n = stop - start
    stream = _STREAMS[Experiment.COUNTEREXAMPLE]
    diagnostics = EntropyDiagnostics()
    pairs: List[Tuple[ComplexMatrix, ComplexMatrix]] = []
    terms = np.empty((n, 3))
    priorities = np.empty(n)

    for pos, index in enumerate(range(start, stop)):
        rng = sample_rng(config.master_seed, stream, index)
        priorities[pos] = rng.random()
        rho = _draw_state(rng, th, full_rank=True)
        sigma = _counterexample_sigma(rng, config)
        g = gap_terms(rho, sigma, diagnostics, support_tol=th.support_tol)
        terms[pos] = (g.joint, g.margin_a, g.margin_b)
        pairs.append((rho, sigma))

    gaps = terms[:, 0] - terms[:, 1] - terms[:, 2]
    indices = np.arange(start, stop)

    def digest_of(pos: int) -> Dict[str, Any]:
        return _state_digest(int(indices[pos]), *pairs[pos])

    summary = _new_summary(config, n, COUNTEREXAMPLE_HEADER)
    summary.tally("delta_s", th.sign).update(gaps, indices, digest_of)
    summary.count("clamped_negatives", diagnostics.clamped_negatives)
    _record_superadditivity(summary, gaps, indices, digest_of, th)

    for pos in range(n):
        index = int(indices[pos])
        if summary.reservoir.accepts(priorities[pos], index):
            summary.reservoir.offer(priorities[pos], index, [index, float(gaps[pos]), *terms[pos].tolist()])
    return summary


def _orbit_chunk(config: CampaignConfig, start: int, stop: int) -> CampaignSummary:
    th = config.thresholds
    n = stop - start
    stream = _STREAMS[Experiment.ORBIT_VERIFY]
    summary = _new_summary(config, n, ORBIT_HEADER)
    lower = np.empty(n)
    upper = np.empty(n)
    coverage = np.empty(n)
    pairs = []

    for pos, index in enumerate(range(start, stop)):
        rng = sample_rng(config.master_seed, stream, index)
        priority = rng.random()
        dim = th.dims[index % len(th.dims)]
        rho = sample_random_density(dim, rng)
        sigma = sample_random_density(dim, rng, require_full_rank=True, floor=th.full_rank_floor)
        pairs.append((rho, sigma))
        report = verify_orbit_interval(rho, sigma, th.haar_samples, rng, slack=th.interval_slack)

        lower[pos] = report.observed_min - report.min_value
        upper[pos] = report.max_value - report.observed_max
        coverage[pos] = report.coverage
        summary.count("haar_evaluations", report.n_samples)
        summary.count("interval_violations", report.violations)
        if not report.attained:
            summary.count("unattained_extremes")
        if report.violations or not report.attained:
            summary.record(FindingRecord(
                FindingKind.INTERVAL_VIOLATION, index, report.to_dict(), _state_digest(index, rho, sigma),
            ))
        if summary.reservoir.accepts(priority, index):
            summary.reservoir.offer(priority, index, [
                index, dim, report.min_value, report.max_value, report.observed_min, report.observed_max,
                report.violations, report.aligned_min, report.aligned_max, report.coverage,
            ])

    indices = np.arange(start, stop)

    def digest_of(pos: int) -> Dict[str, Any]:
        return _state_digest(int(indices[pos]), *pairs[pos])

    summary.tally("lower_margin", th.sign).update(lower, indices, digest_of)
    summary.tally("upper_margin", th.sign).update(upper, indices, digest_of)
    summary.tally("coverage", th.sign).update(coverage, indices, digest_of)
    return summary


def _local_chunk(config: CampaignConfig, start: int, stop: int) -> CampaignSummary:
    th = config.thresholds
    n = stop - start
    stream = _STREAMS[Experiment.LOCAL_OPT]
    opt = OptimizerConfig(
        mode=Mode.MAXIMIZE,
        manifold=Manifold.LOCAL_PRODUCT,
        max_iters=th.optimizer_iters,
        restarts=th.restarts,
        objective=config.objective,
    )
    summary = _new_summary(config, n, LOCAL_HEADER)
    gaps = np.empty(n)
    headroom = np.empty(n)
    pairs = []

    for pos, index in enumerate(range(start, stop)):
        rng = sample_rng(config.master_seed, stream, index)
        priority = rng.random()
        rho = _draw_state(rng, th)
        sigma = _draw_state(rng, th, full_rank=True)
        pairs.append((rho, sigma))

        trace = optimize(rho, sigma, opt, rng)
        evidence = local_evidence(rho, sigma, *trace.factors)
        extremes = orbit_extremes(Spectrum.of(rho), Spectrum.of(sigma))
        gaps[pos] = evidence.gap
        headroom[pos] = extremes.max_value - evidence.joint

        if trace.converged:
            summary.count("converged")
        if headroom[pos] < -th.interval_slack:
            summary.count("interval_violations")
            summary.record(FindingRecord(
                FindingKind.INTERVAL_VIOLATION, index,
                {"local_max": evidence.joint, "orbit_max": extremes.max_value},
                _state_digest(index, rho, sigma),
            ))
        if classify_sign(evidence.gap, th.sign) is Sign.NEGATIVE:
            logger.warning("local inequality fails at best pair for sample %d (gap %.3e)", index, evidence.gap)
            summary.record(FindingRecord(
                FindingKind.LOCAL_SHORTFALL, index,
                {"joint": evidence.joint, "margin_a": evidence.margin_a, "margin_b": evidence.margin_b},
                _state_digest(index, rho, sigma),
            ))
        if summary.reservoir.accepts(priority, index):
            summary.reservoir.offer(priority, index, [
                index, evidence.joint, extremes.min_value, extremes.max_value,
                evidence.margin_a, evidence.margin_b, evidence.gap, trace.converged,
            ])

    indices = np.arange(start, stop)

    def digest_of(pos: int) -> Dict[str, Any]:
        return _state_digest(int(indices[pos]), *pairs[pos])

    summary.tally("local_gap", th.sign).update(gaps, indices, digest_of)
    summary.tally("orbit_headroom", th.sign).update(headroom, indices, digest_of)
    return summary


_CHUNK_FUNCTIONS = {
    Experiment.SPECTRA_DELTAS: _spectra_chunk,
    Experiment.STATE_DELTAS: _state_chunk,
    Experiment.ORBIT_VERIFY: _orbit_chunk,
    Experiment.COUNTEREXAMPLE: _counterexample_chunk,
    Experiment.LOCAL_OPT: _local_chunk,
}


def _run_chunks(config: CampaignConfig) -> CampaignSummary:
    """Fan the sample range out over chunks and merge the partial summaries."""
    config.validate()
    chunk_fn = _CHUNK_FUNCTIONS[config.experiment]
    size = _CHUNK_SIZES[config.experiment]
    starts = list(range(0, config.n_samples, size))
    stops = [min(s + size, config.n_samples) for s in starts]

    summary = _new_summary(config, 0, [])
    t0 = time.time()
    if config.workers == 1 or len(starts) == 1:
        for partial in map(chunk_fn, repeat(config), starts, stops):
            summary = summary.merge(partial)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for partial in pool.map(chunk_fn, repeat(config), starts, stops):
                summary = summary.merge(partial)
    summary.runtime_seconds = time.time() - t0
    logger.info("%s: %d samples in %.1fs", config.experiment.value, summary.n_samples, summary.runtime_seconds)
    return summary


def run_spectra_deltas(config: CampaignConfig) -> CampaignSummary:
    """Δ quantities over admissible spectrum triples (ρ side free, σ side full-rank)."""
    summary = _run_chunks(config)
    n = summary.n_samples
    summary.metrics["modified_holds_fraction"] = 1.0 - summary.counters.get("modified_failures", 0) / n
    return summary


def run_state_deltas(config: CampaignConfig) -> CampaignSummary:
    """Spectral Δ bounds against △S for Ginibre two-qubit pairs."""
    summary = _run_chunks(config)
    summary.metrics["superadditivity_violation_fraction"] = summary.tallies["delta_s"].negative_fraction
    return summary


def refine_counterexample(
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
    steps: int,
    rng: np.random.Generator,
    sigma_mixed: bool = False,
    floor: float = FULL_RANK_FLOOR,
) -> Tuple[ComplexMatrix, ComplexMatrix, float, int]:
    """Hill-climb on △S by convex mixing with fresh Ginibre states.

    Each step moves ρ, or σ (kept full-rank), towards a new random state by
    a shrinking weight and keeps the move only if △S decreases. Returns the
    refined pair, its △S and the number of accepted moves.
    """
    best = delta_s(rho, sigma)
    accepted = 0
    for step in range(steps):
        weight = rng.uniform(0.0, 0.5) * (1.0 - step / steps)
        target = sample_random_density(4, rng)
        move_sigma = (not sigma_mixed) and rng.random() < 0.5
        if move_sigma:
            cand_rho, cand_sigma = rho, (1.0 - weight) * sigma + weight * target
            if np.linalg.eigvalsh(cand_sigma)[0] <= floor:
                continue
        else:
            cand_rho, cand_sigma = (1.0 - weight) * rho + weight * target, sigma
        value = delta_s(cand_rho, cand_sigma)
        if value < best:
            rho, sigma, best = cand_rho, cand_sigma, value
            accepted += 1
    return rho, sigma, best, accepted


def run_counterexample_search(config: CampaignConfig) -> CampaignSummary:
    """Random search for the most negative △S, then a seeded refinement.

    ``metrics["best"]`` holds the refined pair as a fixture dictionary.
    """
    summary = _run_chunks(config)
    tally = summary.tallies["delta_s"]
    digest = tally.min_input_digest
    rho, sigma = matrix_from_hex(digest["rho"]), matrix_from_hex(digest["sigma"])

    rng = sample_rng(config.master_seed, REFINE_STREAM, 0)
    rho, sigma, best, accepted = refine_counterexample(
        rho, sigma, config.thresholds.refine_steps, rng,
        sigma_mixed=config.sigma_mixed, floor=config.thresholds.full_rank_floor,
    )
    fixture = CounterexampleFixture(
        rho=rho, sigma=sigma, delta_s=best, master_seed=config.master_seed, index=tally.min_index,
    )
    summary.metrics.update({
        "search_best_delta_s": tally.min_value,
        "best_delta_s": best,
        "refinement_accepted": accepted,
        "sigma_mixed": config.sigma_mixed,
        "best": fixture.to_dict(),
    })
    if best < -config.thresholds.strong_violation:
        logger.info("superadditivity counterexample found: △S = %.6g", best)
    return summary


def run_orbit_verify(config: CampaignConfig) -> CampaignSummary:
    """Haar-sampled orbit values against the analytic interval, dims cycling."""
    summary = _run_chunks(config)
    summary.metrics["dims"] = list(config.thresholds.dims)
    summary.metrics["haar_samples_per_pair"] = config.thresholds.haar_samples
    return summary


def run_local_opt(config: CampaignConfig) -> CampaignSummary:
    """Best local-unitary value per instance and the local inequality there."""
    summary = _run_chunks(config)
    gap = summary.tallies["local_gap"]
    summary.metrics["objective"] = config.objective.value
    summary.metrics["local_inequality_satisfied"] = gap.zero + gap.positive
    summary.metrics["restarts"] = config.thresholds.restarts
    return summary


RUNNERS: Dict[Experiment, Callable[[CampaignConfig], CampaignSummary]] = {
    Experiment.SPECTRA_DELTAS: run_spectra_deltas,
    Experiment.STATE_DELTAS: run_state_deltas,
    Experiment.ORBIT_VERIFY: run_orbit_verify,
    Experiment.COUNTEREXAMPLE: run_counterexample_search,
    Experiment.LOCAL_OPT: run_local_opt,
}


def invariant_failures(summary: CampaignSummary) -> Dict[str, int]:
    """Non-zero counters among ``INVARIANT_COUNTERS``."""
    return {name: summary.counters[name] for name in INVARIANT_COUNTERS if summary.counters.get(name, 0)}


def recheck_fixture(path: str, tol: float = 1e-12) -> Tuple[CounterexampleFixture, float]:
    """Recompute △S of a pinned fixture.

    Raises:
        InvariantViolation: a stored matrix is not a density matrix, or the
            value drifted by more than ``tol``.
    """
    fixture = CounterexampleFixture.load(path)
    for name, m in (("rho", fixture.rho), ("sigma", fixture.sigma)):
        if not is_density_matrix(m):
            raise InvariantViolation(
                f"fixture {path}: {name} is not a density matrix",
                digest={"seed": fixture.master_seed, "index": fixture.index},
            )
    value = delta_s(fixture.rho, fixture.sigma)
    drift = 0.0 if value == fixture.delta_s else abs(value - fixture.delta_s)
    if not drift <= tol:
        raise InvariantViolation(
            f"fixture {path} drifted: stored {fixture.delta_s!r}, recomputed {value!r}",
            digest={"seed": fixture.master_seed, "index": fixture.index},
        )
    return fixture, value


# Quantities whose negative count is expected to be zero.
_EXPECTED_NONNEGATIVE = {"delta", "delta_mix", "lower_margin", "upper_margin", "orbit_headroom", "local_gap"}


class CampaignRunner:
    """Runs one configured campaign and writes its artifacts."""

    def __init__(self, config: CampaignConfig):
        self.config = config.validate()
        self.output_dir = Path(config.output_dir)

    def run(self) -> CampaignSummary:
        return RUNNERS[self.config.experiment](self.config)

    def save(self, summary: CampaignSummary) -> Dict[str, Path]:
        """Write summary, samples, run log, findings and (for searches) the fixture."""
        out = self.output_dir
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CampaignIOError(f"could not create output directory ({e.strerror})", str(out)) from e

        paths = {"summary": out / "summary.json", "run": out / "run.json"}
        summary.save(str(paths["summary"]))
        if self.config.output_format == "csv":
            paths["samples"] = out / "samples.csv"
            write_samples_csv(paths["samples"], summary.header, summary.rows())
        else:
            paths["samples"] = out / "samples.json"
            write_samples_json(paths["samples"], summary.header, summary.rows())

        RunLog(
            experiment=summary.experiment,
            runtime_seconds=summary.runtime_seconds,
            workers=self.config.workers,
            host=get_hostname(),
            user=get_username(),
        ).save(str(paths["run"]))

        if summary.findings:
            paths["findings"] = out / "findings.jsonl"
            FindingStore(paths["findings"]).append_many([
                FindingEntry.from_record(f, summary.experiment, summary.master_seed) for f in summary.findings
            ])
        if "best" in summary.metrics:
            paths["fixture"] = out / "fixture.json"
            CounterexampleFixture.from_dict(summary.metrics["best"]).save(str(paths["fixture"]))
        return paths

    def print_summary(self, summary: CampaignSummary) -> None:
        print("\n" + "=" * 60)
        print(f"SUMMARY  {summary.experiment}  (seed {summary.master_seed}, {summary.n_samples:,} samples)")
        print("=" * 60)
        print(f"  {'quantity':<16} {'negative':>9} {'zero':>9} {'positive':>9}   {'min':>12}   {'max':>12}")
        for name, tally in sorted(summary.tallies.items()):
            if name in _EXPECTED_NONNEGATIVE:
                symbol = "✗" if tally.negative else "✓"
            else:
                symbol = "·"
            print(f"{symbol} {name:<16} {tally.negative:>9,} {tally.zero:>9,} {tally.positive:>9,}   "
                  f"{tally.min_value:>12.5g}   {tally.max_value:>12.5g}")
            if tally.negative:
                print(f"    negative fraction {tally.negative_fraction:.6f}")

        for name in INVARIANT_COUNTERS:
            if name in summary.counters:
                symbol = "✗" if summary.counters[name] else "✓"
                print(f"{symbol} {name}: {summary.counters[name]}")
        for kind in FindingKind:
            count = summary.finding_count(kind)
            if count:
                print(f"⚠ {kind.value}: {count}")
        if "best_delta_s" in summary.metrics:
            print(f"Best △S: {summary.metrics['best_delta_s']:.10g} "
                  f"(search {summary.metrics['search_best_delta_s']:.10g})")
        print(f"Duration: {summary.runtime_seconds:.1f}s")


def run_campaign(config: CampaignConfig, save_results: bool = True) -> CampaignSummary:
    """Convenience function: run, optionally save, and print the summary."""
    runner = CampaignRunner(config)
    summary = runner.run()
    if save_results:
        paths = runner.save(summary)
        print(f"\nResults saved to: {runner.output_dir}/")
        for name, path in paths.items():
            print(f"  {name}: {path.name}")
    runner.print_summary(summary)
    return summary
