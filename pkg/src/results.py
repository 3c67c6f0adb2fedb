"""Result types, sign classification and artifact writers for campaigns."""

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CampaignIOError, ConfigError

SIGN_THRESHOLD = 1e-12


class ExitCode(Enum):
    """Process exit codes of the CLI."""
    OK = 0
    INVALID_CONFIG = 2
    IO_FAILURE = 3
    INTERNAL_ASSERTION = 4


class Sign(Enum):
    NEGATIVE = "negative"
    ZERO = "zero"        # |value| <= threshold
    POSITIVE = "positive"


class FindingKind(Enum):
    """Classification of recorded anomalies."""
    POTENTIAL_COUNTEREXAMPLE = "POTENTIAL_COUNTEREXAMPLE"    # Δ or Δ_mix below zero
    SUPERADDITIVITY_VIOLATION = "SUPERADDITIVITY_VIOLATION"  # △S below zero
    LOCAL_SHORTFALL = "LOCAL_SHORTFALL"                      # best local pair fails the local inequality
    ORDERING_VIOLATION = "ORDERING_VIOLATION"
    SANDWICH_VIOLATION = "SANDWICH_VIOLATION"
    INTERVAL_VIOLATION = "INTERVAL_VIOLATION"


def sign_codes(values: Any, threshold: float = SIGN_THRESHOLD) -> np.ndarray:
    """-1, 0 or +1 per entry; |value| <= threshold counts as zero."""
    values = np.asarray(values, dtype=float)
    return np.where(values < -threshold, -1, np.where(values > threshold, 1, 0))


_SIGN_BY_CODE = {-1: Sign.NEGATIVE, 0: Sign.ZERO, 1: Sign.POSITIVE}


def classify_sign(value: float, threshold: float = SIGN_THRESHOLD) -> Sign:
    return _SIGN_BY_CODE[int(sign_codes(value, threshold))]


@dataclass
class QuantityTally:
    """Sign counts and extremes of one scalar over a set of samples.

    Extremes keep the input digest of the sample that produced them; ties go
    to the smaller sample index so merging is order-independent.
    """
    threshold: float = SIGN_THRESHOLD
    negative: int = 0
    zero: int = 0
    positive: int = 0
    min_value: float = math.inf
    min_index: Optional[int] = None
    min_input_digest: Optional[Dict[str, Any]] = None
    max_value: float = -math.inf
    max_index: Optional[int] = None
    max_input_digest: Optional[Dict[str, Any]] = None

    @property
    def total(self) -> int:
        return self.negative + self.zero + self.positive

    @property
    def negative_fraction(self) -> float:
        return self.negative / self.total if self.total else 0.0

    def update(
        self,
        values: np.ndarray,
        indices: Sequence[int],
        digest_of: Callable[[int], Dict[str, Any]],
    ) -> None:
        """Fold in a batch; ``digest_of(position)`` describes row ``position``.

        ``indices`` must be increasing so that ``argmin``/``argmax`` pick the
        smallest index among ties.
        """
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return
        codes = sign_codes(values, self.threshold)
        neg = int(np.count_nonzero(codes < 0))
        pos = int(np.count_nonzero(codes > 0))
        self.negative += neg
        self.positive += pos
        self.zero += values.size - neg - pos

        lo = int(np.argmin(values))
        if self._beats_min(float(values[lo]), int(indices[lo])):
            self.min_value, self.min_index = float(values[lo]), int(indices[lo])
            self.min_input_digest = digest_of(lo)
        hi = int(np.argmax(values))
        if self._beats_max(float(values[hi]), int(indices[hi])):
            self.max_value, self.max_index = float(values[hi]), int(indices[hi])
            self.max_input_digest = digest_of(hi)

    def _beats_min(self, value: float, index: int) -> bool:
        if self.min_index is None or value < self.min_value:
            return True
        return value == self.min_value and index < self.min_index

    def _beats_max(self, value: float, index: int) -> bool:
        if self.max_index is None or value > self.max_value:
            return True
        return value == self.max_value and index < self.max_index

    def merge(self, other: "QuantityTally") -> "QuantityTally":
        merged = QuantityTally(
            threshold=self.threshold,
            negative=self.negative + other.negative,
            zero=self.zero + other.zero,
            positive=self.positive + other.positive,
            min_value=self.min_value,
            min_index=self.min_index,
            min_input_digest=self.min_input_digest,
            max_value=self.max_value,
            max_index=self.max_index,
            max_input_digest=self.max_input_digest,
        )
        if other.min_index is not None and merged._beats_min(other.min_value, other.min_index):
            merged.min_value, merged.min_index = other.min_value, other.min_index
            merged.min_input_digest = other.min_input_digest
        if other.max_index is not None and merged._beats_max(other.max_value, other.max_index):
            merged.max_value, merged.max_index = other.max_value, other.max_index
            merged.max_input_digest = other.max_input_digest
        return merged

    def to_dict(self) -> Dict[str, Any]:
        return {
            "negative": self.negative,
            "zero": self.zero,
            "positive": self.positive,
            "negative_fraction": self.negative_fraction,
            "min_value": self.min_value if self.min_index is not None else None,
            "min_index": self.min_index,
            "min_input_digest": self.min_input_digest,
            "max_value": self.max_value if self.max_index is not None else None,
            "max_index": self.max_index,
            "max_input_digest": self.max_input_digest,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], threshold: float = SIGN_THRESHOLD) -> "QuantityTally":
        return cls(
            threshold=threshold,
            negative=data["negative"],
            zero=data["zero"],
            positive=data["positive"],
            min_value=data["min_value"] if data.get("min_value") is not None else math.inf,
            min_index=data.get("min_index"),
            min_input_digest=data.get("min_input_digest"),
            max_value=data["max_value"] if data.get("max_value") is not None else -math.inf,
            max_index=data.get("max_index"),
            max_input_digest=data.get("max_input_digest"),
        )


class RowReservoir:
    """Bottom-k sample of rows keyed by a per-index priority.

    The kept set depends only on the (priority, index) pairs offered, never on
    the order or grouping in which they arrive.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        # max-heap on (priority, index) via negation
        self._heap: List[Tuple[float, int, list]] = []

    def __len__(self) -> int:
        return len(self._heap)

    def accepts(self, priority: float, index: int) -> bool:
        """Whether ``offer`` would keep this key right now."""
        if self.capacity <= 0:
            return False
        if len(self._heap) < self.capacity:
            return True
        return (priority, index) < (-self._heap[0][0], -self._heap[0][1])

    def offer(self, priority: float, index: int, row: list) -> None:
        if not self.accepts(priority, index):
            return
        item = (-priority, -index, row)
        if len(self._heap) < self.capacity:
            heapq.heappush(self._heap, item)
        else:
            heapq.heapreplace(self._heap, item)

    def merge(self, other: "RowReservoir") -> "RowReservoir":
        merged = RowReservoir(self.capacity)
        for neg_p, neg_i, row in self._heap + other._heap:
            merged.offer(-neg_p, -neg_i, row)
        return merged

    def rows(self) -> List[list]:
        """Kept rows ordered by sample index."""
        return [row for _, _, row in sorted(self._heap, key=lambda item: -item[1])]


@dataclass
class FindingRecord:
    """One anomaly found while sampling, with everything needed to replay it."""
    kind: FindingKind
    index: int
    values: Dict[str, float]
    digest: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "index": self.index,
            "values": self.values,
            "digest": self.digest,
        }


@dataclass
class CampaignSummary:
    """Aggregated outcome of a campaign; merging partial summaries is
    associative and commutative."""
    experiment: str
    master_seed: int
    n_samples: int = 0
    tallies: Dict[str, QuantityTally] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    findings: List[FindingRecord] = field(default_factory=list)
    header: List[str] = field(default_factory=list)
    reservoir: Optional[RowReservoir] = None
    runtime_seconds: float = 0.0

    def tally(self, name: str, threshold: float = SIGN_THRESHOLD) -> QuantityTally:
        if name not in self.tallies:
            self.tallies[name] = QuantityTally(threshold=threshold)
        return self.tallies[name]

    def count(self, name: str, amount: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + int(amount)

    def record(self, finding: FindingRecord) -> None:
        self.count(f"finding:{finding.kind.value}")
        self.findings.append(finding)

    def finding_count(self, kind: FindingKind) -> int:
        return self.counters.get(f"finding:{kind.value}", 0)

    def merge(self, other: "CampaignSummary") -> "CampaignSummary":
        if (self.experiment, self.master_seed) != (other.experiment, other.master_seed):
            raise ConfigError("cannot merge summaries of different campaigns")
        tallies = dict(self.tallies)
        for name, tally in other.tallies.items():
            tallies[name] = tallies[name].merge(tally) if name in tallies else tally
        counters = dict(self.counters)
        for name, value in other.counters.items():
            counters[name] = counters.get(name, 0) + value
        if self.reservoir is None:
            reservoir = other.reservoir
        elif other.reservoir is None:
            reservoir = self.reservoir
        else:
            reservoir = self.reservoir.merge(other.reservoir)
        return CampaignSummary(
            experiment=self.experiment,
            master_seed=self.master_seed,
            n_samples=self.n_samples + other.n_samples,
            tallies=tallies,
            counters=counters,
            metrics={**self.metrics, **other.metrics},
            findings=sorted(self.findings + other.findings, key=lambda f: (f.index, f.kind.value)),
            header=self.header or other.header,
            reservoir=reservoir,
            runtime_seconds=self.runtime_seconds + other.runtime_seconds,
        )

    def rows(self) -> List[list]:
        return self.reservoir.rows() if self.reservoir is not None else []

    def to_dict(self) -> Dict[str, Any]:
        """Deterministic content only; runtime lives in the run log."""
        return {
            "experiment": self.experiment,
            "seed": self.master_seed,
            "n_samples": self.n_samples,
            "quantities": {name: t.to_dict() for name, t in sorted(self.tallies.items())},
            "counters": dict(sorted(self.counters.items())),
            "metrics": self.metrics,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def save(self, path: str) -> None:
        _write_text(Path(path), self.to_json() + "\n")

    @classmethod
    def load(cls, path: str) -> "CampaignSummary":
        data = _read_json(Path(path))
        return cls(
            experiment=data["experiment"],
            master_seed=data["seed"],
            n_samples=data["n_samples"],
            tallies={k: QuantityTally.from_dict(v) for k, v in data.get("quantities", {}).items()},
            counters=dict(data.get("counters", {})),
            metrics=dict(data.get("metrics", {})),
        )


@dataclass
class RunLog:
    """Non-deterministic facts about one invocation."""
    experiment: str
    runtime_seconds: float
    workers: int
    host: str
    user: str
    timestamp: datetime = field(default_factory=datetime.utcnow)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "runtime_seconds": round(self.runtime_seconds, 3),
            "workers": self.workers,
            "host": self.host,
            "user": self.user,
            "timestamp": self.timestamp.isoformat() + "Z",
        }

    def save(self, path: str) -> None:
        _write_text(Path(path), json.dumps(self.to_dict(), indent=2) + "\n")


def format_value(value: Any) -> str:
    """17 significant digits for floats; integers and flags as-is."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_samples_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        raise CampaignIOError(f"could not write samples ({e.strerror})", str(path)) from e


def read_samples_csv(path: Path) -> Tuple[List[str], List[List[float]]]:
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            return header, [[float(v) for v in row] for row in reader if row]
    except OSError as e:
        raise CampaignIOError(f"could not read samples ({e.strerror})", str(path)) from e


def write_samples_json(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    records = [dict(zip(header, (_json_number(v) for v in row))) for row in rows]
    _write_text(path, json.dumps(records, indent=2, sort_keys=True) + "\n")


def _json_number(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def matrix_to_hex(m: np.ndarray) -> Dict[str, List[List[str]]]:
    """Exact encoding of a complex matrix as ``float.hex`` strings."""
    m = np.asarray(m, dtype=complex)
    return {
        "re": [[float(x).hex() for x in row] for row in m.real],
        "im": [[float(x).hex() for x in row] for row in m.imag],
    }


def matrix_from_hex(data: Dict[str, List[List[str]]]) -> np.ndarray:
    re = np.array([[float.fromhex(x) for x in row] for row in data["re"]])
    im = np.array([[float.fromhex(x) for x in row] for row in data["im"]])
    return re + 1j * im


@dataclass
class CounterexampleFixture:
    """A pinned pair (ρ_AB, σ_AB) with its stored △S."""
    rho: np.ndarray
    sigma: np.ndarray
    delta_s: float
    master_seed: int
    index: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rho": matrix_to_hex(self.rho),
            "sigma": matrix_to_hex(self.sigma),
            "delta_s": float(self.delta_s).hex(),
            "delta_s_decimal": format_value(self.delta_s),
            "seed": self.master_seed,
            "index": self.index,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CounterexampleFixture":
        return cls(
            rho=matrix_from_hex(data["rho"]),
            sigma=matrix_from_hex(data["sigma"]),
            delta_s=float.fromhex(data["delta_s"]),
            master_seed=data["seed"],
            index=data["index"],
        )

    def save(self, path: str) -> None:
        _write_text(Path(path), json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str) -> "CounterexampleFixture":
        return cls.from_dict(_read_json(Path(path)))


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(text)
    except OSError as e:
        raise CampaignIOError(f"could not write ({e.strerror})", str(path)) from e


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except OSError as e:
        raise CampaignIOError(f"could not read ({e.strerror})", str(path)) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
