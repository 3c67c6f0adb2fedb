"""Append-only store of findings (potential counterexamples and anomalies)."""

import getpass
import json
import socket
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import CampaignIOError
from .results import FindingKind, FindingRecord


def get_hostname() -> str:
    """Get short hostname of current machine."""
    return socket.gethostname().split('.')[0]


def get_username() -> str:
    """Get current username."""
    try:
        return getpass.getuser()
    except (KeyError, OSError):
        return "unknown"


@dataclass
class FindingEntry:
    """Single finding as stored on disk."""
    timestamp: str  # ISO format
    experiment: str
    seed: int
    index: int
    kind: str  # FindingKind value
    values: Dict[str, float]
    digest: Dict[str, Any]
    host: Optional[str] = None
    user: Optional[str] = None

    @classmethod
    def from_record(
        cls,
        record: FindingRecord,
        experiment: str,
        seed: int,
        timestamp: Optional[datetime] = None,
    ) -> "FindingEntry":
        return cls(
            timestamp=(timestamp or datetime.utcnow()).isoformat() + "Z",
            experiment=experiment,
            seed=seed,
            index=record.index,
            kind=record.kind.value,
            values=record.values,
            digest=record.digest,
            host=get_hostname(),
            user=get_username(),
        )

    def to_json_line(self) -> str:
        """Convert to JSON line (no newline)."""
        data = {
            "ts": self.timestamp,
            "x": self.experiment,
            "seed": self.seed,
            "i": self.index,
            "k": self.kind,
            "v": self.values,
            "in": self.digest,
        }
        if self.host:
            data["h"] = self.host
        if self.user:
            data["u"] = self.user
        return json.dumps(data, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "FindingEntry":
        """Parse from JSON line."""
        data = json.loads(line)
        return cls(
            timestamp=data["ts"],
            experiment=data["x"],
            seed=data["seed"],
            index=data["i"],
            kind=data["k"],
            values=data.get("v", {}),
            digest=data.get("in", {}),
            host=data.get("h"),
            user=data.get("u"),
        )


class FindingStore:
    """Append-only finding storage using JSONL format."""

    def __init__(self, findings_file: Path):
        self.findings_file = Path(findings_file)
        self.findings_file.parent.mkdir(parents=True, exist_ok=True)

    def append_many(self, entries: List[FindingEntry]) -> None:
        """Append multiple entries."""
        try:
            with open(self.findings_file, "a") as f:
                for entry in entries:
                    f.write(entry.to_json_line() + "\n")
        except OSError as e:
            raise CampaignIOError(f"could not append findings ({e.strerror})", str(self.findings_file)) from e

    def load(
        self,
        kind: Optional[FindingKind] = None,
        experiment: Optional[str] = None,
    ) -> List[FindingEntry]:
        """Load entries, optionally filtered by kind and experiment.

        Malformed lines are skipped.
        """
        if not self.findings_file.exists():
            return []

        entries = []
        with open(self.findings_file, "r") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = FindingEntry.from_json_line(line)
                except (json.JSONDecodeError, KeyError):
                    continue
                if kind and entry.kind != kind.value:
                    continue
                if experiment and entry.experiment != experiment:
                    continue
                entries.append(entry)
        return entries

    def counts(self) -> Dict[str, int]:
        """Number of stored findings per kind."""
        totals: Dict[str, int] = {}
        for entry in self.load():
            totals[entry.kind] = totals.get(entry.kind, 0) + 1
        return totals
