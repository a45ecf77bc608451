from __future__ import annotations

"""Run journal: one JSON line per CLI event, each row chained to the previous row's digest."""

import hashlib
import json
import platform
import subprocess
import sys
import uuid
from collections import Counter
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version as package_version
from pathlib import Path
from typing import Any

UTC = timezone.utc


SCHEMA_VERSION = "0.1"
VALID_EVENT_TYPES = frozenset(
    {
        "run.started",
        "run.completed",
        "run.failed",
        "check.failed",
        "solver.nonconverged",
        "journal.verified",
    }
)
FAILURE_EVENT_TYPES = frozenset({"run.failed", "solver.nonconverged"})
GENESIS_PREV_HASH = "0" * 64
FALLBACK_VERSION = "0.1.0"


def _timestamp() -> str:
    return datetime.now(tz=UTC).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def canonical_json(value: Any) -> str:
    """Compact sorted JSON; NaN and infinities are refused."""

    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def event_hash(prev_hash: str, row: dict[str, Any]) -> str:
    """sha256 of ``prev_hash:canonical row``, with both hash fields left out of the row."""

    body = {key: value for key, value in row.items() if key not in ("prev_hash", "event_hash")}
    return hashlib.sha256(f"{prev_hash}:{canonical_json(body)}".encode("utf-8")).hexdigest()


def _git_revision(root: Path) -> str | None:
    try:
        completed = subprocess.run(  # noqa: S603
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=root,
            check=False,
            capture_output=True,
            text=True,
            timeout=2,
        )
    except (OSError, subprocess.SubprocessError):
        return None
    revision = completed.stdout.strip()
    return revision if completed.returncode == 0 and revision else None


def _installed_version() -> str:
    try:
        return package_version("warpsol")
    except PackageNotFoundError:
        return FALLBACK_VERSION


@dataclass(frozen=True)
class BuildInfo:
    """Provenance stamped on journal rows and report envelopes. No timestamps, so reports stay reproducible."""

    version: str
    git_sha: str | None
    python_version: str
    platform: str

    @classmethod
    def detect(cls, repo_root: Path | None = None) -> "BuildInfo":
        return cls(
            version=_installed_version(),
            git_sha=_git_revision(repo_root) if repo_root is not None else None,
            python_version=platform.python_version(),
            platform=platform.platform(),
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ChainVerdict:
    ok: bool
    checked_events: int
    broken_index: int | None = None
    reason: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class RunJournal:
    """Journal of CLI runs below ``events_path``.

    Appending never raises: a row that cannot be written is reported on
    stderr and the run carries on.
    """

    def __init__(self, events_path: Path, build: BuildInfo | None = None) -> None:
        self.events_path = events_path
        self.events_path.parent.mkdir(parents=True, exist_ok=True)
        self.build = build or BuildInfo.detect()

    def _lines(self) -> list[str]:
        if not self.events_path.exists():
            return []
        return [line for line in (raw.strip() for raw in self.events_path.read_text(encoding="utf-8").splitlines()) if line]

    def _previous_hash(self) -> str:
        lines = self._lines()
        if not lines:
            return GENESIS_PREV_HASH
        tail = json.loads(lines[-1])
        if "event_hash" not in tail:
            raise ValueError("last journal row has no event_hash; move the journal aside before appending")
        return str(tail["event_hash"])

    def log_event(self, event_type: str, *, trace_id: str, data: dict[str, Any]) -> None:
        try:
            if event_type not in VALID_EVENT_TYPES:
                raise ValueError(f"unknown event type {event_type!r}")
            prev_hash = self._previous_hash()
            row: dict[str, Any] = {
                "schema_version": SCHEMA_VERSION,
                "event_id": str(uuid.uuid4()),
                "ts": _timestamp(),
                "event_type": event_type,
                "trace_id": trace_id,
                "build": self.build.to_dict(),
                "data": data,
                "prev_hash": prev_hash,
            }
            row["event_hash"] = event_hash(prev_hash, row)
            line = canonical_json(row)
            with self.events_path.open("a", encoding="utf-8", newline="\n") as handle:
                handle.write(line + "\n")
        except Exception as exc:  # noqa: BLE001
            print(f"[journal] failed to append event: {exc}", file=sys.stderr)

    def iter_events(self) -> list[dict[str, Any]]:
        """Parsed rows; unreadable lines are skipped here and flagged by `verify_chain`."""

        events: list[dict[str, Any]] = []
        for line in self._lines():
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(row, dict):
                events.append(row)
        return events

    def status(self) -> dict[str, Any]:
        events = self.iter_events()
        counts = Counter(str(event.get("event_type")) for event in events)
        last = events[-1] if events else {}
        return {
            "events_path": str(self.events_path),
            "event_count": len(events),
            "by_type": dict(sorted(counts.items())),
            "failed_runs": sum(counts[name] for name in FAILURE_EVENT_TYPES),
            "last_ts": last.get("ts"),
            "last_trace_id": last.get("trace_id"),
        }

    def _verdict(self) -> ChainVerdict:
        expected = GENESIS_PREV_HASH
        for index, line in enumerate(self._lines()):
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                return ChainVerdict(False, index, index, "invalid_json_line")
            if not isinstance(row, dict) or "prev_hash" not in row or "event_hash" not in row:
                return ChainVerdict(False, index, index, "missing_hash_fields")
            if str(row["prev_hash"]) != expected:
                return ChainVerdict(False, index, index, "prev_hash_mismatch")
            if str(row["event_hash"]) != event_hash(expected, row):
                return ChainVerdict(False, index, index, "event_hash_mismatch")
            expected = str(row["event_hash"])
        return ChainVerdict(True, len(self._lines()))

    def verify_chain(self) -> dict[str, Any]:
        """Walk the chain from the genesis hash; the first broken row ends the walk."""

        return self._verdict().to_dict()
