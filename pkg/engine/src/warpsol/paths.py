from __future__ import annotations

import os
from pathlib import Path


DEFAULT_OUTPUT_DIRNAME = "warpsol-out"


def output_root() -> Path:
    configured = os.environ.get("WARPSOL_OUTPUT_DIR")
    if configured:
        return Path(configured).expanduser().resolve()
    return Path.cwd() / DEFAULT_OUTPUT_DIRNAME


def ensure_output_dirs(base: Path) -> dict[str, Path]:
    reports = base / "reports"
    csv_dir = base / "csv"
    journal = base / "journal"
    for path in (base, reports, csv_dir, journal):
        path.mkdir(parents=True, exist_ok=True)
    return {"base": base, "reports": reports, "csv": csv_dir, "journal": journal}
