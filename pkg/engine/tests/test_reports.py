from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from warpsol.errors import ConfigError
from warpsol.journal import BuildInfo
from warpsol.reports import build_envelope, dumps, normalize, write_csv, write_report


BUILD = BuildInfo(version="0.1.0", git_sha="abc1234", python_version="3.11.9", platform="test")


@dataclass
class _Residual:
    sup: float

    def to_dict(self) -> dict[str, float]:
        return {"sup": self.sup}


def test_normalize_unwraps_numpy_and_objects() -> None:
    value = normalize({"a": np.float64(0.5), "b": np.arange(3), "c": _Residual(1e-12), "d": (np.bool_(True), float("inf"))})
    assert value == {"a": 0.5, "b": [0, 1, 2], "c": {"sup": 1e-12}, "d": [True, None]}
    assert isinstance(value["b"][0], int)


def test_dumps_is_sorted_and_exact() -> None:
    text = dumps({"b": 0.1, "a": [1, None], "c": {}})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.10000000000000001" in text
    assert json.loads(text) == {"a": [1, None], "b": 0.1, "c": {}}


def test_dumps_is_deterministic() -> None:
    payload = {"z": np.linspace(0.0, 1.0, 5), "y": {"k": 1.0 / 3.0}}
    assert dumps(payload) == dumps(dict(reversed(list(payload.items()))))


def test_write_report_envelope(tmp_path: Path) -> None:
    path = write_report(tmp_path / "reports" / "leaves.json", "leaves", {"command": "leaves"}, [{"t_bar": 1.5}], BUILD)
    envelope = json.loads(path.read_text(encoding="utf-8"))
    assert envelope["schema_version"] == "1.0"
    assert envelope["command"] == "leaves"
    assert envelope["build"]["git_sha"] == "abc1234"
    assert envelope["result"] == [{"t_bar": 1.5}]
    assert path.read_text(encoding="utf-8").endswith("}\n")


def test_envelope_rejects_unknown_commands() -> None:
    with pytest.raises(ConfigError, match="schema"):
        build_envelope("serve", {}, {}, BUILD)


def test_write_csv_uses_full_precision(tmp_path: Path) -> None:
    frame = pd.DataFrame({"s": [0.0, 1.0 / 3.0], "u": [1.0, 2.0]})
    path = write_csv(tmp_path / "csv" / "profile.csv", frame)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "s,u"
    assert lines[2] == "0.33333333333333331,2"
