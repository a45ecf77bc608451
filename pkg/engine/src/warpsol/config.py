from __future__ import annotations

"""Run configuration: flat YAML sections validated by pydantic, CLI flags on top."""

import math
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .geometry import SolitonContext, WarpedSpace
from .profiles import CATALOG_NAMES, WarpingProfile


Command = Literal["leaves", "flow", "shoot", "translate", "verify", "spectrum"]
SOLITON_COMMANDS = ("leaves", "shoot", "spectrum")
SECTION_NAMES = ("profile", "context", "leaves", "flow", "shoot", "translate", "verify", "spectrum")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProfileSection(_Section):
    """Catalog name or `custom` with expression strings for h (and optionally h1, h2)."""

    name: str = "euclidean_cone"
    h: str | None = None
    h1: str | None = None
    h2: str | None = None
    interval: list[float] | None = Field(default=None, min_length=2, max_length=2)
    fiber_curvature: float | None = None

    @model_validator(mode="after")
    def _check_name(self) -> "ProfileSection":
        if self.name == "custom":
            if not self.h or self.interval is None:
                raise ValueError("custom profiles need an expression h and an interval")
        elif self.name not in CATALOG_NAMES:
            raise ValueError(f"unknown profile {self.name!r}; expected one of {', '.join(CATALOG_NAMES)} or custom")
        elif self.h or self.h1 or self.h2:
            raise ValueError("expressions are only accepted for custom profiles")
        return self


class ContextSection(_Section):
    m: int = Field(default=2, ge=1)
    n: int | None = Field(default=None, ge=1)
    c: float = -1.0
    t0: float | None = None


class LeavesSection(_Section):
    bracket: list[float] | None = Field(default=None, min_length=2, max_length=2)


class FlowSection(_Section):
    t_init: float = 1.0
    tau_lo: float = 0.0
    tau_hi: float = 0.1
    step: float = Field(default=1e-3, gt=0.0)


class ShootSection(_Section):
    launch: Literal["axis", "free"] = "axis"
    x0: float = 0.0
    r0: float = 0.0
    theta0: float = math.pi / 2
    step: float = Field(default=1e-3, gt=0.0)
    max_length: float = Field(default=10.0, gt=0.0)
    axis_stop: float = Field(default=1e-2, gt=0.0)
    space_form: bool = False


class TranslateSection(_Section):
    d: int = Field(default=1, ge=1, le=2)
    N: int = Field(default=400, ge=5)
    domain: Literal["grimreaper", "dirichlet", "periodic"] = "grimreaper"
    lo: float = 0.0
    hi: float = 1.0
    tol: float = Field(default=1e-10, gt=0.0)
    max_iterations: int = Field(default=50, ge=1)
    horizon: float = Field(default=0.0, ge=0.0)
    dtau: float = Field(default=1e-5, gt=0.0)


class VerifySection(_Section):
    suite: Literal["exact", "discrete"] = "exact"
    workers: int = Field(default=4, ge=1)


class SpectrumSection(_Section):
    sample: Literal["sphere", "cylinder", "plane", "grimreaper", "shoot"] = "sphere"
    k: int = Field(default=3, ge=1)
    samples: int = Field(default=401, ge=8)
    N: int = Field(default=400, ge=5)
    length: float = Field(default=4.0, gt=0.0)


class RunConfig(_Section):
    command: Command
    profile: ProfileSection = Field(default_factory=ProfileSection)
    context: ContextSection = Field(default_factory=ContextSection)
    leaves: LeavesSection = Field(default_factory=LeavesSection)
    flow: FlowSection = Field(default_factory=FlowSection)
    shoot: ShootSection = Field(default_factory=ShootSection)
    translate: TranslateSection = Field(default_factory=TranslateSection)
    verify: VerifySection = Field(default_factory=VerifySection)
    spectrum: SpectrumSection = Field(default_factory=SpectrumSection)
    output_dir: str | None = None

    @model_validator(mode="after")
    def _check_soliton_constant(self) -> "RunConfig":
        if self.command in SOLITON_COMMANDS and self.context.c == 0.0:
            raise ValueError(f"{self.command} needs a nonzero soliton constant c")
        return self

    def warping_profile(self) -> WarpingProfile:
        section = self.profile
        interval = tuple(section.interval) if section.interval is not None else None
        if section.name == "custom":
            return WarpingProfile.from_expressions(
                section.h or "",
                interval,  # type: ignore[arg-type]
                h1=section.h1,
                h2=section.h2,
                fiber_curvature=section.fiber_curvature or 0.0,
            )
        return WarpingProfile.catalog(section.name, interval)  # type: ignore[arg-type]

    def space(self) -> WarpedSpace:
        profile = self.warping_profile()
        kappa = profile.fiber_curvature if self.profile.fiber_curvature is None else self.profile.fiber_curvature
        return WarpedSpace(profile, float(kappa), self.context.n or self.context.m)

    def soliton_context(self) -> SolitonContext:
        space = self.space()
        t0 = self.context.t0
        if t0 is None:
            lo, hi = space.profile.interval_lo, space.profile.interval_hi
            t0 = lo if math.isfinite(lo) else (0.0 if hi > 0.0 else hi)
        return SolitonContext(space, self.context.c, self.context.m, float(t0))

    def echo(self) -> dict[str, Any]:
        """The sections that drive `command`, for the report envelope."""

        payload = self.model_dump(include={"command", "profile", "context", self.command}, exclude_none=True)
        return payload


def _describe(exc: ValidationError) -> list[dict[str, Any]]:
    return [
        {"loc": ".".join(str(part) for part in error["loc"]), "message": error["msg"]}
        for error in exc.errors(include_url=False)
    ]


def read_config_file(path: Path) -> dict[str, dict[str, Any]]:
    """Sections of a YAML config; each section a flat mapping of scalars or scalar lists."""

    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError("config_unreadable", f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("config_syntax", f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config_shape", f"config file {path} must be a mapping of sections")
    sections: dict[str, dict[str, Any]] = {}
    for name, body in data.items():
        if name not in SECTION_NAMES:
            raise ConfigError("unknown_section", f"unknown config section {name!r}", hint=f"expected: {', '.join(SECTION_NAMES)}")
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ConfigError("config_shape", f"section {name!r} must be a mapping")
        for key, value in body.items():
            scalars = value if isinstance(value, list) else [value]
            if any(isinstance(item, (dict, list)) for item in scalars):
                raise ConfigError("nested_config", f"{name}.{key} must be a scalar or a list of scalars")
        sections[name] = dict(body)
    return sections


def build_config(
    command: str,
    *,
    path: Path | None = None,
    overrides: dict[str, dict[str, Any]] | None = None,
    output_dir: str | None = None,
) -> RunConfig:
    """File values first, then non-None overrides per section."""

    sections = read_config_file(path) if path is not None else {}
    for section, values in (overrides or {}).items():
        merged = sections.setdefault(section, {})
        merged.update({key: value for key, value in values.items() if value is not None})
    try:
        return RunConfig(command=command, output_dir=output_dir, **sections)
    except ValidationError as exc:
        raise ConfigError("invalid_config", "configuration failed validation", errors=_describe(exc)) from exc
