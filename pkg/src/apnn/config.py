"""Run configuration: a TOML file with fixed sections, unknown keys rejected.

Sections: [problem] [method] [nets] [batches] [penalties] [training]
[quadrature] [reference].  Only [problem] and [method] are required.
"""
from __future__ import annotations

import json
import re
import sys
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError, MissingInputError
from .losses import BatchConfig, PenaltyConfig
from .training import TrainingConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(_Strict):
    id: Literal["landau", "bump_on_tail", "riemann", "mixing", "gravitational", "uq"]
    eps: float | None = Field(None, ge=0)
    t_final: float | None = Field(None, gt=0)
    eval_times: list[float] | None = None
    energy_times: list[float] | None = None
    uq_draws: int = Field(10_000, ge=1)


class MethodSection(_Strict):
    name: Literal["mm", "mc", "pinn"]


class NetsSection(_Strict):
    hidden: list[int] = Field(default_factory=lambda: [128] * 5)
    kinetic_hidden: list[int] | None = None
    dtype: Literal["float32", "float64"] = "float64"
    fourier_modes: int = Field(1, ge=0)  # 0 feeds raw x and enables the bc_* terms
    seed: int = 0

    @field_validator("hidden", "kinetic_hidden")
    @classmethod
    def _positive(cls, v):
        if v is not None and (not v or any(w < 1 for w in v)):
            raise ValueError("layer widths must be a non-empty list of positive integers")
        return v

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


class QuadratureSection(_Strict):
    n: int = Field(32, ge=1)


class ReferenceSection(_Strict):
    kind: Literal["auto", "kinetic", "limit"] = "auto"
    nx: int = Field(256, ge=8)
    nv: int = Field(128, ge=4)
    cfl: float = Field(0.9, gt=0, le=1)
    dt_max: float | None = Field(None, gt=0)
    times: list[float] | None = None
    path: str | None = None  # existing reference directory used by evaluate


class RunConfig(_Strict):
    problem: ProblemSection
    method: MethodSection
    nets: NetsSection = Field(default_factory=NetsSection)
    batches: BatchConfig = Field(default_factory=BatchConfig)
    penalties: dict | None = None  # None: the problem's default weights
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    quadrature: QuadratureSection = Field(default_factory=QuadratureSection)
    reference: ReferenceSection = Field(default_factory=ReferenceSection)

    # -- derived objects -------------------------------------------------

    def build_problem(self):
        from .experiments.problems import make_problem
        return make_problem(self.problem.id, eps=self.problem.eps, t_final=self.problem.t_final)

    def scale_eps(self):
        p = self.build_problem()
        return p.scale.eps0

    def build_penalties(self, text=None, source="<config>"):
        from .experiments.problems import default_penalties
        data = self.penalties
        if data is None:
            data = default_penalties(self.problem.id, self.method.name, self.scale_eps())
        try:
            return PenaltyConfig(**data)
        except ValidationError as exc:
            raise ConfigError(_format_validation(exc, "penalties", text, source)) from None

    def build_rule(self):
        from .quadrature import gauss_legendre
        return gauss_legendre(self.quadrature.n, self.build_problem().omega)

    def build_inputs(self):
        from .model import InputMap
        from .physics.fields import FourierFeatures
        p = self.build_problem()
        feats = FourierFeatures(p.k, self.nets.fourier_modes) if self.nets.fourier_modes else None
        return InputMap(feats, p.n_uq)

    def build_networks(self, seed=None):
        from .model import build_networks
        return build_networks(self.method.name, self.build_inputs(), hidden=tuple(self.nets.hidden),
                              kinetic_hidden=tuple(self.nets.kinetic_hidden or self.nets.hidden),
                              seed=self.nets.seed if seed is None else seed, dtype=self.nets.np_dtype)

    def reference_kind(self):
        """auto: kinetic unless eps is 0 or the problem has a parameter z (limit solver then)."""
        if self.reference.kind != "auto":
            return self.reference.kind
        p = self.build_problem()
        if p.n_uq or p.scale.eps0 == 0.0:
            return "limit"
        return "kinetic"

    def with_seed(self, seed):
        data = self.model_dump()
        data["training"]["seed"] = int(seed)
        data["nets"]["seed"] = int(seed)
        return RunConfig(**data)


def _locate(text, section, key):
    """1-based (line, column) of ``key =`` inside ``[section]``, or of the section header."""
    if text is None:
        return None
    current, header = None, None
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if current == section:
                header = (n, m.start(1))
            continue
        if current == section and key is not None:
            m = re.match(rf"\s*({re.escape(str(key))})\s*=", line)
            if m:
                return n, m.start(1) + 1
    return header


def _format_validation(exc, prefix=None, text=None, source="<config>"):
    parts = []
    for err in exc.errors():
        loc = [str(p) for p in err["loc"]]
        if prefix:
            loc = [prefix, *loc]
        pos = _locate(text, loc[0], loc[1] if len(loc) > 1 else None) if loc else None
        where = f"{source}:{pos[0]}:{pos[1]}: " if pos else f"{source}: "
        parts.append(f"{where}{'.'.join(loc)}: {err['msg']}")
    return "\n".join(parts)


def parse_config(text, source="<config>"):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"at line (\d+), column (\d+)", str(exc))
        where = f"{source}:{m.group(1)}:{m.group(2)}" if m else source
        raise ConfigError(f"{where}: malformed TOML: {exc}") from None
    try:
        cfg = RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc, text=text, source=source)) from None
    except TypeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg.build_penalties(text, source)  # surface penalty typos at load time
    return cfg


def load_config(path):
    """TOML config, or a run's config.json / manifest.json (resolved tree under "config")."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise MissingInputError(f"config file not found: {path}") from None
    if str(path).endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
        data = data.get("config", data) if isinstance(data, dict) else data
        try:
            return RunConfig(**data)
        except (ValidationError, TypeError) as exc:
            msg = _format_validation(exc, source=str(path)) if isinstance(exc, ValidationError) else str(exc)
            raise ConfigError(msg) from None
    return parse_config(text, source=str(path))
