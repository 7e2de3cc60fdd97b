"""Run configuration: YAML or JSON validated against a strict schema."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, ContractError
from .evaluators import MODES
from .model import DEFAULT_MAX_DENSE_QUBITS, HubbardParams, LatticeSpec, ProductState, neel_state
from .noise import NoiseSpec, ThetaDistribution


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LatticeConfig(_Strict):
    x: int = Field(2, ge=1)
    y: int = Field(2, ge=1)


class ParamsConfig(_Strict):
    J: float = 0.5
    U: float = 2.0


class FilterConfig(_Strict):
    delta: float = Field(1.0, gt=0)
    x: float = Field(1.0, gt=0)


class TrotterConfig(_Strict):
    steps: Union[int, Literal["ramp"]] = 2
    absorb_first_onsite: bool = False

    @field_validator("steps")
    @classmethod
    def _positive(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("steps must be >= 1")
        return v


class MemoryConfig(_Strict):
    kind: Literal["fixed", "uniform", "normal"] = "fixed"
    mean: float = 0.0
    spread: float = Field(0.0, ge=0)


class NoiseConfig(_Strict):
    eps_2q: float = Field(0.0, ge=0, lt=1)
    shots: Optional[int] = Field(None, ge=1)
    sigma_series: float = Field(0.0, ge=0)
    trajectories: int = Field(2000, ge=1)
    memory: Optional[MemoryConfig] = None
    convention: Literal["survival", "fidelity"] = "survival"


class MitigationConfig(_Strict):
    methods: list[Literal["rescale", "symmetry", "zne-rescale"]] = Field(default_factory=list)


class ChainConfigModel(_Strict):
    n_samples: int = Field(5000, ge=1)
    burn_in: Optional[int] = Field(None, ge=0)
    modes: list[str] = Field(default_factory=lambda: ["exact"])

    @field_validator("modes")
    @classmethod
    def _known(cls, v):
        bad = [m for m in v if m not in MODES]
        if bad:
            raise ValueError(f"unknown chain modes {bad}; choose from {list(MODES)}")
        if not v:
            raise ValueError("at least one chain mode is required")
        return v


class ResourcesConfig(_Strict):
    sizes: list[int] = Field(default_factory=lambda: [4, 5, 6, 7, 8])
    fidelities: list[float] = Field(default_factory=lambda: [0.998, 0.999])
    encodings: list[Literal["JW", "compact"]] = Field(default_factory=lambda: ["JW", "compact"])

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, v):
        if any(L < 2 for L in v):
            raise ValueError("resource sizes must be >= 2")
        return v

    @field_validator("fidelities")
    @classmethod
    def _fids(cls, v):
        if any(not 0 < f <= 1 for f in v):
            raise ValueError("fidelities must lie in (0, 1]")
        return v


class RunConfig(_Strict):
    lattice: LatticeConfig = LatticeConfig()
    params: ParamsConfig = ParamsConfig()
    initial_state: str = "neel"
    E: float = 0.0
    E_grid: Optional[list[float]] = None
    filter: FilterConfig = FilterConfig()
    trotter: TrotterConfig = TrotterConfig()
    noise: NoiseConfig = NoiseConfig()
    mitigation: MitigationConfig = MitigationConfig()
    chain: ChainConfigModel = ChainConfigModel()
    resources: ResourcesConfig = ResourcesConfig()
    seed: int = 0
    max_dense_qubits: int = Field(DEFAULT_MAX_DENSE_QUBITS, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.initial_state != "neel":
            s = self.initial_state
            n = 2 * self.lattice.x * self.lattice.y
            if len(s) != n or set(s) - {"0", "1"}:
                raise ValueError(f"initial_state must be 'neel' or a {n}-character bitstring")
            if "1" not in s:
                raise ValueError("initial_state must have at least one occupied qubit")
        return self

    # domain views
    @property
    def lattice_spec(self) -> LatticeSpec:
        return LatticeSpec(self.lattice.x, self.lattice.y)

    @property
    def hubbard(self) -> HubbardParams:
        return HubbardParams(self.params.J, self.params.U)

    @property
    def psi0(self) -> ProductState:
        if self.initial_state == "neel":
            return neel_state(self.lattice_spec)
        return ProductState.from_bitstring(self.initial_state)

    @property
    def energies(self) -> list[float]:
        return list(self.E_grid) if self.E_grid else [self.E]

    @property
    def noise_spec(self) -> NoiseSpec:
        n = self.noise
        mem = ThetaDistribution(n.memory.kind, n.memory.mean, n.memory.spread) if n.memory else None
        return NoiseSpec(n.eps_2q, n.shots, n.sigma_series, mem, n.convention)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def _format_validation(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data: dict | None, overrides: dict | None = None) -> RunConfig:
    data = dict(data or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    try:
        cfg.lattice_spec, cfg.hubbard, cfg.noise_spec  # domain-level checks
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Read a YAML/JSON file (or defaults when ``path`` is None)."""
    if path is None:
        return parse_config({}, overrides)
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return parse_config(data, overrides)
