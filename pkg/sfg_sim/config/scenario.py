"""Scenario files: flat ``section.key = value`` lines.

    # comment
    spectral.dc_bandwidth_nm = 31
    operating.n_values = 0.001, 0.01, 0.1
    run.engine = stream

Blank lines and text after ``#`` are ignored; list values are
comma-separated. Unknown sections or keys and repeated keys are errors
naming ``path:line``. ``dump_scenario`` writes every field, so
``parse_scenario_text(dump_scenario(s)) == s``.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from sfg_sim.errors import ConfigError
from sfg_sim.models.schemas import (
    AcceptanceMode,
    AmplitudeLaw,
    DetectorModel,
    Engine,
    FockOptions,
    SpectralConfig,
    SpectralShape,
    StreamOptions,
    SweepMode,
)
from sfg_sim.utils.units import nm_to_m

logger = logging.getLogger(__name__)

MODE_ALIASES = {"pump": SweepMode.PUMP_SCALING, "atten": SweepMode.ATTENUATION}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("*", mode="before")
    @classmethod
    def split_lists(cls, value, info):
        annotation = cls.model_fields[info.field_name].annotation
        if isinstance(value, str) and getattr(annotation, "__origin__", None) is list:
            return [item.strip() for item in value.split(",") if item.strip()]
        return value


class SpectralSection(_Section):
    pump_wavelength_nm: float = 532.0
    pump_bandwidth_hz: float = 5e6
    dc_center_wavelength_nm: float = 1064.0
    dc_bandwidth_nm: float = 31.0
    uc_bandwidth_hz: float = 1e11

    def to_config(self) -> SpectralConfig:
        return SpectralConfig.from_nm(
            pump_wavelength=nm_to_m(self.pump_wavelength_nm),
            pump_bandwidth=self.pump_bandwidth_hz,
            dc_center_wavelength=nm_to_m(self.dc_center_wavelength_nm),
            dc_bandwidth_nm=self.dc_bandwidth_nm,
            uc_bandwidth=self.uc_bandwidth_hz,
        )


class OperatingSection(_Section):
    n_values: List[float] = Field(default_factory=lambda: [0.0, 1e-3, 1e-2, 0.1, 1.0])
    alpha: float = Field(default=1e-7, gt=0)
    sweep_n_min: float = Field(default=1e-3, gt=0)
    sweep_n_max: float = Field(default=0.185, gt=0)
    sweep_points: int = Field(default=20, ge=3)
    fixed_n: float = Field(default=0.05, gt=0)
    transmissions: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0])


class DetectorSection(_Section):
    enabled: bool = False
    collection_efficiency: float = 0.06
    dark_rate: float = 50.0
    integration_time: float = 5.0

    def to_model(self) -> Optional[DetectorModel]:
        if not self.enabled:
            return None
        return DetectorModel(
            collection_efficiency=self.collection_efficiency,
            dark_rate=self.dark_rate,
            integration_time=self.integration_time,
        )


class RunSection(_Section):
    engine: Engine = Engine.ANALYTIC
    mode: SweepMode = SweepMode.PUMP_SCALING
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    num_seeds: int = Field(default=6, ge=1)

    @field_validator("mode", mode="before")
    @classmethod
    def accept_short_mode(cls, value):
        return MODE_ALIASES.get(value, value)


class FockSection(_Section):
    num_pairs: int = Field(default=1, ge=1, le=6)
    cutoff: int = Field(default=8, ge=1)
    law: AmplitudeLaw = AmplitudeLaw.THERMAL
    density: float = Field(default=0.01, ge=0)
    dephase_samples: int = Field(default=10_000, ge=2)

    def to_options(self) -> FockOptions:
        return FockOptions(num_pairs=self.num_pairs, cutoff=self.cutoff, law=self.law)


class StreamSection(_Section):
    dc_bandwidth: float = Field(default=1e6, gt=0)
    duration: float = Field(default=4.0, gt=0)
    conv_prob: float = Field(default=0.5, gt=0, le=1)
    shape: SpectralShape = SpectralShape.FLAT
    acceptance: AcceptanceMode = AcceptanceMode.ANALYTIC
    density: float = Field(default=0.05, gt=0)
    transmission: float = Field(default=1.0, gt=0, le=1)

    def to_options(self) -> StreamOptions:
        return StreamOptions(
            dc_bandwidth=self.dc_bandwidth,
            duration=self.duration,
            conv_prob=self.conv_prob,
            shape=self.shape,
            acceptance=self.acceptance,
        )


class OutputSection(_Section):
    dir: str = ""
    format: str = "csv"

    @field_validator("format")
    @classmethod
    def check_format(cls, value):
        if value not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        return value


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    spectral: SpectralSection = SpectralSection()
    operating: OperatingSection = OperatingSection()
    detector: DetectorSection = DetectorSection()
    run: RunSection = RunSection()
    fock: FockSection = FockSection()
    stream: StreamSection = StreamSection()
    output: OutputSection = OutputSection()

    def spectral_config(self) -> SpectralConfig:
        return self.spectral.to_config()


SECTIONS = tuple(ScenarioConfig.model_fields)


def _split_line(raw: str, path: str, line_no: int) -> Optional[Tuple[str, str, str]]:
    line = raw.split("#", 1)[0].strip()
    if not line:
        return None
    key, sep, value = line.partition("=")
    if not sep:
        raise ConfigError(f"expected 'section.key = value', got {line!r}", path, line_no)
    section, dot, name = key.strip().partition(".")
    if not dot or not name:
        raise ConfigError(f"key {key.strip()!r} has no section", path, line_no)
    return section, name.strip(), value.strip()


def parse_scenario_text(text: str, path: str = "<scenario>") -> ScenarioConfig:
    values: Dict[str, Dict[str, str]] = {name: {} for name in SECTIONS}
    lines: Dict[Tuple[str, str], int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        parsed = _split_line(raw, path, line_no)
        if parsed is None:
            continue
        section, name, value = parsed
        if section not in values:
            raise ConfigError(f"unknown section {section!r}", path, line_no)
        section_model = ScenarioConfig.model_fields[section].annotation
        if name not in section_model.model_fields:
            raise ConfigError(f"unknown key {section}.{name}", path, line_no)
        if (section, name) in lines:
            raise ConfigError(
                f"duplicate key {section}.{name} (first set on line {lines[(section, name)]})", path, line_no
            )
        lines[(section, name)] = line_no
        values[section][name] = value

    sections = {}
    for section, fields in values.items():
        section_model = ScenarioConfig.model_fields[section].annotation
        try:
            sections[section] = section_model(**fields)
        except ValidationError as e:
            error = e.errors()[0]
            name = str(error["loc"][0]) if error["loc"] else ""
            raise ConfigError(f"{section}.{name}: {error['msg']}", path, lines.get((section, name)))
    scenario = ScenarioConfig(**sections)
    try:
        scenario.spectral_config()
    except ValidationError as e:
        raise ConfigError(f"inconsistent spectral section: {e.errors()[0]['msg']}", path)
    except ValueError as e:
        raise ConfigError(f"inconsistent spectral section: {e}", path)
    logger.info(f"Loaded scenario {path} ({len(lines)} keys set)")
    return scenario


def parse_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("scenario file not found", str(path))
    return parse_scenario_text(path.read_text(), str(path))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format_value(item) for item in value)
    return str(value)


def dump_scenario(scenario: ScenarioConfig) -> str:
    """Canonical text form listing every field"""
    lines = []
    for section in SECTIONS:
        block = getattr(scenario, section)
        for name in type(block).model_fields:
            value = getattr(block, name)
            if value is None:
                continue
            lines.append(f"{section}.{name} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)
