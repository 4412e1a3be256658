from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfg_sim.utils.units import NM, bandwidth_nm_to_hz, photons_to_pairs, power_to_flux


class SpectralConfig(BaseModel):
    """Bandwidth and wavelength parameters of the optical system (Hz, m)"""

    model_config = ConfigDict(frozen=True)

    pump_wavelength: float = Field(..., gt=0, description="Pump wavelength (m)")
    pump_bandwidth: float = Field(..., gt=0, description="Pump linewidth δ_p (Hz)")
    dc_center_wavelength: float = Field(..., gt=0, description="Down-converted centre wavelength (m)")
    dc_bandwidth: float = Field(..., gt=0, description="Down-converted bandwidth Δ_DC (Hz)")
    uc_bandwidth: float = Field(..., gt=0, description="Up-conversion acceptance δ_UC (Hz)")

    @model_validator(mode="after")
    def check_bandwidth_ordering(self):
        if self.uc_bandwidth < self.pump_bandwidth:
            raise ValueError("uc_bandwidth must be at least pump_bandwidth")
        if self.dc_bandwidth < self.uc_bandwidth:
            raise ValueError("dc_bandwidth must be at least uc_bandwidth")
        return self

    @classmethod
    def from_nm(
        cls,
        pump_wavelength: float,
        pump_bandwidth: float,
        dc_center_wavelength: float,
        dc_bandwidth_nm: float,
        uc_bandwidth: float,
    ) -> "SpectralConfig":
        """Build a config with the down-converted width given in nanometres"""
        return cls(
            pump_wavelength=pump_wavelength,
            pump_bandwidth=pump_bandwidth,
            dc_center_wavelength=dc_center_wavelength,
            dc_bandwidth=bandwidth_nm_to_hz(dc_center_wavelength, dc_bandwidth_nm * NM),
            uc_bandwidth=uc_bandwidth,
        )

    @classmethod
    def reference(cls) -> "SpectralConfig":
        """5 MHz pump at 532 nm, 31 nm down-conversion at 1064 nm, 100 GHz acceptance"""
        return cls.from_nm(
            pump_wavelength=532e-9,
            pump_bandwidth=5e6,
            dc_center_wavelength=1064e-9,
            dc_bandwidth_nm=31.0,
            uc_bandwidth=1e11,
        )

    @property
    def num_mode_pairs(self) -> float:
        """N = Δ_DC/δ_p"""
        return self.dc_bandwidth / self.pump_bandwidth

    @property
    def coherence_time(self) -> float:
        """Intra-pair timing scale τ = 1/(2Δ_DC)"""
        return 1.0 / (2.0 * self.dc_bandwidth)

    def scaled_to(self, dc_bandwidth: float) -> "SpectralConfig":
        """Copy with Δ_DC replaced and δ_p, δ_UC scaled to keep every ratio"""
        if dc_bandwidth <= 0:
            raise ValueError("dc_bandwidth must be positive")
        factor = dc_bandwidth / self.dc_bandwidth
        return self.model_copy(
            update={
                "dc_bandwidth": dc_bandwidth,
                "pump_bandwidth": self.pump_bandwidth * factor,
                "uc_bandwidth": self.uc_bandwidth * factor,
            }
        )


class OperatingPoint(BaseModel):
    """Mean spectral photon density n and the photon flux it implies.

    Flux counts down-converted photons (not pairs): Φ = n·Δ_DC. Build with
    the ``from_*`` constructors so the two fields stay consistent.
    """

    model_config = ConfigDict(frozen=True)

    n: float = Field(..., ge=0)
    flux: float = Field(..., ge=0)

    @classmethod
    def from_density(cls, config: SpectralConfig, n: float) -> "OperatingPoint":
        return cls(n=n, flux=n * config.dc_bandwidth)

    @classmethod
    def from_flux(cls, config: SpectralConfig, flux: float) -> "OperatingPoint":
        return cls(n=flux / config.dc_bandwidth, flux=flux)

    @classmethod
    def from_power(cls, config: SpectralConfig, power: float) -> "OperatingPoint":
        """Operating point for a measured down-converted power (W)"""
        return cls.from_flux(config, power_to_flux(power, config.dc_center_wavelength))

    @property
    def pair_rate(self) -> float:
        return photons_to_pairs(self.flux)


class RatePrediction(BaseModel):
    n: float = Field(..., ge=0)
    correlated: float = Field(..., ge=0)
    uncorrelated: float = Field(..., ge=0)
    alpha: float = Field(..., gt=0)

    @property
    def ratio(self) -> Optional[float]:
        if self.uncorrelated == 0:
            return None
        return self.correlated / self.uncorrelated


class RatioReport(BaseModel):
    n: float
    ratio: float
    bound: float
    within_bound: bool


class AlphaFit(BaseModel):
    alpha: float
    residual: float = Field(..., ge=0, description="Normalized RMS residual")
    weighted: bool = False


class LinearQuadraticFit(BaseModel):
    c1: float
    c2: float
    c1_err: float
    c2_err: float


class DetectorModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    collection_efficiency: float = Field(default=0.06, ge=0, le=1)
    dark_rate: float = Field(default=50.0, ge=0, description="Dark counts per second")
    integration_time: float = Field(default=5.0, gt=0, description="Seconds")


class DetectionResult(BaseModel):
    raw_counts: int = Field(..., ge=0)
    dark_subtracted: float
    integration_time: float = Field(..., gt=0)

    @property
    def rate(self) -> float:
        """Dark-subtracted count rate (s⁻¹); may be negative"""
        return self.dark_subtracted / self.integration_time


class LossChannel(BaseModel):
    model_config = ConfigDict(frozen=True)

    transmissivity: float = Field(..., ge=0, le=1)


class SfgCounts(BaseModel):
    """SFG events found in one event stream.

    ``paired`` are conversions of intact pairs (shared pair_id);
    ``coherent_cross`` are cross-pair coincidences converting into the pump
    band; ``accidental`` are cross-pair conversions accepted by the δ_UC
    receiver from the broadband sum spectrum.
    """

    paired: int = Field(..., ge=0)
    coherent_cross: int = Field(..., ge=0)
    accidental: int = Field(..., ge=0)
    intact_pairs: int = Field(..., ge=0)
    cross_coincidences: int = Field(..., ge=0)

    @property
    def correlated(self) -> int:
        return self.paired + self.coherent_cross


class SweepMode(str, Enum):
    PUMP_SCALING = "pump_scaling"
    ATTENUATION = "attenuation"


class Engine(str, Enum):
    ANALYTIC = "analytic"
    FOCK = "fock"
    STREAM = "stream"


class SweepPoint(BaseModel):
    drive: float = Field(..., gt=0)
    mean: float
    std: float = Field(default=0.0, ge=0)


class SweepCurve(BaseModel):
    mode: SweepMode
    engine: Engine = Engine.ANALYTIC
    points: List[SweepPoint]
    fitted_slope: Optional[float] = None
    endpoint_slopes: Optional[Tuple[float, float]] = None
    fitted_alpha: Optional[float] = None
    alpha_residual: Optional[float] = None
    seed_alphas: List[float] = Field(default_factory=list)

    @field_validator("points")
    @classmethod
    def validate_points(cls, v):
        drives = [p.drive for p in v]
        if drives != sorted(drives):
            raise ValueError("Sweep points must be sorted by drive value")
        return v

    @property
    def drives(self) -> List[float]:
        return [p.drive for p in self.points]

    @property
    def means(self) -> List[float]:
        return [p.mean for p in self.points]


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class CrossValidationRow(BaseModel):
    n: float
    analytic_correlated: float
    analytic_uncorrelated: float
    fock_coherent: float
    fock_correlated: float
    fock_uncorrelated: float
    stream_correlated_mean: float
    stream_correlated_std: float
    stream_accidental_mean: float
    stream_accidental_std: float
    stream_correlated_expected: float
    stream_accidental_expected: float
    normalized_analytic: float
    normalized_fock: float
    normalized_stream: float


class CrossValidationReport(BaseModel):
    rows: List[CrossValidationRow]
    checks: List[CheckResult]
    fock_quadratic_coefficient: float = Field(
        ..., description="n² coefficient of ⟨A†A⟩ per mode pair (linear coefficient 1)"
    )
    fock_coherent_quadratic_coefficient: float = Field(
        ..., description="n² coefficient of |⟨A⟩|² per mode pair (linear coefficient 1)"
    )

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class ValidationReport(BaseModel):
    seed: int
    checks: List[CheckResult]
    cross_validation: CrossValidationReport

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks) and self.cross_validation.passed


class AmplitudeLaw(str, Enum):
    """Per-pair Fock amplitudes c_k of the down-converted state.

    FIRST_ORDER keeps the one-pair/vacuum ratio at exactly √n (c_k ∝ n^{k/2});
    THERMAL uses c_k² = n^k/(1+n)^{k+1}, whose mean photon number per mode
    is n.
    """

    FIRST_ORDER = "first_order"
    THERMAL = "thermal"


class SpectralShape(str, Enum):
    FLAT = "flat"
    GAUSSIAN = "gaussian"


class AcceptanceMode(str, Enum):
    ANALYTIC = "analytic"
    SAMPLED = "sampled"


class FockOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    num_pairs: int = Field(default=1, ge=1, le=6)
    cutoff: int = Field(default=8, ge=1)
    law: AmplitudeLaw = AmplitudeLaw.THERMAL


class StreamOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    dc_bandwidth: float = Field(default=1e6, gt=0, description="Desk-scale Δ_DC (Hz)")
    duration: float = Field(default=4.0, gt=0, description="Seconds of light per run")
    conv_prob: float = Field(default=0.5, gt=0, le=1)
    shape: SpectralShape = SpectralShape.FLAT
    acceptance: AcceptanceMode = AcceptanceMode.ANALYTIC


class DephasedRates(BaseModel):
    samples: int
    correlated_mean: float
    correlated_sem: float
    coherent_mean: float
    coherent_sem: float


class ExpectedCounts(BaseModel):
    """Closed-form expectation of each ``count_sfg`` channel"""

    paired: float
    coherent_cross: float
    accidental: float

    @property
    def correlated(self) -> float:
        return self.paired + self.coherent_cross
