import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CONFIG_SCHEMA = "pcgmum.config/1"
REPORT_SCHEMA = "pcgmum.report/1"
DISTRIBUTION_SCHEMA = "pcgmum.distribution/1"
TABLES_SCHEMA = "pcgmum.tables/1"
SWEEP_SCHEMA = "pcgmum.sweep/1"


class MultiplierMatrix(BaseModel):
    """Strictly lower-triangular integer multipliers m[j][k], j > k.

    Row j holds m[j][0..j-1]; row 0 is empty. Coprimality with d is judged by
    `numtheory.consistent_family`, not enforced here, so that failing families
    can still be loaded and reported on.
    """
    d: int = Field(..., ge=2)
    m: List[List[int]]

    @field_validator("m")
    @classmethod
    def _triangular(cls, rows: List[List[int]]) -> List[List[int]]:
        for j, row in enumerate(rows):
            if len(row) != j:
                raise ValueError(f"row {j} must hold {j} entries, got {len(row)}")
            if any(entry < 1 for entry in row):
                raise ValueError(f"row {j} has a non-positive multiplier: {row}")
        return rows

    @property
    def R(self) -> int:
        return len(self.m)

    def get(self, j: int, k: int) -> int:
        if j <= k:
            raise IndexError(f"multipliers are defined for j > k only, got ({j}, {k})")
        return self.m[j][k]

    def pairs(self):
        for j in range(1, self.R):
            for k in range(j):
                yield j, k, self.m[j][k]


class MumConfig(BaseModel):
    schema_id: str = Field(CONFIG_SCHEMA, alias="schema")
    d: int = Field(..., ge=2)
    angles: List[float]
    periods: List[float]
    m_matrix: MultiplierMatrix
    offsets: List[float] = []

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def _check_directions(self) -> "MumConfig":
        R = len(self.angles)
        if R < 2:
            raise ValueError("a configuration needs at least two directions")
        if not self.offsets:
            self.offsets = [0.0] * R
        if len(self.periods) != R or len(self.offsets) != R:
            raise ValueError("angles, periods and offsets must have the same length")
        if self.m_matrix.R != R:
            raise ValueError(f"m_matrix has {self.m_matrix.R} rows for {R} directions")
        if self.m_matrix.d != self.d:
            raise ValueError("m_matrix dimension differs from config dimension")
        if self.angles[0] != 0.0:
            raise ValueError("angles[0] must be 0")
        for previous, current in zip(self.angles, self.angles[1:]):
            if not current > previous:
                raise ValueError(f"angles must be strictly increasing: {self.angles}")
        if self.angles[-1] >= math.pi:
            raise ValueError("angles must lie in [0, pi)")
        if any(period <= 0 for period in self.periods):
            raise ValueError("periods must be strictly positive")
        return self

    @property
    def R(self) -> int:
        return len(self.angles)

    def bin_width(self, j: int) -> float:
        return self.periods[j] / self.d

    def with_period(self, j: int, period: float) -> "MumConfig":
        periods = list(self.periods)
        periods[j] = period
        return self.model_copy(update={"periods": periods})

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class DirectionSet(BaseModel):
    """Raw measurement directions in any order or half-plane"""
    d: int = Field(..., ge=2)
    angles: List[float]
    periods: List[float]
    offsets: Optional[List[float]] = None

    @model_validator(mode="after")
    def _aligned(self) -> "DirectionSet":
        if len(self.angles) != len(self.periods):
            raise ValueError("angles and periods must have the same length")
        if self.offsets is not None and len(self.offsets) != len(self.angles):
            raise ValueError("offsets must match the number of directions")
        if any(period <= 0 for period in self.periods):
            raise ValueError("periods must be positive")
        return self


class PhysicalScale(BaseModel):
    wavelength: float = Field(632.8e-9, gt=0)
    lens_spacing: float = Field(0.29, gt=0)
    pixel_pitch: float = Field(8e-6, gt=0)

    @property
    def length_factor(self) -> float:
        """Metres per dimensionless unit, sqrt(lambda z / pi)"""
        return math.sqrt(self.wavelength * self.lens_spacing / math.pi)

    @property
    def pixels_per_unit(self) -> float:
        return self.length_factor / self.pixel_pitch


class PairCheck(BaseModel):
    j: int
    k: int
    implied_m: float
    nearest: int
    residual: float
    stored: Optional[int] = None
    coprime: bool
    passed: bool


class VerificationReport(BaseModel):
    schema_id: str = Field(REPORT_SCHEMA, alias="schema")
    d: int
    rel_tol: float
    pairs: List[PairCheck]
    family_consistent: bool
    passed: bool

    model_config = ConfigDict(populate_by_name=True)

    def failing_pairs(self) -> List[tuple]:
        return [(pair.j, pair.k) for pair in self.pairs if not pair.passed]


class FamilyWitness(BaseModel):
    d: int
    m_bound: int
    R: int
    pruned: bool
    nodes: int
    matrix: Optional[MultiplierMatrix] = None


class GridSpec(BaseModel):
    n: int = Field(4096, ge=8)
    spacing: float = Field(..., gt=0)
    center: float = 0.0

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, n: int) -> int:
        if n & (n - 1):
            raise ValueError(f"grid size must be a power of two, got {n}")
        return n

    @classmethod
    def symmetric(cls, n: int = 4096) -> "GridSpec":
        """Grid whose spacing sqrt(2 pi / n) maps onto itself under F_{pi/2}"""
        return cls(n=n, spacing=math.sqrt(2 * math.pi / n))

    @property
    def extent(self) -> float:
        return self.n * self.spacing

    def points(self) -> np.ndarray:
        return self.center + (np.arange(self.n) - (self.n - 1) / 2) * self.spacing


class GridState(BaseModel):
    """Complex wavefunction sampled on a uniform grid; immutable"""
    amplitudes: np.ndarray
    spacing: float = Field(..., gt=0)
    center: float = 0.0

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("amplitudes")
    @classmethod
    def _freeze(cls, amplitudes: np.ndarray) -> np.ndarray:
        array = np.array(amplitudes, dtype=complex)
        if array.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        if array.size & (array.size - 1):
            raise ValueError(f"grid size must be a power of two, got {array.size}")
        if not np.all(np.isfinite(array)):
            raise ValueError("amplitudes must be finite")
        array.setflags(write=False)
        return array

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @property
    def grid(self) -> GridSpec:
        return GridSpec(n=self.n, spacing=self.spacing, center=self.center)

    @property
    def q(self) -> np.ndarray:
        return self.grid.points()

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.spacing))

    def evolve(self, amplitudes: np.ndarray) -> "GridState":
        return GridState(amplitudes=amplitudes, spacing=self.spacing, center=self.center)


class BinMask(BaseModel):
    period: float = Field(..., gt=0)
    bins: int = Field(..., ge=1)
    offset: float = 0.0

    @property
    def width(self) -> float:
        return self.period / self.bins


class OutcomeDistribution(BaseModel):
    schema_id: str = Field(DISTRIBUTION_SCHEMA, alias="schema")
    probs: List[float]
    # edge-sample share, see cvsim.bin_probabilities
    truncation_loss: float = 0.0

    model_config = ConfigDict(populate_by_name=True)

    @field_validator("probs")
    @classmethod
    def _normalized(cls, probs: List[float]) -> List[float]:
        if not probs:
            raise ValueError("a distribution needs at least one outcome")
        if any(p < 0 or p > 1 for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1]: {probs}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {sum(probs)!r}")
        return probs

    @classmethod
    def from_weights(cls, weights, truncation_loss: float = 0.0) -> "OutcomeDistribution":
        array = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        array = array / array.sum()
        return cls(probs=[float(min(p, 1.0)) for p in array], truncation_loss=truncation_loss)

    @property
    def d(self) -> int:
        return len(self.probs)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


class SweepSample(BaseModel):
    period_px: float
    entropy_bits: Optional[float] = None
    error: Optional[str] = None


class SweepMarker(BaseModel):
    m: int
    period_px: float
    allowed: bool
    entropy_bits: Optional[float] = None


class SweepResult(BaseModel):
    schema_id: str = Field(SWEEP_SCHEMA, alias="schema")
    j: int
    k: int
    u: int = 0
    d: int
    samples: List[SweepSample]
    markers: List[SweepMarker] = []

    model_config = ConfigDict(populate_by_name=True)

    @field_validator("samples")
    @classmethod
    def _increasing(cls, samples: List[SweepSample]) -> List[SweepSample]:
        periods = [sample.period_px for sample in samples]
        if any(b <= a for a, b in zip(periods, periods[1:])):
            raise ValueError("sweep periods must be strictly increasing")
        return samples


class EntropyTables(BaseModel):
    schema_id: str = Field(TABLES_SCHEMA, alias="schema")
    d: int
    noise_fraction: float
    outcome: int = 0
    log_base: int = 2
    entropy: List[List[float]]
    kl: List[List[Optional[float]]]
    outcome_spread: Optional[List[List[float]]] = None

    model_config = ConfigDict(populate_by_name=True)


class SearchRequest(BaseModel):
    d: int = Field(..., ge=2)
    m_bound: int = Field(8, ge=1)
    pruned: bool = True


class ConstructRequest(BaseModel):
    d: int = Field(..., ge=2)
    Q: str = "1"
    R: int = Field(..., ge=2)
    m_col0: List[int]
    scale: PhysicalScale = PhysicalScale()
    round_pixels: bool = False


class VerifyRequest(BaseModel):
    config: Optional[MumConfig] = None
    directions: Optional[DirectionSet] = None
    rel_tol: float = Field(1e-9, gt=0)

    @model_validator(mode="after")
    def _one_source(self) -> "VerifyRequest":
        if (self.config is None) == (self.directions is None):
            raise ValueError("give exactly one of config or directions")
        return self


class SimulateRequest(BaseModel):
    config: MumConfig
    j: int = Field(..., ge=0)
    u: int = Field(0, ge=0)
    k: int = Field(..., ge=0)
    grid_size: int = 4096
    beam_width: float = Field(1.0, gt=0)
    noise_fraction: float = Field(0.0, ge=0, le=1)
    convergence_sizes: Optional[List[int]] = None


class TablesRequest(BaseModel):
    config: MumConfig
    noise_fraction: float = Field(0.02, ge=0, le=1)
    grid_size: int = 4096
    beam_width: float = Field(1.0, gt=0)
    sensitivity: bool = False


class SweepRequest(BaseModel):
    config: MumConfig
    j: int = Field(..., ge=0)
    k: int = Field(..., ge=0)
    u: int = Field(0, ge=0)
    start_px: float = Field(20.0, gt=0)
    stop_px: float = Field(200.0, gt=0)
    step_px: float = Field(1.0, gt=0)
    grid_size: int = 4096
    beam_width: Optional[float] = None
    scale: PhysicalScale = PhysicalScale()
