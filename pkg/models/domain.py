"""
Domain models for near-field array processing
Pydantic types shared by the geometry, channel, dictionary, TPD,
recovery and evaluation services
"""

import math
from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ModelFlag(str, Enum):
    """Wavefront model used to synthesize steering vectors"""
    EXACT = "exact"
    FRESNEL = "fresnel"


class DictionaryFlavor(str, Enum):
    """Sparsifying basis family"""
    AD = "AD"
    PD = "PD"


class MethodTag(str, Enum):
    """Registered estimation methods"""
    AD_OMP = "AD-OMP"
    PD_OMP = "PD-OMP"
    AD_MUSIC = "AD-MUSIC"
    PD_MUSIC = "PD-MUSIC"
    TPD_OMP = "TPD-OMP"
    TPD_MUSIC = "TPD-MUSIC"


class ArrayGeometry(BaseModel):
    """Uniform planar array in the z=0 plane, broadside along +z"""
    model_config = ConfigDict(frozen=True)

    n_h: int = Field(..., ge=1, description="Horizontal antenna count")
    n_v: int = Field(..., ge=1, description="Vertical antenna count")
    wavelength: float = Field(..., gt=0, description="Carrier wavelength in meters")
    spacing: float = Field(..., gt=0, description="Antenna pitch in meters")

    @model_validator(mode="before")
    @classmethod
    def default_half_wavelength(cls, data):
        if isinstance(data, dict) and data.get("spacing") is None and data.get("wavelength"):
            data = {**data, "spacing": data["wavelength"] / 2}
        return data

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v

    @property
    def alias_period(self) -> float:
        """Directional-cosine period of the index-doubled TPD sequences"""
        return self.wavelength / (2 * self.spacing)


class RegionBoundaries(BaseModel):
    """Near-field region boundaries of an aperture, all in meters"""
    model_config = ConfigDict(frozen=True)

    rayleigh_distance: float = Field(..., gt=0)
    fresnel_distance: float = Field(..., gt=0)
    aperture: float = Field(..., gt=0)


class Scatterer(BaseModel):
    """Point scatterer seen from the array center"""
    model_config = ConfigDict(frozen=True)

    u: float = Field(..., ge=-1, le=1, description="Horizontal directional cosine")
    v: float = Field(..., ge=-1, le=1, description="Vertical directional cosine")
    r: float = Field(..., gt=0, description="Distance from the array center in meters")
    power: float = Field(default=1.0, gt=0, description="Average path power")

    @model_validator(mode="after")
    def direction_in_front(self):
        if self.u ** 2 + self.v ** 2 > 1 + 1e-12:
            raise ValueError("u^2 + v^2 must not exceed 1")
        return self

    @property
    def w(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.u ** 2 - self.v ** 2))

    @property
    def inverse_distance(self) -> float:
        return 1.0 / self.r


class ClusterSpec(BaseModel):
    """von Mises-Fisher cluster of scatterers"""
    model_config = ConfigDict(frozen=True)

    center_direction: Tuple[float, float, float]
    concentration: float = Field(..., gt=0, description="vMF concentration kappa")
    scatterers_per_cluster: int = Field(default=2, ge=1)
    r_min: float = Field(..., gt=0)
    r_max: float = Field(..., gt=0)
    distance_rule: Literal["uniform", "inverse_uniform"] = "uniform"
    distance_jitter: float = Field(default=0.0, ge=0, lt=1,
                                   description="Relative per-member distance jitter")

    @field_validator("center_direction")
    @classmethod
    def unit_norm(cls, value):
        if abs(math.sqrt(sum(c * c for c in value)) - 1.0) > 1e-6:
            raise ValueError("center_direction must have unit norm")
        return value

    @model_validator(mode="after")
    def ordered_distances(self):
        if self.r_max < self.r_min:
            raise ValueError("r_max must not be smaller than r_min")
        return self

    @classmethod
    def toward(cls, u: float, v: float, **kwargs) -> "ClusterSpec":
        """Build a cluster whose center points at directional cosines (u, v)"""
        w = math.sqrt(max(0.0, 1.0 - u * u - v * v))
        norm = math.sqrt(u * u + v * v + w * w)
        return cls(center_direction=(u / norm, v / norm, w / norm), **kwargs)


class SnapshotSet(BaseModel):
    """T noisy observations of the array response"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    geometry: ArrayGeometry
    snapshots: np.ndarray = Field(..., description="T x N, row-major centered-index order")
    channel: np.ndarray = Field(..., description="Noiseless T x N channel")
    gains: np.ndarray = Field(..., description="T x L path gains")
    noise_variance: float = Field(..., ge=0)
    snr_db: float
    model_flag: ModelFlag

    @model_validator(mode="after")
    def consistent_shapes(self):
        if self.snapshots.ndim != 2 or self.snapshots.shape[0] < 1:
            raise ValueError("snapshots must be a non-empty T x N array")
        if self.snapshots.shape[1] != self.geometry.n_elements:
            raise ValueError("each snapshot must have n_h * n_v entries")
        if self.channel.shape != self.snapshots.shape:
            raise ValueError("channel and snapshots must share a shape")
        return self

    @property
    def n_snapshots(self) -> int:
        return self.snapshots.shape[0]

    def as_grid(self) -> np.ndarray:
        """Snapshots reshaped to T x n_v x n_h"""
        return self.snapshots.reshape(self.n_snapshots, self.geometry.n_v, self.geometry.n_h)


class Dictionary(BaseModel):
    """Sparsifying dictionary with its parameter grid"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    atoms: np.ndarray = Field(..., description="N x G unit-norm columns")
    grid: np.ndarray = Field(..., description="G x 3 (u, v, r); r = inf for planar atoms")
    flavor: DictionaryFlavor
    angle_shape: Tuple[int, int] = Field(..., description="(v points, u points)")
    level_count: int = Field(default=1, ge=1, description="Distance levels per angle")
    coherence_control: Optional[float] = None
    distance_levels: Optional[int] = None
    r_min: Optional[float] = None
    r_max: Optional[float] = None

    @model_validator(mode="after")
    def consistent_grid(self):
        if self.atoms.shape[1] != self.grid.shape[0]:
            raise ValueError("grid length must match the number of atoms")
        if self.angle_shape[0] * self.angle_shape[1] * self.level_count != self.grid.shape[0]:
            raise ValueError("grid does not factor into angle_shape x level_count")
        return self

    @property
    def size(self) -> int:
        return self.atoms.shape[1]

    @property
    def memory_bytes(self) -> int:
        return int(self.atoms.nbytes + self.grid.nbytes)


class TpdSequences(BaseModel):
    """Sequences produced by the three decomposition steps, indexed [n, m]"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    step1: np.ndarray
    step2_elev: np.ndarray
    step2_azim: np.ndarray
    step3: np.ndarray
    snapshots_used: int = Field(..., ge=1)
    reference: Tuple[int, int] = Field(..., description="(row, col) of the Step-3 reference antenna")
    noise_floor: float = Field(default=0.0, ge=0)


class Estimate(BaseModel):
    """One recovered scatterer"""
    u: float = Field(..., ge=-1, le=1)
    v: float = Field(..., ge=-1, le=1)
    r: float = Field(default=math.inf, gt=0, description="meters, inf for planar atoms")
    power: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def direction_in_front(self):
        if self.u ** 2 + self.v ** 2 > 1 + 1e-9:
            raise ValueError("u^2 + v^2 must not exceed 1")
        return self

    @property
    def inverse_distance(self) -> float:
        return 0.0 if math.isinf(self.r) else 1.0 / self.r


class EstimateSet(BaseModel):
    """Recovered parameters of one method on one observation"""
    entries: List[Estimate] = Field(default_factory=list)
    method_tag: MethodTag
    search_space_size: int = Field(default=0, ge=0)
    flags: List[str] = Field(default_factory=list)

    @field_validator("entries")
    @classmethod
    def sort_by_power(cls, value):
        return sorted(value, key=lambda e: -e.power)

    def __len__(self) -> int:
        return len(self.entries)


class TrialRecord(BaseModel):
    """Metrics of one method on one Monte Carlo trial"""
    scenario_id: str
    sweep_value: float
    trial: int = Field(..., ge=0)
    seed: int
    method_tag: MethodTag
    nmse_u: float = Field(..., ge=0)
    nmse_v: float = Field(..., ge=0)
    nmse_inv_r: float = Field(..., ge=0)
    nmse_r: float = Field(..., ge=0)
    nmse_channel: float = Field(..., ge=0)
    channel_nmse_db: float
    search_space_size: int = Field(..., ge=0)
    wall_ms: float = Field(default=0.0, ge=0)
    flags: List[str] = Field(default_factory=list)

    @property
    def nmse_angle(self) -> float:
        return 0.5 * (self.nmse_u + self.nmse_v)


class Assignment(BaseModel):
    """One-to-one association between ground truth and estimates"""
    pairs: List[Tuple[int, int]] = Field(default_factory=list, description="(truth index, estimate index)")
    misses: List[int] = Field(default_factory=list, description="Unmatched truth indices")
    cost: float = Field(default=0.0, ge=0)


class NmseReport(BaseModel):
    """Per-parameter and channel NMSE of one estimate set"""
    nmse_u: float = Field(..., ge=0)
    nmse_v: float = Field(..., ge=0)
    nmse_inv_r: float = Field(..., ge=0)
    nmse_r: float = Field(..., ge=0)
    nmse_channel: Optional[float] = Field(default=None, ge=0, description="None when no snapshots were given")
    channel_nmse_db: Optional[float] = None
    misses: int = Field(default=0, ge=0)
    flags: List[str] = Field(default_factory=list)
