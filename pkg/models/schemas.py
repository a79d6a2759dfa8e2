"""
Pydantic Models for Experiment Files and API Schemas
Defines configuration sections and request/response models with validation
"""

from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from .domain import (
    ArrayGeometry, DictionaryFlavor, EstimateSet, MethodTag, ModelFlag,
    NmseReport, RegionBoundaries, Scatterer,
)


class ErrorType(str, Enum):
    """Enumeration of possible error types"""
    GEOMETRY_ERROR = "geometry_error"
    CHANNEL_ERROR = "channel_error"
    DICTIONARY_ERROR = "dictionary_error"
    SEQUENCE_ERROR = "sequence_error"
    RECOVERY_ERROR = "recovery_error"
    EVALUATION_ERROR = "evaluation_error"
    GENERAL_ERROR = "general_error"
    CONFIG_ERROR = "config_error"
    INPUT_ERROR = "input_error"


class ScenarioConfig(BaseModel):
    """Scene generation settings shared by every trial of a sweep"""
    clusters: int = Field(default=3, ge=1, description="Number of vMF clusters")
    scatterers_per_cluster: int = Field(default=2, ge=1)
    concentration: float = Field(default=50.0, gt=0, description="vMF concentration kappa")
    distance: float = Field(default=1.5, gt=0, description="Cluster distance, see distance_unit")
    distance_unit: Literal["m", "fresnel", "rayleigh"] = "m"
    distance_spread: float = Field(default=0.0, ge=0, lt=1,
                                   description="Relative half-width of the cluster distance interval")
    distance_jitter: float = Field(default=0.0, ge=0, lt=1)
    center_limit: float = Field(default=0.6, gt=0, lt=1,
                                description="Cluster centers are drawn with u^2 + v^2 <= limit^2")
    centers: Optional[List[Tuple[float, float]]] = Field(
        default=None, description="Fixed (u, v) cluster centers; drawn per trial when omitted")
    snr_db: float = Field(default=20.0)
    snapshots: int = Field(default=100, ge=1)
    model: ModelFlag = ModelFlag.EXACT

    @model_validator(mode="after")
    def centers_match_clusters(self):
        if self.centers is not None and len(self.centers) != self.clusters:
            raise ValueError("centers must list one (u, v) pair per cluster")
        return self

    @property
    def scatterer_count(self) -> int:
        return self.clusters * self.scatterers_per_cluster


class DictionarySettings(BaseModel):
    """Grid and dictionary settings of the estimation methods"""
    ad_oversampling: Optional[Tuple[int, int]] = Field(
        default=None, description="(O_h, O_v); 1 for planar arrays, 2 for linear arrays when omitted")
    pd_angle_oversampling: int = Field(default=1, ge=1)
    beta: float = Field(default=1.55, gt=0, description="PD coherence control factor")
    r_min: Optional[float] = Field(default=None, gt=0, description="Grid r_min, ratio * fresnel when omitted")
    r_max: Optional[float] = Field(default=None, gt=0, description="PD r_max, rayleigh when omitted")
    tpd_oversampling: Tuple[int, int] = (1, 1)
    tpd_levels: Optional[int] = Field(default=None, ge=1, description="S_tpd, max(n_h, n_v) when omitted")

    @field_validator("ad_oversampling", "tpd_oversampling")
    @classmethod
    def positive_factors(cls, value):
        if value is not None and min(value) < 1:
            raise ValueError("oversampling factors must be >= 1")
        return value


class SweepSettings(BaseModel):
    """Swept variable and Monte Carlo protocol"""
    variable: Literal["concentration", "distance", "snr"] = "concentration"
    values: List[float] = Field(..., min_length=1)
    trials: int = Field(default=10, ge=1)
    methods: List[MethodTag] = Field(..., min_length=1)
    refine: bool = False
    workers: int = Field(default=1, ge=1)


class OutputSettings(BaseModel):
    """Artifact locations"""
    directory: str = "results"
    name: str = Field(default="sweep", min_length=1)
    svg: bool = True


class SweepConfig(BaseModel):
    """Complete experiment file"""
    seed: int = Field(..., ge=0, description="Master seed")
    geometry: ArrayGeometry
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    dictionaries: DictionarySettings = Field(default_factory=DictionarySettings)
    sweep: Optional[SweepSettings] = None
    output: OutputSettings = Field(default_factory=OutputSettings)


class InfoRequest(BaseModel):
    """Geometry query request model"""
    geometry: ArrayGeometry


class InfoResponse(BaseModel):
    """Geometry query response model"""
    success: bool = True
    geometry: ArrayGeometry
    boundaries: RegionBoundaries
    n_elements: int
    wavenumber: float
    timestamp: datetime = Field(default_factory=datetime.now)


class DictInfoRequest(BaseModel):
    """Dictionary statistics request model"""
    geometry: ArrayGeometry
    flavor: DictionaryFlavor = DictionaryFlavor.PD
    dictionaries: DictionarySettings = Field(default_factory=DictionarySettings)


class DictInfoResponse(BaseModel):
    """Dictionary statistics response model"""
    success: bool = True
    flavor: DictionaryFlavor
    size: int
    distance_levels: Optional[int] = None
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    memory_bytes: int
    mutual_coherence: float = Field(..., ge=0.0, le=1.0 + 1e-9)
    timestamp: datetime = Field(default_factory=datetime.now)


class ComplexityRequest(BaseModel):
    """Search-space accounting request model"""
    geometry: ArrayGeometry
    dictionaries: DictionarySettings = Field(default_factory=DictionarySettings)
    pd_levels: Optional[int] = Field(default=None, ge=1, description="S; derived from beta when omitted")


class ComplexityResponse(BaseModel):
    """Search-space accounting response model"""
    success: bool = True
    counts: Dict[str, int]
    additive_ratio: float
    timestamp: datetime = Field(default_factory=datetime.now)


class EstimateRequest(BaseModel):
    """Single seeded scene estimation request model"""
    seed: int = Field(..., ge=0)
    geometry: ArrayGeometry
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    dictionaries: DictionarySettings = Field(default_factory=DictionarySettings)
    methods: List[MethodTag] = Field(..., min_length=1)
    refine: bool = False


class EstimateResponse(BaseModel):
    """Single seeded scene estimation response model"""
    success: bool = True
    truth: List[Scatterer]
    estimates: List[EstimateSet]
    metrics: Dict[str, NmseReport]
    timestamp: datetime = Field(default_factory=datetime.now)


class HealthCheckResponse(BaseModel):
    """Health check response model"""
    status: str = "healthy"
    version: str = "1.0.0"
    methods: List[str] = Field(default_factory=list)
    config_problems: List[str] = Field(default_factory=list)
    timestamp: datetime = Field(default_factory=datetime.now)


class ErrorResponse(BaseModel):
    """Standard error response model"""
    success: bool = False
    error: str
    error_type: ErrorType
    details: Optional[Dict[str, Any]] = None
    timestamp: datetime = Field(default_factory=datetime.now)
