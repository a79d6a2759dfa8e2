"""
Models package initialization
"""

from .domain import (
    ArrayGeometry, RegionBoundaries,
    Scatterer, ClusterSpec, SnapshotSet,
    Dictionary, TpdSequences,
    Estimate, EstimateSet, Assignment, NmseReport, TrialRecord,
    ModelFlag, DictionaryFlavor, MethodTag
)
from .schemas import (
    ScenarioConfig, DictionarySettings, SweepSettings, OutputSettings, SweepConfig,
    InfoRequest, InfoResponse,
    DictInfoRequest, DictInfoResponse,
    ComplexityRequest, ComplexityResponse,
    EstimateRequest, EstimateResponse,
    HealthCheckResponse, ErrorResponse,
    ErrorType
)

__all__ = [
    "ArrayGeometry", "RegionBoundaries",
    "Scatterer", "ClusterSpec", "SnapshotSet",
    "Dictionary", "TpdSequences",
    "Estimate", "EstimateSet", "Assignment", "NmseReport", "TrialRecord",
    "ModelFlag", "DictionaryFlavor", "MethodTag",
    "ScenarioConfig", "DictionarySettings", "SweepSettings", "OutputSettings", "SweepConfig",
    "InfoRequest", "InfoResponse",
    "DictInfoRequest", "DictInfoResponse",
    "ComplexityRequest", "ComplexityResponse",
    "EstimateRequest", "EstimateResponse",
    "HealthCheckResponse", "ErrorResponse",
    "ErrorType"
]
