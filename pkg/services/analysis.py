"""
Analysis Service
Request/response level operations shared by the CLI and the HTTP API
"""

from config import logger
from models import (
    ComplexityRequest, ComplexityResponse, DictInfoRequest, DictInfoResponse,
    EstimateRequest, EstimateResponse, InfoRequest, InfoResponse,
)
from .channel import synthesize_snapshots
from .dictionaries import mutual_coherence
from .evaluation import additive_ratio, complexity_report
from .geometry import region_boundaries
from .methods import method_registry, resolve_grid_plan
from .sweep import draw_scene, evaluate_methods
from utils.seeding import trial_seeds

log = logger.getChild("analysis")


class AnalysisService:
    """Geometry, dictionary, complexity and single-scene estimation queries"""

    def describe_geometry(self, request: InfoRequest) -> InfoResponse:
        geom = request.geometry
        return InfoResponse(
            geometry=geom,
            boundaries=region_boundaries(geom),
            n_elements=geom.n_elements,
            wavenumber=geom.wavenumber
        )

    def describe_dictionary(self, request: DictInfoRequest) -> DictInfoResponse:
        """Build the requested dictionary and report its size and coherence"""
        plan = resolve_grid_plan(request.geometry, request.dictionaries)
        dictionary = method_registry.dictionary(plan, request.flavor)
        return DictInfoResponse(
            flavor=dictionary.flavor,
            size=dictionary.size,
            distance_levels=dictionary.distance_levels,
            r_min=dictionary.r_min,
            r_max=dictionary.r_max,
            memory_bytes=dictionary.memory_bytes,
            mutual_coherence=mutual_coherence(dictionary)
        )

    def complexity(self, request: ComplexityRequest) -> ComplexityResponse:
        counts = complexity_report(request.geometry, request.dictionaries, request.pd_levels)
        return ComplexityResponse(counts=counts, additive_ratio=additive_ratio(request.geometry, counts))

    def estimate(self, request: EstimateRequest) -> EstimateResponse:
        """
        Simulate one seeded scene and run the requested methods on it

        Args:
            request: Geometry, scenario, grid settings, method tags and seed

        Returns:
            EstimateResponse with truth, estimates and NMSE per method
        """
        methods = method_registry.resolve(request.methods)
        scene_seed, noise_seed = trial_seeds(request.seed, 0, 0)
        scenario = request.scenario
        truth = draw_scene(scenario, request.geometry, scene_seed)
        snapshots = synthesize_snapshots(request.geometry, truth, scenario.snapshots, scenario.snr_db,
                                         scenario.model, noise_seed)
        plan = resolve_grid_plan(request.geometry, request.dictionaries)

        results = evaluate_methods(truth, snapshots, plan, methods, request.refine)
        log.info(f"Estimated {len(truth)} scatterers with {[m.value for m in methods]}")
        return EstimateResponse(
            truth=truth,
            estimates=[est for est, _, _ in results],
            metrics={est.method_tag.value: report for est, report, _ in results}
        )


# Global analysis service instance
analysis_service = AnalysisService()
