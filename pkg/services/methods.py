"""
Estimation Method Registry
Maps method tags onto solvers sharing one grid plan and a read-only
dictionary cache
"""

import math
import threading
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from config import config, logger
from models import (
    ArrayGeometry, Dictionary, DictionaryFlavor, DictionarySettings, Estimate, EstimateSet,
    MethodTag, SnapshotSet,
)
from utils.error_handling import RecoveryError, validation_utils
from .dictionaries import build_ad_dictionary, build_pd_dictionary, default_oversampling, pd_level_count
from .geometry import region_boundaries
from .recovery import (
    default_cells, fit_powers, inverse_distance_step, music_dictionary, omp, pair_and_disambiguate,
    refine_offgrid, tpd_distance_grid, tpd_recover_angles, tpd_recover_distance,
)
from .tpd import decompose

log = logger.getChild("methods")


class GridPlan(BaseModel):
    """Resolved grid parameters shared by every method on one geometry"""
    model_config = ConfigDict(frozen=True)

    geometry: ArrayGeometry
    ad_oversampling: Tuple[int, int]
    pd_angle_oversampling: int
    beta: float
    r_min: float
    r_max: float
    pd_levels: int
    tpd_oversampling: Tuple[int, int]
    tpd_levels: int

    @property
    def tpd_r_grid(self) -> np.ndarray:
        return tpd_distance_grid(self.r_min, math.inf, self.tpd_levels)

    @property
    def rho_step(self) -> float:
        return inverse_distance_step(self.r_min, self.tpd_levels)

    def _angles(self, o_h: int, o_v: int) -> int:
        horizontal = o_h * self.geometry.n_h if self.geometry.n_h > 1 else 1
        vertical = o_v * self.geometry.n_v if self.geometry.n_v > 1 else 1
        return horizontal * vertical

    @property
    def ad_size(self) -> int:
        return self._angles(*self.ad_oversampling)

    @property
    def pd_size(self) -> int:
        o = self.pd_angle_oversampling
        return self._angles(o, o) * (self.pd_levels + 1)

    @property
    def tpd_size(self) -> int:
        o_h, o_v = self.tpd_oversampling
        horizontal = o_h * self.geometry.n_h if self.geometry.n_h > 1 else 0
        vertical = o_v * self.geometry.n_v if self.geometry.n_v > 1 else 0
        return horizontal + vertical + self.tpd_levels


def resolve_grid_plan(geom: ArrayGeometry, settings: Optional[DictionarySettings] = None,
                      pd_levels: Optional[int] = None) -> GridPlan:
    """
    Fill in grid defaults from the geometry and process configuration

    r_min defaults to GRID_R_MIN_FRESNEL_RATIO x Fresnel distance and the PD
    r_max to the Rayleigh distance; S_tpd defaults to max(n_h, n_v).
    """
    settings = settings or DictionarySettings()
    boundaries = region_boundaries(geom)
    r_min = settings.r_min or config.GRID_R_MIN_FRESNEL_RATIO * boundaries.fresnel_distance
    r_max = settings.r_max or boundaries.rayleigh_distance
    if r_max < r_min:
        r_max = r_min
    tpd_levels = settings.tpd_levels or config.TPD_DISTANCE_LEVELS or max(geom.n_h, geom.n_v)
    return GridPlan(
        geometry=geom,
        ad_oversampling=settings.ad_oversampling or default_oversampling(geom),
        pd_angle_oversampling=settings.pd_angle_oversampling,
        beta=settings.beta,
        r_min=r_min,
        r_max=r_max,
        pd_levels=pd_levels or pd_level_count(geom, settings.beta, r_min, r_max),
        tpd_oversampling=settings.tpd_oversampling,
        tpd_levels=tpd_levels
    )


Solver = Callable[[SnapshotSet, int, GridPlan], EstimateSet]


class MethodRegistry:
    """Solvers keyed by method tag"""

    def __init__(self):
        self._solvers: Dict[MethodTag, Solver] = {}
        self._dictionaries: Dict[Tuple[DictionaryFlavor, GridPlan], Dictionary] = {}
        self._lock = threading.Lock()

    def register(self, tag: MethodTag) -> Callable[[Solver], Solver]:
        """Decorator registering a solver under `tag`"""
        def wrap(solver: Solver) -> Solver:
            self._solvers[MethodTag(tag)] = solver
            return solver
        return wrap

    @property
    def tags(self) -> List[MethodTag]:
        return list(self._solvers)

    def resolve(self, tags: Iterable) -> List[MethodTag]:
        """Validate method tags against the registry"""
        return validation_utils.validate_method_tags(tags, self.tags)

    def dictionary(self, plan: GridPlan, flavor: DictionaryFlavor) -> Dictionary:
        """Cached AD or PD dictionary for a grid plan"""
        key = (flavor, plan)
        with self._lock:
            cached = self._dictionaries.get(key)
        if cached is not None:
            return cached

        if flavor == DictionaryFlavor.AD:
            built = build_ad_dictionary(plan.geometry, plan.ad_oversampling)
        else:
            built = build_pd_dictionary(plan.geometry, plan.pd_angle_oversampling, plan.beta,
                                        plan.r_min, plan.r_max)
        with self._lock:
            self._dictionaries[key] = built
        log.info(f"Built {flavor.value} dictionary with {built.size} atoms")
        return built

    def clear_cache(self):
        with self._lock:
            self._dictionaries.clear()

    def solve(self, tag: MethodTag, snapshots: SnapshotSet, order: int, plan: GridPlan,
              refine: bool = False) -> EstimateSet:
        """
        Run one registered solver

        Args:
            tag: Method tag
            snapshots: Observations
            order: Number of scatterers L
            plan: Grid plan of the geometry
            refine: Apply off-grid refinement to the grid-level result

        Returns:
            EstimateSet
        """
        tag = self.resolve([tag])[0]
        estimates = self._solvers[tag](snapshots, order, plan)
        if refine:
            oversampling = plan.tpd_oversampling if tag in (MethodTag.TPD_OMP, MethodTag.TPD_MUSIC) \
                else plan.ad_oversampling
            cells = default_cells(plan.geometry, oversampling, plan.rho_step)
            estimates = refine_offgrid(estimates, snapshots, plan.geometry, cells)
        log.debug(f"{tag.value}: {len(estimates)} estimates, flags={estimates.flags}")
        return estimates


# Global method registry
method_registry = MethodRegistry()


@method_registry.register(MethodTag.AD_OMP)
def ad_omp(snapshots: SnapshotSet, order: int, plan: GridPlan) -> EstimateSet:
    dictionary = method_registry.dictionary(plan, DictionaryFlavor.AD)
    return omp(snapshots.snapshots.T, dictionary, order, MethodTag.AD_OMP)


@method_registry.register(MethodTag.PD_OMP)
def pd_omp(snapshots: SnapshotSet, order: int, plan: GridPlan) -> EstimateSet:
    dictionary = method_registry.dictionary(plan, DictionaryFlavor.PD)
    return omp(snapshots.snapshots.T, dictionary, order, MethodTag.PD_OMP)


@method_registry.register(MethodTag.AD_MUSIC)
def ad_music(snapshots: SnapshotSet, order: int, plan: GridPlan) -> EstimateSet:
    dictionary = method_registry.dictionary(plan, DictionaryFlavor.AD)
    return music_dictionary(snapshots.snapshots.T, dictionary, order, MethodTag.AD_MUSIC)


@method_registry.register(MethodTag.PD_MUSIC)
def pd_music(snapshots: SnapshotSet, order: int, plan: GridPlan) -> EstimateSet:
    dictionary = method_registry.dictionary(plan, DictionaryFlavor.PD)
    return music_dictionary(snapshots.snapshots.T, dictionary, order, MethodTag.PD_MUSIC)


def tpd_estimate(snapshots: SnapshotSet, order: int, plan: GridPlan, algorithm: str,
                 tag: MethodTag) -> EstimateSet:
    """Decompose, recover angles, pair, match distances and fit powers"""
    geom = plan.geometry
    if order < 1:
        raise RecoveryError("Model order must be at least 1")
    flags: List[str] = []

    seq = decompose(snapshots, geom, noise_floor="data", order=order)
    v_set, u_set = tpd_recover_angles(seq, geom, order, algorithm, plan.tpd_oversampling, flags)
    pairs = pair_and_disambiguate(u_set, v_set, seq, snapshots, geom, order, flags)
    distances = tpd_recover_distance(seq.step3, pairs, geom, plan.tpd_r_grid, seq.reference, flags=flags)

    params = [(u, v, 0.0 if math.isinf(r) else 1.0 / r) for (u, v), r in zip(pairs, distances)]
    powers = fit_powers(snapshots, geom, params)
    entries = [Estimate(u=u, v=v, r=r, power=float(p))
               for (u, v), r, p in zip(pairs, distances, powers)]
    return EstimateSet(entries=entries, method_tag=tag, search_space_size=plan.tpd_size, flags=flags)


@method_registry.register(MethodTag.TPD_OMP)
def tpd_omp(snapshots: SnapshotSet, order: int, plan: GridPlan) -> EstimateSet:
    return tpd_estimate(snapshots, order, plan, "omp", MethodTag.TPD_OMP)


@method_registry.register(MethodTag.TPD_MUSIC)
def tpd_music(snapshots: SnapshotSet, order: int, plan: GridPlan) -> EstimateSet:
    return tpd_estimate(snapshots, order, plan, "music", MethodTag.TPD_MUSIC)
