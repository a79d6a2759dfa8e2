"""
Evaluation Service
Ground-truth association, per-parameter and channel NMSE, search-space
accounting and the dictionary leakage comparison
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from config import logger
from models import (
    ArrayGeometry, Assignment, DictionaryFlavor, DictionarySettings, EstimateSet,
    NmseReport, Scatterer, SnapshotSet,
)
from utils.error_handling import EvaluationError
from .channel import steering_exact, steering_planar
from .dictionaries import atoms_for_energy, captured_energy
from .geometry import region_boundaries
from .methods import GridPlan, method_registry, resolve_grid_plan

log = logger.getChild("evaluation")

# Saturated squared errors of an unmatched scatterer: u and v span [-1, 1],
# normalized 1/r spans [0, 1]
MISS_COST_U = 4.0
MISS_COST_V = 4.0
MISS_COST_INV_R = 1.0
MISS_COST = MISS_COST_U + MISS_COST_V + MISS_COST_INV_R


def _inverse(r: float) -> float:
    return 0.0 if math.isinf(r) else 1.0 / r


def match_estimates(truth: Sequence[Scatterer], est: EstimateSet,
                    r_min: Optional[float] = None) -> Assignment:
    """
    Minimum-cost one-to-one association of truths and estimates

    Cost of a pair is du^2 + dv^2 + (d(1/r) * r_min)^2; each unmatched truth
    adds the saturation value MISS_COST.

    Args:
        truth: Ground-truth scatterers
        est: Estimates
        r_min: Distance normalizing 1/r; the closest truth when omitted

    Returns:
        Assignment of (truth index, estimate index) pairs
    """
    if not truth:
        return Assignment()
    r_min = r_min or min(s.r for s in truth)
    entries = est.entries
    if not entries:
        return Assignment(misses=list(range(len(truth))), cost=MISS_COST * len(truth))

    cost = np.empty((len(truth), len(entries)))
    for i, s in enumerate(truth):
        for j, e in enumerate(entries):
            cost[i, j] = (e.u - s.u) ** 2 + (e.v - s.v) ** 2 \
                + ((e.inverse_distance - s.inverse_distance) * r_min) ** 2

    rows, cols = linear_sum_assignment(cost)
    pairs = sorted((int(i), int(j)) for i, j in zip(rows, cols))
    matched = {i for i, _ in pairs}
    misses = [i for i in range(len(truth)) if i not in matched]
    total = float(cost[rows, cols].sum()) + MISS_COST * len(misses)
    return Assignment(pairs=pairs, misses=misses, cost=max(total, 0.0))


def _normalized(errors: np.ndarray, values: np.ndarray, name: str, flags: List[str]) -> float:
    denominator = float(np.sum(values ** 2))
    if denominator == 0.0:
        flags.append(f"absolute_mse_{name}")
        log.warning(f"All-zero truth for {name}: reporting absolute MSE")
        return float(np.mean(errors ** 2))
    return float(np.sum(errors ** 2) / denominator)


def reconstruct_channel(snapshots: SnapshotSet, est: EstimateSet) -> np.ndarray:
    """Least-squares channel fit on exact spherical steering at the estimates"""
    geom = snapshots.geometry
    if not est.entries:
        return np.zeros_like(snapshots.channel)
    columns = []
    for e in est.entries:
        if math.isinf(e.r):
            columns.append(steering_planar(geom, e.u, e.v))
        else:
            columns.append(steering_exact(geom, Scatterer(u=e.u, v=e.v, r=e.r)))
    A = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(A, snapshots.snapshots.T, rcond=None)
    return (A @ coef).T


def nmse(truth: Sequence[Scatterer], est: EstimateSet, assignment: Assignment,
         snapshots: Optional[SnapshotSet] = None, r_min: Optional[float] = None,
         r_cap: Optional[float] = None) -> NmseReport:
    """
    Per-parameter NMSE on u, v, 1/r and r plus channel NMSE

    Args:
        truth: Ground-truth scatterers
        est: Estimates
        assignment: Result of match_estimates
        snapshots: Observations; enables the channel NMSE
        r_min: Scale of the saturated 1/r error of a miss
        r_cap: Substitute for r_hat = inf in the r column (10 x Rayleigh
            distance of the snapshot geometry when omitted)

    Returns:
        NmseReport
    """
    if not truth:
        raise EvaluationError("NMSE needs at least one ground-truth scatterer")
    flags: List[str] = []
    r_min = r_min or min(s.r for s in truth)
    if r_cap is None:
        r_cap = 10 * region_boundaries(snapshots.geometry).rayleigh_distance if snapshots else 1e6

    truth_u = np.array([s.u for s in truth])
    truth_v = np.array([s.v for s in truth])
    truth_rho = np.array([s.inverse_distance for s in truth])
    truth_r = np.array([s.r for s in truth])

    err_u = np.full(len(truth), math.sqrt(MISS_COST_U))
    err_v = np.full(len(truth), math.sqrt(MISS_COST_V))
    err_rho = np.full(len(truth), math.sqrt(MISS_COST_INV_R) / r_min)
    err_r = np.abs(r_cap - truth_r)
    for i, j in assignment.pairs:
        e = est.entries[j]
        err_u[i] = e.u - truth_u[i]
        err_v[i] = e.v - truth_v[i]
        err_rho[i] = e.inverse_distance - truth_rho[i]
        err_r[i] = min(e.r, r_cap) - truth_r[i]
    if assignment.misses:
        flags.append("missed_scatterers")

    report = dict(
        nmse_u=_normalized(err_u, truth_u, "u", flags),
        nmse_v=_normalized(err_v, truth_v, "v", flags),
        nmse_inv_r=_normalized(err_rho, truth_rho, "inv_r", flags),
        nmse_r=_normalized(err_r, truth_r, "r", flags),
    )

    if snapshots is not None:
        H = snapshots.channel
        H_hat = reconstruct_channel(snapshots, est)
        energy = float(np.sum(np.abs(H) ** 2))
        if energy == 0.0:
            raise EvaluationError("Channel NMSE is undefined for an all-zero channel")
        channel = float(np.sum(np.abs(H - H_hat) ** 2) / energy)
        report.update(nmse_channel=channel, channel_nmse_db=10 * math.log10(max(channel, 1e-30)))

    return NmseReport(misses=len(assignment.misses), flags=flags, **report)


def complexity_report(geom: ArrayGeometry, settings: Optional[DictionarySettings] = None,
                      pd_levels: Optional[int] = None, check: bool = True) -> Dict[str, int]:
    """
    Grid points examined by each dictionary family

    AD = |u grid| x |v grid|, PD = AD-style angle grid x (S + 1) and
    TPD = O_h n_h + O_v n_v + S_tpd.

    Raises:
        EvaluationError: if TPD < AD < PD fails on an array with n_h, n_v >= 4
    """
    plan = resolve_grid_plan(geom, settings, pd_levels)
    counts = {"AD": plan.ad_size, "PD": plan.pd_size, "TPD": plan.tpd_size}
    if check and geom.n_h >= 4 and geom.n_v >= 4:
        if not counts["TPD"] < counts["AD"] < counts["PD"]:
            raise EvaluationError(f"Search-space ordering TPD < AD < PD violated: {counts}")
    log.info(f"Search space for {geom.n_h}x{geom.n_v}: {counts}")
    return counts


def additive_ratio(geom: ArrayGeometry, counts: Dict[str, int]) -> float:
    """TPD grid count in units of max(n_h, n_v)"""
    return counts["TPD"] / max(geom.n_h, geom.n_v)


def leakage_profile(geom: ArrayGeometry, u: float, v: float, r: float,
                    settings: Optional[DictionarySettings] = None,
                    fraction: float = 0.9) -> List[Dict[str, float]]:
    """
    Sparsity of one scatterer under three representations

    Far-field channel on AD atoms, near-field channel on AD atoms and
    near-field channel on PD atoms; each row reports the energy share of the
    strongest atom and the atoms needed to hold `fraction` of the energy.
    """
    plan: GridPlan = resolve_grid_plan(geom, settings)
    ad = method_registry.dictionary(plan, DictionaryFlavor.AD)
    pd = method_registry.dictionary(plan, DictionaryFlavor.PD)
    far = steering_planar(geom, u, v)
    near = steering_exact(geom, Scatterer(u=u, v=v, r=r))

    rows = []
    for name, dictionary, h in (("far-field AD", ad, far), ("near-field AD", ad, near),
                                ("near-field PD", pd, near)):
        rows.append({
            "representation": name,
            "atoms": dictionary.size,
            "peak_energy": captured_energy(dictionary, h, 1),
            "atoms_for_fraction": atoms_for_energy(dictionary, h, fraction),
        })
    log.debug(f"Leakage profile at r={r}: {rows}")
    return rows
