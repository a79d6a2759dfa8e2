"""
Parameter Recovery Service
Greedy sparse coding, MUSIC, TPD line-spectrum estimation, elevation-azimuth
pairing with alias resolution, distance matched filtering and off-grid
refinement
"""

import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, ndimage
from scipy.optimize import linear_sum_assignment, minimize_scalar

from config import config, logger
from models import (
    ArrayGeometry, Dictionary, Estimate, EstimateSet, MethodTag, SnapshotSet, TpdSequences,
)
from utils.error_handling import RecoveryError
from .channel import fresnel_response
from .dictionaries import angle_grid, planar_atoms
from .geometry import axis_indices, region_boundaries
from .tpd import step2_companions

log = logger.getChild("recovery")


# Line-spectrum atoms weaker than this share of the strongest one are treated as leakage
LINE_POWER_FLOOR = 0.05


class SpectralPeak(NamedTuple):
    frequency: float
    power: float
    confidence: float = math.inf


class OmpResult(NamedTuple):
    support: List[int]
    coefficients: np.ndarray
    residual_norms: List[float]
    flags: List[str]


def grid_estimate(row: Sequence[float], power: float) -> Estimate:
    """Estimate from a (u, v, r) grid row, pulled onto the visible disk u^2 + v^2 <= 1"""
    u, v, r = (float(x) for x in row)
    scale = math.hypot(u, v)
    if scale > 1.0:
        u, v = u / scale, v / scale
    return Estimate(u=u, v=v, r=r, power=power)


# Orthogonal matching pursuit

def _as_columns(observation: np.ndarray, rows: int) -> np.ndarray:
    Y = np.asarray(observation)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != rows:
        raise RecoveryError(f"Observation length {Y.shape[0]} does not match atom length {rows}")
    return Y


def omp_support(observation: np.ndarray, atoms: np.ndarray, sparsity: int) -> OmpResult:
    """
    Greedy support selection with least-squares re-fitting

    Multiple columns of `observation` are treated as snapshots sharing one
    support; atoms are scored by their summed projection power.

    Raises:
        RecoveryError: if sparsity < 1 or exceeds the number of atoms
    """
    Y = _as_columns(observation, atoms.shape[0])
    size = atoms.shape[1]
    if sparsity < 1 or sparsity > size:
        raise RecoveryError(f"Sparsity {sparsity} must lie in [1, {size}]")

    residual = Y.copy()
    support: List[int] = []
    excluded = np.zeros(size, dtype=bool)
    coefficients = np.zeros((0, Y.shape[1]), dtype=complex)
    norms = [float(np.linalg.norm(residual))]
    flags: List[str] = []

    while len(support) < sparsity:
        score = np.sum(np.abs(atoms.conj().T @ residual) ** 2, axis=1)
        score[support] = -np.inf
        score[excluded] = -np.inf
        if not np.isfinite(score).any():
            flags.append("omp_exhausted")
            break
        j = int(np.argmax(score))
        trial = support + [j]
        selected = atoms[:, trial]
        if np.linalg.matrix_rank(selected) < len(trial):
            excluded[j] = True
            flags.append("rank_deficient_atom")
            log.warning(f"OMP dropped atom {j}: selected set is rank deficient")
            continue
        coefficients, *_ = np.linalg.lstsq(selected, Y, rcond=None)
        support = trial
        residual = Y - selected @ coefficients
        norms.append(float(np.linalg.norm(residual)))
        log.debug(f"OMP picked atom {j}, residual {norms[-1]:.3e}")

    return OmpResult(support, coefficients, norms, flags)


def omp(observation: np.ndarray, dictionary: Dictionary, sparsity: int,
        method_tag: MethodTag = MethodTag.AD_OMP) -> EstimateSet:
    """
    Orthogonal matching pursuit over a dictionary

    Args:
        observation: N or N x T complex array
        dictionary: AD or PD dictionary
        sparsity: Number of atoms K
        method_tag: Tag recorded on the result

    Returns:
        EstimateSet of the selected grid tuples with fitted powers
    """
    result = omp_support(observation, dictionary.atoms, sparsity)
    rows = dictionary.atoms.shape[0]
    entries = []
    for j, coef in zip(result.support, result.coefficients):
        entries.append(grid_estimate(dictionary.grid[j], float(np.mean(np.abs(coef) ** 2) / rows)))
    return EstimateSet(entries=entries, method_tag=method_tag,
                       search_space_size=dictionary.size, flags=result.flags)


# MUSIC

def spatial_smooth(R: np.ndarray, subarray: int) -> np.ndarray:
    """Average of the subarray x subarray diagonal blocks of a covariance"""
    m = R.shape[0]
    if subarray < 1 or subarray > m:
        raise RecoveryError(f"Subarray length must be within [1, {m}]")
    count = m - subarray + 1
    Rf = R[:subarray, :subarray].copy()
    for i in range(1, count):
        Rf += R[i:i + subarray, i:i + subarray]
    return Rf / count


def music_pseudospectrum(data: np.ndarray, frequencies: np.ndarray, model_order: int,
                         subarray: Optional[int] = None) -> np.ndarray:
    """
    MUSIC pseudo-spectrum 1 / ||E_n^H a(f)||^2 of a line spectrum

    Args:
        data: M x K matrix, K snapshots of length M
        frequencies: Candidate frequencies in radians per sample
        model_order: Number of exponentials L
        subarray: Smoothing subarray length; ceil(2M/3) when fewer than M
            snapshots are available, M otherwise

    Raises:
        RecoveryError: if model_order >= subarray length
    """
    data = np.asarray(data)
    if data.ndim == 1:
        data = data[:, None]
    m, k = data.shape
    if subarray is None:
        subarray = m if k >= m else int(math.ceil(2 * m / 3))
    if model_order >= subarray:
        raise RecoveryError(f"Model order {model_order} must be below subarray length {subarray}")

    R = data @ data.conj().T / k
    if subarray < m:
        R = spatial_smooth(R, subarray)

    _, vectors = linalg.eigh(R)
    noise = vectors[:, :subarray - model_order]
    steering = np.exp(1j * np.outer(np.arange(subarray), frequencies)) / math.sqrt(subarray)
    denominator = np.sum(np.abs(noise.conj().T @ steering) ** 2, axis=0)
    return 1.0 / np.maximum(denominator, 1e-15)


def local_maxima(spectrum: np.ndarray, circular: bool = False) -> np.ndarray:
    """Indices of strict local maxima of a 1D spectrum"""
    if spectrum.size == 1:
        return np.array([0])
    if circular:
        left, right = np.roll(spectrum, 1), np.roll(spectrum, -1)
    else:
        left = np.concatenate([[-np.inf], spectrum[:-1]])
        right = np.concatenate([spectrum[1:], [-np.inf]])
    return np.flatnonzero((spectrum > left) & (spectrum > right))


def peak_confidence(spectrum: np.ndarray, peak: float) -> float:
    """Ratio of a peak to the spectrum median"""
    return float(peak / max(np.median(spectrum), 1e-300))


def music_1d(data: np.ndarray, frequencies: np.ndarray, model_order: int,
             subarray: Optional[int] = None, circular: bool = False,
             min_confidence: Optional[float] = None) -> List[SpectralPeak]:
    """
    The `model_order` largest strict local maxima of the MUSIC pseudo-spectrum

    With `min_confidence`, peaks whose ratio to the spectrum median falls
    below it are dropped; the strongest peak is always kept.

    Returns:
        List of (frequency, pseudo-spectrum value, ratio to the median),
        strongest first
    """
    frequencies = np.asarray(frequencies, dtype=float)
    spectrum = music_pseudospectrum(data, frequencies, model_order, subarray)
    candidates = local_maxima(spectrum, circular)
    ranked = candidates[np.argsort(-spectrum[candidates], kind="stable")][:model_order]
    peaks = []
    for i in ranked:
        confidence = peak_confidence(spectrum, spectrum[i])
        peak = SpectralPeak(float(frequencies[i]), float(spectrum[i]), confidence)
        if confidence < config.MUSIC_CONFIDENCE_RATIO:
            log.warning(f"Low-confidence MUSIC peak at {peak.frequency:.4f} rad (ratio {confidence:.2f})")
        if min_confidence is not None and peaks and confidence < min_confidence:
            continue
        peaks.append(peak)
    return peaks


def music_dictionary(observation: np.ndarray, dictionary: Dictionary, model_order: int,
                     method_tag: MethodTag = MethodTag.AD_MUSIC) -> EstimateSet:
    """
    MUSIC over every atom of an AD or PD dictionary

    Peaks are local maxima on the (v, u, distance level) grid; powers come
    from a least-squares fit on the selected atoms.
    """
    Y = _as_columns(observation, dictionary.atoms.shape[0])
    rows = Y.shape[0]
    if model_order < 1 or model_order >= rows:
        raise RecoveryError(f"Model order {model_order} must lie in [1, {rows - 1}]")

    R = Y @ Y.conj().T / Y.shape[1]
    _, vectors = linalg.eigh(R, subset_by_index=[rows - model_order, rows - 1])
    signal = np.sum(np.abs(vectors.conj().T @ dictionary.atoms) ** 2, axis=0)
    spectrum = 1.0 / np.maximum(1.0 - signal, 1e-15)

    shaped = spectrum.reshape(dictionary.angle_shape[0], dictionary.angle_shape[1], dictionary.level_count)
    peaks = np.flatnonzero((shaped == ndimage.maximum_filter(shaped, size=3, mode="nearest")).ravel())
    ranked = peaks[np.argsort(-spectrum[peaks], kind="stable")][:model_order]

    flags = []
    if ranked.size < model_order:
        flags.append("fewer_peaks_than_order")
        log.warning(f"MUSIC found {ranked.size} peaks for model order {model_order}")
    weakest = min((peak_confidence(spectrum, spectrum[j]) for j in ranked), default=math.inf)
    if weakest < config.MUSIC_CONFIDENCE_RATIO:
        flags.append("low_confidence_peak")
        log.warning(f"Low-confidence {method_tag.value} peak (ratio {weakest:.2f})")

    coef, *_ = np.linalg.lstsq(dictionary.atoms[:, ranked], Y, rcond=None)
    entries = []
    for j, row in zip(ranked, coef):
        entries.append(grid_estimate(dictionary.grid[j], float(np.mean(np.abs(row) ** 2) / rows)))
    return EstimateSet(entries=entries, method_tag=method_tag,
                       search_space_size=dictionary.size, flags=flags)


# TPD angle recovery

def alias_candidates(value: float, period: float) -> List[float]:
    """All value + k * period inside [-1, 1], ascending"""
    low = math.ceil((-1.0 - value) / period - 1e-9)
    high = math.floor((1.0 - value) / period + 1e-9)
    return sorted(float(np.clip(value + k * period, -1.0, 1.0)) for k in range(low, high + 1))


def line_grid(geom: ArrayGeometry, count: int, oversampling: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Alias-free directional-cosine grid of an index-doubled sequence

    The AD grid of the axis is folded onto one period of the doubled phase
    2 k d value; of each alias family the smallest |value| is kept.

    Returns:
        (canonical values, frequencies in radians per index step)
    """
    values = angle_grid(count, oversampling)
    frequencies = np.angle(np.exp(2j * geom.wavenumber * geom.spacing * values))
    keys = np.round(frequencies, 9)
    canonical = {}
    for value, key in zip(values, keys):
        if key not in canonical or abs(value) < abs(canonical[key]):
            canonical[key] = value
    ordered = sorted(canonical)
    return np.array([canonical[k] for k in ordered]), np.array(ordered, dtype=float)


def _pad(values: List[float], size: int) -> List[float]:
    if not values:
        return [0.0] * size
    return [values[i % len(values)] for i in range(size)]


def _line_estimates(data: np.ndarray, geom: ArrayGeometry, count: int, oversampling: int,
                    order: int, algorithm: str, flags: List[str]) -> List[float]:
    values, frequencies = line_grid(geom, count, oversampling)
    order_eff = min(order, values.size)
    if algorithm == "music":
        rows, columns = data.shape
        subarray = rows if columns >= rows else int(math.ceil(2 * rows / 3))
        peaks = music_1d(data, frequencies, max(1, min(order_eff, subarray - 1)), subarray, circular=True,
                         min_confidence=config.MUSIC_CONFIDENCE_RATIO)
        if any(p.confidence < config.MUSIC_CONFIDENCE_RATIO for p in peaks):
            flags.append("low_confidence_peak")
        lookup = dict(zip(frequencies.tolist(), values.tolist()))
        found = [lookup[p.frequency] for p in peaks]
    elif algorithm == "omp":
        positions = axis_indices(count)
        atoms = np.exp(1j * np.outer(positions, frequencies)) / math.sqrt(count)
        result = omp_support(data, atoms, order_eff)
        flags.extend(result.flags)
        power = np.sum(np.abs(result.coefficients) ** 2, axis=1)
        ranked = [i for i in np.argsort(-power, kind="stable") if power[i] >= LINE_POWER_FLOOR * power.max()]
        found = [float(values[result.support[i]]) for i in ranked]
    else:
        raise RecoveryError(f"Unknown line-spectrum algorithm '{algorithm}'")
    if len(found) < order:
        flags.append("padded_line_estimates")
    return _pad(found, order)


def tpd_recover_angles(seq: TpdSequences, geom: ArrayGeometry, order: int,
                       algorithm: str = "music", oversampling: Tuple[int, int] = (1, 1),
                       flags: Optional[List[str]] = None) -> Tuple[List[float], List[float]]:
    """
    Elevation and azimuth candidate sets from the Step-2 sequences

    Columns of the elevation sequence (fixed m, varying n) and of its
    mirrored difference are the snapshots of a line spectrum in 2 k d v;
    likewise along m for u. Each set holds `order` canonical values
    (repeats allowed); aliases are resolved by pairing.

    Returns:
        (v candidates, u candidates)
    """
    flags = [] if flags is None else flags
    s_minus, t_minus = step2_companions(seq.step1)
    o_h, o_v = oversampling

    if geom.n_v > 1:
        elev = np.hstack([seq.step2_elev, s_minus])
        v_set = _line_estimates(elev, geom, geom.n_v, o_v, order, algorithm, flags)
    else:
        v_set = [0.0] * order

    if geom.n_h > 1:
        azim = np.hstack([seq.step2_azim.T, t_minus.T])
        u_set = _line_estimates(azim, geom, geom.n_h, o_h, order, algorithm, flags)
    else:
        u_set = [0.0] * order

    log.debug(f"TPD angle candidates: v={np.round(v_set, 4)}, u={np.round(u_set, 4)}")
    return v_set, u_set


def beam_scores(snapshots: SnapshotSet, geom: ArrayGeometry,
                u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Far-field beamforming power a^H R a for each (u, v) pair"""
    atoms = planar_atoms(geom, np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return np.mean(np.abs(snapshots.snapshots @ atoms.conj()) ** 2, axis=0)


def pair_and_disambiguate(u_set: Sequence[float], v_set: Sequence[float], seq: TpdSequences,
                          snapshots: SnapshotSet, geom: ArrayGeometry, order: int,
                          flags: Optional[List[str]] = None) -> List[Tuple[float, float]]:
    """
    Associate u and v candidates and pick their aliases

    Every (u alias, v alias) combination in front of the array is scored by
    far-field beamforming on the raw sample covariance; the u-slot x v-slot
    assignment maximizing the total score is solved as a rectangular
    assignment problem.

    Returns:
        Up to `order` (u, v) pairs, strongest first
    """
    flags = [] if flags is None else flags
    period = geom.alias_period
    u_slots = list(u_set)[:order] if geom.n_h > 1 else [0.0] * min(order, len(u_set))
    v_slots = list(v_set)[:order] if geom.n_v > 1 else [0.0] * min(order, len(v_set))

    def aliases(value: float, populated: bool) -> List[float]:
        return alias_candidates(value, period) if populated else [0.0]

    u_aliases = [aliases(u, geom.n_h > 1) for u in u_slots]
    v_aliases = [aliases(v, geom.n_v > 1) for v in v_slots]

    combos = sorted({(ua, va) for us in u_aliases for vs in v_aliases for ua in us for va in vs
                     if ua ** 2 + va ** 2 <= 1 + 1e-12})
    score_of = {}
    if combos:
        scores = beam_scores(snapshots, geom, np.array([c[0] for c in combos]),
                             np.array([c[1] for c in combos]))
        score_of = dict(zip(combos, scores.tolist()))

    best = np.full((len(u_slots), len(v_slots)), -np.inf)
    choice = {}
    for i, us in enumerate(u_aliases):
        for j, vs in enumerate(v_aliases):
            for ua in us:
                for va in vs:
                    score = score_of.get((ua, va))
                    if score is not None and score > best[i, j]:
                        best[i, j] = score
                        choice[i, j] = (ua, va)

    finite = np.isfinite(best)
    cost = np.where(finite, best, -1e300)
    rows, cols = linear_sum_assignment(cost, maximize=True)
    pairs = [(best[i, j], choice[i, j]) for i, j in zip(rows, cols) if finite[i, j]]
    pairs.sort(key=lambda item: (-item[0], item[1]))

    if len(pairs) < order:
        flags.append("fewer_pairs_than_order")
        log.warning(f"Pairing produced {len(pairs)} of {order} pairs")
    return [pair for _, pair in pairs]


# TPD distance recovery

def tpd_distance_grid(r_min: float, r_max: float = math.inf, levels: int = 16) -> np.ndarray:
    """Distances whose inverses are equally spaced over [1/r_max, 1/r_min]; 1/r = 0 maps to inf"""
    if r_min <= 0 or levels < 1:
        raise RecoveryError("Distance grids need r_min > 0 and at least one level")
    low = 0.0 if math.isinf(r_max) else 1.0 / r_max
    rho = np.array([1.0 / r_min]) if levels == 1 else np.linspace(low, 1.0 / r_min, levels)
    with np.errstate(divide="ignore"):
        return np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), np.inf)


def _inverse(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.where(np.isinf(r), 0.0, 1.0 / np.where(np.isinf(r), 1.0, r))


def step3_atoms(geom: ArrayGeometry, u: float, v: float, rho: np.ndarray,
                reference: Tuple[int, int]) -> np.ndarray:
    """
    Unit-norm expectations of c for a unit-power scatterer at each 1/r

    The reference antenna's own Fresnel phase is compensated analytically.
    """
    ref = reference[0] * geom.n_h + reference[1]
    columns = []
    for level in rho:
        a = fresnel_response(geom, u, v, level)
        columns.append(a * np.conj(a[ref]))
    return np.column_stack(columns) / math.sqrt(geom.n_elements)


def tpd_recover_distance(c: np.ndarray, pairs: Sequence[Tuple[float, float]], geom: ArrayGeometry,
                         r_grid: np.ndarray, reference: Tuple[int, int],
                         max_cycles: int = 10, flags: Optional[List[str]] = None) -> List[float]:
    """
    Matched-filter distance per (u, v) pair with successive cancellation

    Pairs are processed in descending matched-filter power (ties by grid
    index); after the first pass each pair is re-estimated with all other
    contributions cancelled until the choices settle.

    Returns:
        Distances in meters (inf when the planar hypothesis wins), one per pair

    Raises:
        RecoveryError: for an empty distance grid
    """
    flags = [] if flags is None else flags
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0:
        raise RecoveryError("Distance grid is empty")
    if not pairs:
        return []

    rho = _inverse(r_grid)
    banks = [step3_atoms(geom, u, v, rho, reference) for u, v in pairs]
    residual = np.asarray(c).ravel().astype(complex)

    initial = [float(np.max(np.abs(bank.conj().T @ residual))) for bank in banks]
    order = sorted(range(len(pairs)), key=lambda i: (-initial[i], i))

    chosen = {}
    amplitude = {}
    for i in order:
        corr = banks[i].conj().T @ residual
        j = int(np.argmax(np.abs(corr)))
        chosen[i], amplitude[i] = j, corr[j]
        residual = residual - corr[j] * banks[i][:, j]

    for _ in range(max_cycles if len(pairs) > 1 else 0):
        changed = False
        for i in order:
            residual = residual + amplitude[i] * banks[i][:, chosen[i]]
            corr = banks[i].conj().T @ residual
            j = int(np.argmax(np.abs(corr)))
            changed |= j != chosen[i]
            chosen[i], amplitude[i] = j, corr[j]
            residual = residual - corr[j] * banks[i][:, j]
        if not changed:
            break

    distances = [float(r_grid[chosen[i]]) for i in range(len(pairs))]
    if any(math.isinf(r) for r in distances):
        flags.append("far_field_distance")
        log.info("Distance matched filter selected the planar hypothesis")
    return distances


# Power fitting and off-grid refinement

def _fresnel_matrix(geom: ArrayGeometry, params: Sequence[Tuple[float, float, float]]) -> np.ndarray:
    return np.column_stack([fresnel_response(geom, u, v, rho) for u, v, rho in params])


def fit_powers(snapshots: SnapshotSet, geom: ArrayGeometry,
               params: Sequence[Tuple[float, float, float]]) -> np.ndarray:
    """Least-squares path powers for (u, v, 1/r) tuples under the Fresnel model"""
    if not params:
        return np.zeros(0)
    A = _fresnel_matrix(geom, params)
    coef, *_ = np.linalg.lstsq(A, snapshots.snapshots.T, rcond=None)
    return np.mean(np.abs(coef) ** 2, axis=1)


def refinement_objective(snapshots: SnapshotSet, geom: ArrayGeometry,
                         params: Sequence[Tuple[float, float, float]]) -> float:
    """Snapshot energy captured by the span of the Fresnel atoms, per snapshot"""
    if not params:
        return 0.0
    A = _fresnel_matrix(geom, params)
    Q, _ = np.linalg.qr(A)
    return float(np.sum(np.abs(Q.conj().T @ snapshots.snapshots.T) ** 2) / snapshots.n_snapshots)


def inverse_distance_step(r_min: float, levels: int) -> float:
    """Spacing of a 1/r grid with `levels` points over [0, 1/r_min]"""
    return 1.0 / (r_min * max(levels - 1, 1))


def default_cells(geom: ArrayGeometry, oversampling: Tuple[int, int] = (1, 1),
                  rho_step: Optional[float] = None) -> Tuple[float, float, float]:
    """
    Grid-cell sizes (du, dv, d(1/r)); collapsed axes get 0

    Without `rho_step` the 1/r cell is the spacing of the default distance
    grid: GRID_R_MIN_FRESNEL_RATIO x Fresnel distance down to 1/r = 0 over
    TPD_DISTANCE_LEVELS (or max(n_h, n_v)) points.
    """
    if rho_step is None:
        r_min = config.GRID_R_MIN_FRESNEL_RATIO * region_boundaries(geom).fresnel_distance
        rho_step = inverse_distance_step(r_min, config.TPD_DISTANCE_LEVELS or max(geom.n_h, geom.n_v))
    du = 2.0 / (oversampling[0] * geom.n_h) if geom.n_h > 1 else 0.0
    dv = 2.0 / (oversampling[1] * geom.n_v) if geom.n_v > 1 else 0.0
    return du, dv, rho_step


def _coordinate_bounds(params: List[List[float]], i: int, axis: int,
                       cell: float) -> Optional[Tuple[float, float]]:
    value = params[i][axis]
    if axis == 2:
        return max(0.0, value - cell), value + cell
    other = params[i][1 - axis]
    limit = math.sqrt(max(0.0, 1.0 - other ** 2))
    low, high = max(-limit, value - cell), min(limit, value + cell)
    return (low, high) if high > low else None


def refine_offgrid(estimates: EstimateSet, observation: SnapshotSet, geom: ArrayGeometry,
                   cells: Optional[Tuple[float, float, float]] = None,
                   max_cycles: Optional[int] = None, tolerance: Optional[float] = None) -> EstimateSet:
    """
    Cyclic coordinate ascent of the captured-energy objective

    Each scatterer's u, v and 1/r are searched in turn within one grid cell
    of the current value; a move is kept only when the objective improves,
    so the output objective never falls below the input objective.
    """
    if not estimates.entries:
        return estimates
    cells = cells or default_cells(geom)
    max_cycles = max_cycles or config.REFINE_MAX_CYCLES
    tolerance = config.REFINE_TOLERANCE if tolerance is None else tolerance

    params = [[e.u, e.v, e.inverse_distance] for e in estimates.entries]
    current = refinement_objective(observation, geom, params)
    start = current

    for cycle in range(max_cycles):
        before = current
        for i in range(len(params)):
            for axis in range(3):
                cell = cells[axis]
                if cell <= 0:
                    continue
                bounds = _coordinate_bounds(params, i, axis, cell)
                if bounds is None:
                    continue

                def negative(value: float, i=i, axis=axis) -> float:
                    trial = [list(p) for p in params]
                    trial[i][axis] = value
                    return -refinement_objective(observation, geom, trial)

                result = minimize_scalar(negative, bounds=bounds, method="bounded",
                                         options={"xatol": 1e-6 * cell})
                if -result.fun > current * (1 + 1e-12):
                    params[i][axis] = float(result.x)
                    current = -float(result.fun)
        gain = (current - before) / max(before, 1e-300)
        log.debug(f"Refinement cycle {cycle}: objective {current:.6e}")
        if gain < tolerance:
            break

    powers = fit_powers(observation, geom, [tuple(p) for p in params])
    entries = [
        Estimate(u=u, v=v, r=math.inf if rho <= 0 else 1.0 / rho, power=float(p))
        for (u, v, rho), p in zip(params, powers)
    ]
    log.debug(f"Refinement objective {start:.6e} -> {current:.6e}")
    return EstimateSet(entries=entries, method_tag=estimates.method_tag,
                       search_space_size=estimates.search_space_size,
                       flags=estimates.flags + ["refined"])
