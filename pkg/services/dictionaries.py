"""
Sparsifying Dictionary Service
Angular-domain (DFT) and polar-domain (Fresnel) bases and their coherence
"""

import math
from typing import Optional, Tuple

import numpy as np

from config import config, logger
from models import ArrayGeometry, Dictionary, DictionaryFlavor
from utils.error_handling import DictionaryError
from .channel import fresnel_response
from .geometry import aperture, index_grid

log = logger.getChild("dictionaries")


def check_dictionary_memory(rows: int, columns: int) -> int:
    """
    Bytes of a complex128 atom matrix, refused above DICTIONARY_MEMORY_LIMIT_MB

    Raises:
        DictionaryError: if the matrix would exceed the limit
    """
    size = rows * columns * np.dtype(np.complex128).itemsize
    if size > config.DICTIONARY_MEMORY_LIMIT_MB * 2 ** 20:
        raise DictionaryError(
            f"A {rows} x {columns} dictionary needs {size / 2 ** 20:.1f} MB, "
            f"above the {config.DICTIONARY_MEMORY_LIMIT_MB:g} MB limit"
        )
    return size


def angle_grid(count: int, oversampling: int = 1) -> np.ndarray:
    """
    Directional-cosine grid u_i = 2i/(O n) - 1 + 1/(O n), i = 0..O n - 1

    A single-antenna axis collapses to the single point 0.
    """
    if oversampling < 1:
        raise DictionaryError("Oversampling factors must be >= 1")
    if count == 1:
        return np.zeros(1)
    size = oversampling * count
    return 2 * np.arange(size) / size - 1 + 1 / size


def default_oversampling(geom: ArrayGeometry) -> Tuple[int, int]:
    """1 for planar arrays, 2 along the populated axis of a linear array"""
    if geom.n_v == 1 and geom.n_h > 1:
        return 2, 1
    if geom.n_h == 1 and geom.n_v > 1:
        return 1, 2
    return 1, 1


def planar_atoms(geom: ArrayGeometry, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unit-norm planar responses exp(j k d (m u + n v)) as columns"""
    idx = index_grid(geom) * geom.spacing
    phase = np.outer(idx[:, 0], u) + np.outer(idx[:, 1], v)
    return np.exp(1j * geom.wavenumber * phase) / math.sqrt(geom.n_elements)


def build_ad_dictionary(geom: ArrayGeometry, oversampling: Optional[Tuple[int, int]] = None) -> Dictionary:
    """
    Angular-domain dictionary over the (v, u) grid, u varying fastest

    Args:
        geom: Array geometry
        oversampling: (O_h, O_v); defaults per array shape

    Returns:
        AD Dictionary with G = |u grid| * |v grid| atoms
    """
    o_h, o_v = oversampling or default_oversampling(geom)
    u_axis = angle_grid(geom.n_h, o_h)
    v_axis = angle_grid(geom.n_v, o_v)
    uu, vv = np.meshgrid(u_axis, v_axis)
    u, v = uu.ravel(), vv.ravel()

    check_dictionary_memory(geom.n_elements, u.size)
    atoms = planar_atoms(geom, u, v)
    grid = np.column_stack([u, v, np.full(u.size, np.inf)])
    log.debug(f"AD dictionary: {atoms.shape[1]} atoms")
    return Dictionary(
        atoms=atoms,
        grid=grid,
        flavor=DictionaryFlavor.AD,
        angle_shape=(v_axis.size, u_axis.size),
        level_count=1
    )


def pd_level_count(geom: ArrayGeometry, beta: float, r_min: float, r_max: float) -> int:
    """S = ceil(D^2 / (2 lambda beta^2) * (1/r_min - 1/r_max)) + 1"""
    span = 1.0 / r_min - (0.0 if math.isinf(r_max) else 1.0 / r_max)
    scale = aperture(geom) ** 2 / (2 * geom.wavelength * beta ** 2)
    return int(math.ceil(scale * span - 1e-12)) + 1


def inverse_distance_levels(count: int, r_min: float, r_max: float) -> np.ndarray:
    """count levels of 1/r equally spaced from 1/r_max to 1/r_min"""
    low = 0.0 if math.isinf(r_max) else 1.0 / r_max
    if count == 1:
        return np.array([1.0 / r_min])
    return np.linspace(low, 1.0 / r_min, count)


def build_pd_dictionary(
    geom: ArrayGeometry,
    angle_oversampling: int = 1,
    beta: Optional[float] = None,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None
) -> Dictionary:
    """
    Polar-domain dictionary: Fresnel atoms on angle grid x inverse-distance grid

    The angle grid reuses the AD grid. Each angle carries the far-field atom
    (1/r = 0) followed by S finite levels in ascending 1/r.

    Raises:
        DictionaryError: for r_min <= 0 or r_max < r_min, or an atom matrix above the memory limit
    """
    beta = config.PD_BETA if beta is None else beta
    if beta <= 0:
        raise DictionaryError("Coherence control factor must be positive")
    if r_min is None or r_max is None:
        raise DictionaryError("PD dictionaries need an explicit [r_min, r_max] interval")
    if r_min <= 0:
        raise DictionaryError("r_min must be positive")
    if r_max < r_min:
        raise DictionaryError("r_max must not be smaller than r_min")

    levels = pd_level_count(geom, beta, r_min, r_max)
    rho = np.concatenate([[0.0], inverse_distance_levels(levels, r_min, r_max)])

    u_axis = angle_grid(geom.n_h, angle_oversampling)
    v_axis = angle_grid(geom.n_v, angle_oversampling)

    check_dictionary_memory(geom.n_elements, u_axis.size * v_axis.size * rho.size)
    columns = []
    grid = []
    for v in v_axis:
        for u in u_axis:
            for level in rho:
                columns.append(fresnel_response(geom, u, v, level))
                grid.append((u, v, np.inf if level == 0 else 1.0 / level))
    atoms = np.column_stack(columns) / math.sqrt(geom.n_elements)

    log.debug(f"PD dictionary: S={levels}, beta={beta}, {atoms.shape[1]} atoms")
    return Dictionary(
        atoms=atoms,
        grid=np.array(grid),
        flavor=DictionaryFlavor.PD,
        angle_shape=(v_axis.size, u_axis.size),
        level_count=levels + 1,
        coherence_control=beta,
        distance_levels=levels,
        r_min=r_min,
        r_max=r_max
    )


def mutual_coherence(dictionary: Dictionary, block: int = 512) -> float:
    """
    Exact max |<a_i, a_j>| over distinct columns, computed blockwise

    Raises:
        DictionaryError: for dictionaries with fewer than two atoms
    """
    atoms = dictionary.atoms
    size = atoms.shape[1]
    if size < 2:
        raise DictionaryError("Mutual coherence needs at least two atoms")

    best = 0.0
    for start in range(0, size, block):
        stop = min(start + block, size)
        gram = np.abs(atoms[:, start:stop].conj().T @ atoms)
        gram[np.arange(stop - start), np.arange(start, stop)] = 0.0
        best = max(best, float(gram.max()))
    return min(best, 1.0)


def adjacent_distance_coherence(dictionary: Dictionary, u: float = 0.0, v: float = 0.0) -> np.ndarray:
    """Coherence between consecutive finite distance levels at the angle nearest (u, v)"""
    if dictionary.flavor != DictionaryFlavor.PD:
        raise DictionaryError("Distance coherence is defined for PD dictionaries only")
    angles = dictionary.grid[::dictionary.level_count, :2]
    angle = int(np.argmin((angles[:, 0] - u) ** 2 + (angles[:, 1] - v) ** 2))
    start = angle * dictionary.level_count + 1
    block = dictionary.atoms[:, start:start + dictionary.level_count - 1]
    return np.abs(np.sum(block[:, :-1].conj() * block[:, 1:], axis=0))


def sparse_representation(dictionary: Dictionary, h: np.ndarray) -> np.ndarray:
    """Projection magnitudes |A^H h| of a channel vector"""
    return np.abs(dictionary.atoms.conj().T @ np.asarray(h).ravel())


def captured_energy(dictionary: Dictionary, h: np.ndarray, atoms: int = 1) -> float:
    """Fraction of ||h||^2 captured by the strongest `atoms` projections"""
    proj = np.sort(sparse_representation(dictionary, h) ** 2)[::-1]
    return float(np.sum(proj[:atoms]) / np.vdot(h, h).real)


def atoms_for_energy(dictionary: Dictionary, h: np.ndarray, fraction: float = 0.9) -> int:
    """Smallest number of strongest projections holding `fraction` of the projected energy"""
    proj = np.sort(sparse_representation(dictionary, h) ** 2)[::-1]
    cumulative = np.cumsum(proj) / np.sum(proj)
    return int(np.searchsorted(cumulative, fraction) + 1)
