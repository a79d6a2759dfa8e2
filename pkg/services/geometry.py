"""
Array Geometry Service
Centered antenna indexing and near-field region boundaries
"""

import math
from typing import List, Tuple

import numpy as np

from config import logger
from models import ArrayGeometry, RegionBoundaries
from utils.error_handling import GeometryError

log = logger.getChild("geometry")


def axis_indices(count: int) -> np.ndarray:
    """Centered indices p - (count-1)/2 for p = 0..count-1"""
    return np.arange(count, dtype=float) - (count - 1) / 2.0


def centered_indices(geom: ArrayGeometry) -> List[Tuple[float, float]]:
    """
    Centered (m, n) index pairs in row-major order (m varies fastest)

    Args:
        geom: Array geometry

    Returns:
        List of n_h * n_v index pairs, symmetric under (m, n) -> (-m, -n)
    """
    grid = index_grid(geom)
    return [(float(m), float(n)) for m, n in grid]


def index_grid(geom: ArrayGeometry) -> np.ndarray:
    """Centered indices as an N x 2 array of (m, n) rows"""
    m = axis_indices(geom.n_h)
    n = axis_indices(geom.n_v)
    mm, nn = np.meshgrid(m, n)
    return np.column_stack([mm.ravel(), nn.ravel()])


def positions(geom: ArrayGeometry) -> np.ndarray:
    """Antenna positions (m*d, n*d, 0) as an N x 3 array"""
    idx = index_grid(geom) * geom.spacing
    return np.column_stack([idx, np.zeros(idx.shape[0])])


def aperture(geom: ArrayGeometry) -> float:
    """Diagonal of the rectangle spanned by the outermost element centers"""
    return math.hypot((geom.n_h - 1) * geom.spacing, (geom.n_v - 1) * geom.spacing)


def region_boundaries(geom: ArrayGeometry) -> RegionBoundaries:
    """
    Rayleigh (2D^2/lambda) and Fresnel (0.62 sqrt(D^3/lambda)) distances

    Raises:
        GeometryError: for a single-antenna array (zero aperture)
    """
    diag = aperture(geom)
    if diag <= 0:
        raise GeometryError("Region boundaries are undefined for a single-antenna array")

    boundaries = RegionBoundaries(
        rayleigh_distance=2 * diag ** 2 / geom.wavelength,
        fresnel_distance=0.62 * math.sqrt(diag ** 3 / geom.wavelength),
        aperture=diag
    )
    log.debug(f"Boundaries for {geom.n_h}x{geom.n_v}: {boundaries}")
    return boundaries


def _on_axis(value: float, count: int) -> bool:
    doubled = 2 * value + (count - 1)
    return abs(doubled - round(doubled)) < 1e-9 and 0 <= round(doubled) <= 2 * (count - 1) \
        and int(round(doubled)) % 2 == 0


def contains_index(geom: ArrayGeometry, idx: Tuple[float, float]) -> bool:
    """Check whether (m, n) is a centered index of the array"""
    m, n = idx
    return _on_axis(m, geom.n_h) and _on_axis(n, geom.n_v)


def symmetric_partner(geom: ArrayGeometry, idx: Tuple[float, float]) -> Tuple[float, float]:
    """
    Origin-symmetric partner (-m, -n) of an antenna index

    Raises:
        GeometryError: if (m, n) is not in the index set
    """
    if not contains_index(geom, idx):
        raise GeometryError(f"Index {idx} is not part of the {geom.n_h}x{geom.n_v} array")
    m, n = idx
    return (-m + 0.0, -n + 0.0)


def nearest_center(geom: ArrayGeometry) -> Tuple[int, int]:
    """
    (row, col) of the antenna nearest the geometric center

    Smallest |m| + |n|; ties go toward positive indices, so odd axes pick 0
    and even axes pick +0.5.
    """
    row = geom.n_v // 2
    col = geom.n_h // 2
    return row, col
