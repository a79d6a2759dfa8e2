"""
Triple Parametric Decomposition Service
Turns multi-snapshot planar-array observations into decoupled sequences:
Step 1 cancels the distance curvature with origin-symmetric conjugate
products, Step 2 splits elevation from azimuth with mirrored sums, Step 3
keeps the full phase against a fixed reference antenna.
"""

from typing import Literal, Tuple

import numpy as np
from scipy import linalg

from config import logger
from models import ArrayGeometry, SnapshotSet, TpdSequences
from utils.error_handling import SequenceError
from .geometry import nearest_center

log = logger.getChild("tpd")

NoiseFloor = Literal["oracle", "data", "none"]


def _require_snapshots(snapshots: SnapshotSet) -> None:
    if snapshots is None or snapshots.n_snapshots < 1:
        raise SequenceError("TPD needs at least one snapshot")


def estimate_noise_floor(snapshots: SnapshotSet, order: int) -> float:
    """
    Noise power from the smallest eigenvalues of the sample covariance

    (trace(R) - sum of the `order` largest eigenvalues) / (N - order), with the
    eigenvalues taken from the smaller of the two Gram matrices.
    """
    H = snapshots.snapshots
    T, N = H.shape
    if order >= N:
        raise SequenceError("Model order must be smaller than the array size")
    gram = (H @ H.conj().T) / T if T < N else (H.conj().T @ H) / T
    eigenvalues = np.sort(linalg.eigvalsh(gram))[::-1]
    trace = float(np.sum(np.abs(H) ** 2) / T)
    residual = trace - float(np.sum(eigenvalues[:order]))
    return max(residual / (N - order), 0.0)


def resolve_noise_floor(snapshots: SnapshotSet, mode: NoiseFloor = "oracle", order: int = 1) -> float:
    """Noise power subtracted from same-antenna products"""
    if mode == "none":
        return 0.0
    if mode == "data":
        return estimate_noise_floor(snapshots, order)
    return float(snapshots.noise_variance)


def step1_angular_product(snapshots: SnapshotSet, geom: ArrayGeometry,
                          noise_floor: float = 0.0) -> np.ndarray:
    """
    x(m, n) = mean_t h_t(m, n) conj(h_t(-m, -n)), indexed [n, m]

    In expectation x(m, n) = sum_l P_l exp(j 2 k d (m u_l + n v_l)); the
    quadratic distance terms cancel. For odd x odd arrays the center entry
    multiplies an antenna with itself and is corrected by `noise_floor`.
    """
    _require_snapshots(snapshots)
    H = snapshots.as_grid()
    x = np.mean(H * np.conj(H[:, ::-1, ::-1]), axis=0)
    if geom.n_h % 2 == 1 and geom.n_v % 2 == 1:
        x[geom.n_v // 2, geom.n_h // 2] -= noise_floor
    return x


def step2_decompose(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mirrored sums of the Step-1 sequence

    s(m, n) = x(m, n) + x(-m, n): phase carries v only.
    t(m, n) = x(m, n) + x(m, -n): phase carries u only.
    """
    x = np.asarray(x)
    return x + x[:, ::-1], x + x[::-1, :]


def step2_companions(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mirrored differences x(m, n) - x(-m, n) and x(m, n) - x(m, -n)"""
    x = np.asarray(x)
    return x - x[:, ::-1], x - x[::-1, :]


def step3_center_product(snapshots: SnapshotSet, geom: ArrayGeometry,
                         noise_floor: float = 0.0) -> Tuple[np.ndarray, Tuple[int, int]]:
    """
    c(m, n) = mean_t h_t(m, n) conj(h_t(ref)), indexed [n, m]

    The reference is the center antenna of odd x odd arrays and the antenna
    nearest the center otherwise. Its own self-product is noise corrected.

    Returns:
        (c, (row, col) of the reference)
    """
    _require_snapshots(snapshots)
    H = snapshots.as_grid()
    row, col = nearest_center(geom)
    c = np.mean(H * np.conj(H[:, row:row + 1, col:col + 1]), axis=0)
    c[row, col] -= noise_floor
    return c, (row, col)


def decompose(snapshots: SnapshotSet, geom: ArrayGeometry,
              noise_floor: NoiseFloor = "oracle", order: int = 1) -> TpdSequences:
    """
    Run the three decomposition steps

    Args:
        snapshots: Observations
        geom: Array geometry
        noise_floor: "oracle" (configured noise power), "data" (eigenvalue
            estimate) or "none"
        order: Model order used by the data-driven noise estimate

    Returns:
        TpdSequences
    """
    _require_snapshots(snapshots)
    sigma2 = resolve_noise_floor(snapshots, noise_floor, order)
    x = step1_angular_product(snapshots, geom, sigma2)
    s, t = step2_decompose(x)
    c, reference = step3_center_product(snapshots, geom, sigma2)
    log.debug(f"Decomposed {snapshots.n_snapshots} snapshots, noise floor {sigma2:.3e}")
    return TpdSequences(
        step1=x,
        step2_elev=s,
        step2_azim=t,
        step3=c,
        snapshots_used=snapshots.n_snapshots,
        reference=reference,
        noise_floor=sigma2
    )
