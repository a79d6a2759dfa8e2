"""
Near-Field Channel Service
Clustered scatterer generation (von Mises-Fisher) and multi-snapshot
observation synthesis under exact spherical or Fresnel wavefronts
"""

import math
from typing import List, Optional, Sequence

import numpy as np

from config import logger
from models import ArrayGeometry, ClusterSpec, ModelFlag, Scatterer, SnapshotSet
from utils.error_handling import ChannelError
from .geometry import index_grid

log = logger.getChild("channel")


def _vmf_cosines(kappa: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Cosine to the mean direction on S^2 by Wood's rejection scheme"""
    b = 2.0 / (math.sqrt(4.0 * kappa ** 2 + 4.0) + 2.0 * kappa)
    x = (1.0 - b) / (1.0 + b)
    c = kappa * x + 2.0 * math.log(1.0 - x ** 2)

    accepted = []
    while sum(w.size for w in accepted) < count:
        z = rng.beta(1.0, 1.0, size=count)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=count)
        keep = kappa * w + 2.0 * np.log(1.0 - x * w) - c >= np.log(u)
        accepted.append(w[keep])
    return np.clip(np.concatenate(accepted)[:count], -1.0, 1.0)


def sample_vmf(mu: np.ndarray, kappa: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw unit vectors from vMF(mu, kappa) on the sphere

    Args:
        mu: Mean direction (unit 3-vector)
        kappa: Concentration, > 0
        count: Number of samples
        rng: Random generator

    Returns:
        count x 3 array of unit vectors
    """
    if kappa <= 0:
        raise ChannelError("vMF concentration must be positive")
    mu = np.asarray(mu, dtype=float)
    mu = mu / np.linalg.norm(mu)

    w = _vmf_cosines(kappa, count, rng)

    # tangent directions: project Gaussian draws onto the plane orthogonal to mu
    v = rng.standard_normal((count, 3))
    v -= np.outer(v @ mu, mu)
    v /= np.linalg.norm(v, axis=1, keepdims=True)

    return w[:, None] * mu[None, :] + np.sqrt(1.0 - w ** 2)[:, None] * v


def _draw_distance(spec: ClusterSpec, rng: np.random.Generator) -> float:
    if spec.r_max == spec.r_min:
        return spec.r_min
    if spec.distance_rule == "inverse_uniform":
        rho = rng.uniform(1.0 / spec.r_max, 1.0 / spec.r_min)
        return 1.0 / rho
    return rng.uniform(spec.r_min, spec.r_max)


def sample_clusters(specs: Sequence[ClusterSpec], rng_seed: int) -> List[Scatterer]:
    """
    Draw clustered scatterers

    Every member of a cluster shares the cluster's distance draw, optionally
    perturbed by a relative jitter. Directions behind the array (w <= 0) are
    redrawn. Powers are normalized to sum to one.

    Raises:
        ChannelError: for an empty spec list or a non-positive concentration
    """
    if not specs:
        raise ChannelError("At least one cluster specification is required")

    rng = np.random.default_rng(rng_seed)
    drafts = []
    for spec in specs:
        if spec.concentration <= 0:
            raise ChannelError("vMF concentration must be positive")
        distance = _draw_distance(spec, rng)
        directions = []
        while len(directions) < spec.scatterers_per_cluster:
            draw = sample_vmf(np.array(spec.center_direction), spec.concentration,
                              spec.scatterers_per_cluster - len(directions), rng)
            directions.extend(d for d in draw if d[2] > 0)
        for direction in directions:
            r = distance
            if spec.distance_jitter > 0:
                r *= 1.0 + rng.uniform(-spec.distance_jitter, spec.distance_jitter)
            drafts.append((direction, r, rng.uniform(0.5, 1.5)))

    total = sum(p for _, _, p in drafts)
    scatterers = []
    for direction, r, p in drafts:
        u, v = float(direction[0]), float(direction[1])
        scale = math.hypot(u, v)
        if scale > 1.0:
            u, v = u / scale, v / scale
        scatterers.append(Scatterer(u=u, v=v, r=float(r), power=p / total))

    log.debug(f"Sampled {len(scatterers)} scatterers from {len(specs)} clusters")
    return scatterers


def _check_distance(s: Scatterer) -> None:
    if not s.r > 0:
        raise ChannelError(f"Scatterer distance must be positive, got {s.r}")


def path_difference(geom: ArrayGeometry, s: Scatterer) -> np.ndarray:
    """
    Exact ||r e - p|| - r for every antenna

    Evaluated as (|p|^2 - 2 r p.e) / (||r e - p|| + r) so that the planar
    limit keeps full precision at very large r.
    """
    _check_distance(s)
    idx = index_grid(geom) * geom.spacing
    pe = idx[:, 0] * s.u + idx[:, 1] * s.v
    p2 = idx[:, 0] ** 2 + idx[:, 1] ** 2
    dist = np.sqrt(s.r ** 2 - 2 * s.r * pe + p2)
    return (p2 - 2 * s.r * pe) / (dist + s.r)


def steering_exact(geom: ArrayGeometry, s: Scatterer) -> np.ndarray:
    """Spherical-wave response exp(-j k (||r e - p|| - r))"""
    return np.exp(-1j * geom.wavenumber * path_difference(geom, s))


def fresnel_terms(geom: ArrayGeometry, u: float, v: float, inverse_r: float):
    """Linear term (m d u + n d v) and quadratic term Q(m, n) of the Fresnel phase"""
    idx = index_grid(geom) * geom.spacing
    linear = idx[:, 0] * u + idx[:, 1] * v
    quadratic = (idx[:, 0] ** 2 + idx[:, 1] ** 2 - linear ** 2) * (0.5 * inverse_r)
    return linear, quadratic


def fresnel_response(geom: ArrayGeometry, u: float, v: float, inverse_r: float) -> np.ndarray:
    """Fresnel response parameterized by 1/r (0 gives the planar response)"""
    linear, quadratic = fresnel_terms(geom, u, v, inverse_r)
    return np.exp(-1j * geom.wavenumber * (quadratic - linear))


def steering_fresnel(geom: ArrayGeometry, s: Scatterer) -> np.ndarray:
    """Second-order (Fresnel) approximation exp(-j k (-(m d u + n d v) + Q(m, n)))"""
    _check_distance(s)
    return fresnel_response(geom, s.u, s.v, s.inverse_distance)


def steering_planar(geom: ArrayGeometry, u: float, v: float) -> np.ndarray:
    """Far-field response exp(j k d (m u + n v))"""
    return fresnel_response(geom, u, v, 0.0)


def steering(geom: ArrayGeometry, s: Scatterer, model_flag: ModelFlag) -> np.ndarray:
    """Steering vector under the selected wavefront model"""
    if ModelFlag(model_flag) == ModelFlag.FRESNEL:
        return steering_fresnel(geom, s)
    return steering_exact(geom, s)


def steering_matrix(geom: ArrayGeometry, scatterers: Sequence[Scatterer],
                    model_flag: ModelFlag = ModelFlag.EXACT) -> np.ndarray:
    """N x L matrix of steering vectors"""
    return np.column_stack([steering(geom, s, model_flag) for s in scatterers])


def noise_variance_for(scatterers: Sequence[Scatterer], snr_db: float) -> float:
    """Per-entry noise power matching the per-antenna average signal power"""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    signal_power = sum(s.power for s in scatterers)
    return signal_power / (10.0 ** (snr_db / 10.0))


def _complex_gaussian(rng: np.random.Generator, shape, variance) -> np.ndarray:
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_snapshots(
    geom: ArrayGeometry,
    scatterers: Sequence[Scatterer],
    T: int,
    snr_db: float,
    model_flag: ModelFlag = ModelFlag.EXACT,
    rng_seed: int = 0,
    gains: Optional[np.ndarray] = None
) -> SnapshotSet:
    """
    Synthesize T snapshots h_t = sum_l g_l^(t) a(s_l) + w_t

    Args:
        geom: Array geometry
        scatterers: Scene
        T: Number of snapshots
        snr_db: Per-antenna SNR; +inf disables noise
        model_flag: Wavefront model of a(.)
        rng_seed: Seed of two independent streams, one for gains and one for noise
        gains: Optional T x L gains overriding the CN(0, P_l) draws

    Returns:
        SnapshotSet with noisy snapshots, noiseless channel and gains

    Raises:
        ChannelError: for an empty scene or T < 1
    """
    if not scatterers:
        raise ChannelError("Cannot synthesize snapshots without scatterers")
    if T < 1:
        raise ChannelError("At least one snapshot is required")

    # gains and noise come from separate child streams of the seed
    gain_rng, noise_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(rng_seed).spawn(2))
    powers = np.array([s.power for s in scatterers])
    if gains is None:
        gains = _complex_gaussian(gain_rng, (T, len(scatterers)), powers[None, :])
    else:
        gains = np.asarray(gains, dtype=complex).reshape(T, len(scatterers))

    A = steering_matrix(geom, scatterers, model_flag)
    channel = gains @ A.T

    sigma2 = noise_variance_for(scatterers, snr_db)
    snapshots = channel
    if sigma2 > 0:
        snapshots = channel + _complex_gaussian(noise_rng, channel.shape, sigma2)

    log.debug(f"Synthesized {T} snapshots of {len(scatterers)} paths at {snr_db} dB ({model_flag})")
    return SnapshotSet(
        geometry=geom,
        snapshots=snapshots,
        channel=channel,
        gains=gains,
        noise_variance=sigma2,
        snr_db=snr_db,
        model_flag=ModelFlag(model_flag)
    )
