"""
Persistence Utilities
Snapshot archives, ground-truth tables, estimate files and TPD debug grids
"""

import json
import os
from typing import List, Sequence, Tuple

import numpy as np

from config import logger
from models import ArrayGeometry, EstimateSet, ModelFlag, Scatterer, SnapshotSet, TpdSequences
from utils.error_handling import ConfigError

log = logger.getChild("persistence")

TRUTH_HEADER = "u,v,r,power"


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def save_snapshots(path: str, snapshots: SnapshotSet, truth: Sequence[Scatterer]) -> str:
    """Write snapshots, channel, gains and truth to a compressed .npz archive"""
    _ensure_parent(path)
    np.savez_compressed(
        path,
        snapshots=snapshots.snapshots,
        channel=snapshots.channel,
        gains=snapshots.gains,
        noise_variance=snapshots.noise_variance,
        snr_db=snapshots.snr_db,
        model_flag=snapshots.model_flag.value,
        geometry=snapshots.geometry.model_dump_json(),
        truth=truth_array(truth),
    )
    log.info(f"Saved {snapshots.n_snapshots} snapshots to {path}")
    return path


def load_snapshots(path: str) -> Tuple[SnapshotSet, List[Scatterer]]:
    """
    Read an archive written by save_snapshots

    Raises:
        FileNotFoundError: if the archive does not exist
        ConfigError: if required arrays are missing
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Snapshot archive not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        missing = {"snapshots", "channel", "gains", "geometry", "truth"} - set(archive.files)
        if missing:
            raise ConfigError(f"Snapshot archive {path} lacks {sorted(missing)}")
        geometry = ArrayGeometry.model_validate_json(str(archive["geometry"]))
        snapshots = SnapshotSet(
            geometry=geometry,
            snapshots=archive["snapshots"],
            channel=archive["channel"],
            gains=archive["gains"],
            noise_variance=float(archive["noise_variance"]),
            snr_db=float(archive["snr_db"]),
            model_flag=ModelFlag(str(archive["model_flag"])),
        )
        truth = [Scatterer(u=u, v=v, r=r, power=p) for u, v, r, p in archive["truth"]]
    return snapshots, truth


def truth_array(truth: Sequence[Scatterer]) -> np.ndarray:
    return np.array([[s.u, s.v, s.r, s.power] for s in truth], dtype=float).reshape(-1, 4)


def write_truth_table(path: str, truth: Sequence[Scatterer]) -> str:
    """Ground truth as a CSV table"""
    _ensure_parent(path)
    np.savetxt(path, truth_array(truth), delimiter=",", header=TRUTH_HEADER, comments="", fmt="%.10e")
    return path


def write_estimates(path: str, estimate_sets: Sequence[EstimateSet]) -> str:
    """Estimate sets as JSON; planar estimates keep r = Infinity"""
    _ensure_parent(path)
    with open(path, "w") as handle:
        json.dump([est.model_dump(mode="python") for est in estimate_sets], handle, indent=2, default=str)
    log.info(f"Wrote {len(estimate_sets)} estimate sets to {path}")
    return path


def dump_tpd_sequences(path: str, seq: TpdSequences) -> str:
    """TPD sequences for offline inspection"""
    _ensure_parent(path)
    np.savez(path, step1=seq.step1, step2_elev=seq.step2_elev, step2_azim=seq.step2_azim,
             step3=seq.step3, reference=np.array(seq.reference), noise_floor=seq.noise_floor)
    return path
