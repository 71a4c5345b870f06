"""
Mean-Shift mode seeking over POI coordinates.

Each POI label is clustered separately; the converged modes become POI seeds
whose count and locations initialise P-KMEANS. Kernel windows use haversine
distances and shifts are applied in a local east/north frame around the
current estimate.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, IsolatedPointError
from .geo import EARTH_RADIUS_M, GeoPoint, PointsLike, as_lnglat_array, haversine_matrix, to_geopoints

logger = logging.getLogger(__name__)

KERNELS = ("flat", "gaussian")
_CHUNK = 256
_MAX_MERGE_ROUNDS = 20


@dataclass(frozen=True)
class MeanShiftConfig:
    """
    Mean-Shift parameters.

    Args:
        bandwidth_h: Window radius h in meters
        epsilon: Convergence threshold on the shift length, meters
        kernel: "flat" (mean of the points strictly inside h) or "gaussian"
        max_iter: Hill-climb iteration cap per start point
        merge_radius: Modes closer than this are merged; defaults to h / 2
    """

    bandwidth_h: float = 500.0
    epsilon: float = 1.0
    kernel: str = "flat"
    max_iter: int = 300
    merge_radius: Optional[float] = None

    def __post_init__(self):
        if not self.bandwidth_h > 0:
            raise ConfigError(f"bandwidth_h must be > 0, got {self.bandwidth_h}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.merge_radius is not None and self.merge_radius < 0:
            raise ConfigError(f"merge_radius must be >= 0, got {self.merge_radius}")

    @property
    def effective_merge_radius(self) -> float:
        return self.bandwidth_h / 2 if self.merge_radius is None else float(self.merge_radius)


@dataclass
class SeedSet:
    """Converged Mean-Shift modes with the number of input points behind each"""

    seeds: List[GeoPoint]
    member_count: List[int]
    source_label: Optional[object] = None
    assignments: List[int] = field(default_factory=list)

    def __post_init__(self):
        if len(self.seeds) != len(self.member_count):
            raise ValueError("seeds and member_count must have the same length")

    @property
    def k(self) -> int:
        return len(self.seeds)

    def as_array(self) -> np.ndarray:
        return as_lnglat_array(self.seeds) if self.seeds else np.empty((0, 2))

    def to_rows(self) -> List[Dict[str, object]]:
        label = getattr(self.source_label, "value", self.source_label) or ""
        return [
            {"label": label, "lng": s.lng, "lat": s.lat, "member_count": int(c)}
            for s, c in zip(self.seeds, self.member_count)
        ]


def _shift_block(
    positions: np.ndarray, points: np.ndarray, config: MeanShiftConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean-shift vectors (meters east, north) for a block of positions.

    Returns:
        (vectors (b, 2), isolated mask (b,)); isolated rows have an empty flat window
    """
    dist = haversine_matrix(positions, points)
    h = config.bandwidth_h
    if config.kernel == "flat":
        weights = (dist < h).astype(float)
    else:
        weights = np.exp(-0.5 * (dist / h) ** 2)
    total = weights.sum(axis=1)
    isolated = total <= 0

    scale = math.radians(1.0) * EARTH_RADIUS_M
    cos_lat = np.cos(np.radians(positions[:, 1]))[:, None]
    east = (points[None, :, 0] - positions[:, None, 0]) * scale * cos_lat
    north = (points[None, :, 1] - positions[:, None, 1]) * scale

    safe_total = np.where(isolated, 1.0, total)
    vectors = np.column_stack([
        (weights * east).sum(axis=1) / safe_total,
        (weights * north).sum(axis=1) / safe_total,
    ])
    vectors[isolated] = 0.0
    return vectors, isolated


def mean_shift_vector(x: GeoPoint, points: PointsLike, config: MeanShiftConfig) -> Tuple[float, float]:
    """
    Mean-Shift vector at `x`: offset from x to the (kernel-weighted) mean of its window.

    Args:
        x: Current estimate
        points: Data points
        config: Kernel and bandwidth

    Returns:
        (meters east, meters north)

    Raises:
        IsolatedPointError: flat kernel and no point strictly within h of x
    """
    pts = as_lnglat_array(points)
    if len(pts) == 0:
        raise IsolatedPointError("No data points supplied")
    vec, isolated = _shift_block(np.array([[x.lng, x.lat]]), pts, config)
    if isolated[0]:
        raise IsolatedPointError(f"No points within {config.bandwidth_h} m of ({x.lng}, {x.lat})")
    return float(vec[0, 0]), float(vec[0, 1])


def _apply_shift(positions: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Move each position by its (east, north) meter offset in its own tangent frame"""
    scale = math.radians(1.0) * EARTH_RADIUS_M
    lng = positions[:, 0] + vectors[:, 0] / (scale * np.cos(np.radians(positions[:, 1])))
    lat = positions[:, 1] + vectors[:, 1] / scale
    return np.column_stack([lng, lat])


def _climb(starts: np.ndarray, points: np.ndarray, config: MeanShiftConfig) -> Tuple[np.ndarray, int]:
    """
    Hill-climb every start position independently until |M(x)| < epsilon.

    A position is frozen (without applying its last, sub-epsilon shift) as
    soon as it converges, so every returned mode satisfies the threshold
    unless max_iter was hit.
    """
    positions = starts.copy()
    active = np.ones(len(positions), dtype=bool)
    unconverged = 0

    for _ in range(config.max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        for start in range(0, len(idx), _CHUNK):
            block = idx[start:start + _CHUNK]
            vectors, isolated = _shift_block(positions[block], points, config)
            norms = np.hypot(vectors[:, 0], vectors[:, 1])
            done = isolated | (norms < config.epsilon)
            active[block[done]] = False
            moving = block[~done]
            positions[moving] = _apply_shift(positions[moving], vectors[~done])
    else:
        unconverged = int(active.sum())

    return positions, unconverged


def _merge_modes(
    modes: np.ndarray, weights: np.ndarray, merge_radius: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sequentially merge modes in input order.

    Each mode joins the first existing seed closer than merge_radius (the seed
    moves to the member-weighted mean), otherwise it opens a new seed.

    Returns:
        (seed positions, seed weights, seed index per mode)
    """
    seeds: List[np.ndarray] = []
    seed_w: List[float] = []
    owner = np.empty(len(modes), dtype=int)

    for i, (mode, w) in enumerate(zip(modes, weights)):
        target = -1
        if seeds:
            dist = haversine_matrix(mode.reshape(1, 2), np.vstack(seeds))[0]
            close = np.flatnonzero(dist < merge_radius)
            if len(close):
                target = int(close[0])
        if target < 0:
            seeds.append(mode.astype(float).copy())
            seed_w.append(float(w))
            owner[i] = len(seeds) - 1
        else:
            total = seed_w[target] + w
            seeds[target] = (seeds[target] * seed_w[target] + mode * w) / total
            seed_w[target] = total
            owner[i] = target

    return np.vstack(seeds), np.array(seed_w), owner


def mean_shift_cluster(
    points: PointsLike, config: Optional[MeanShiftConfig] = None, source_label=None
) -> SeedSet:
    """
    Cluster points into Mean-Shift modes.

    Every point is climbed to a mode; modes within merge_radius are merged
    (member-weighted), merged seeds are re-climbed to a fixed point and merged
    again until stable. Iteration order is input order, so the result is
    deterministic.

    Args:
        points: Non-empty point list or (n, 2) [lng, lat] array
        config: Mean-Shift parameters (defaults apply when omitted)
        source_label: POI label the points were filtered on, if any

    Returns:
        SeedSet whose member counts sum to len(points)
    """
    config = config or MeanShiftConfig()
    pts = as_lnglat_array(points)
    if len(pts) == 0:
        raise ValueError("mean_shift_cluster requires at least one point")

    modes, unconverged = _climb(pts, pts, config)
    if unconverged:
        logger.warning(f"{unconverged} start points hit max_iter={config.max_iter} before converging")

    merge_radius = config.effective_merge_radius
    seeds, weights, owner = _merge_modes(modes, np.ones(len(modes)), merge_radius)

    for round_no in range(_MAX_MERGE_ROUNDS):
        polished, _ = _climb(seeds, pts, config)
        merged, merged_w, seed_owner = _merge_modes(polished, weights, merge_radius)
        owner = seed_owner[owner]
        if len(merged) == len(seeds):
            seeds, weights = polished, merged_w
            break
        seeds, weights = merged, merged_w
    else:
        logger.warning(f"Seed merging did not stabilise after {_MAX_MERGE_ROUNDS} rounds")

    member_count = np.bincount(owner, minlength=len(seeds)).astype(int)
    label_name = getattr(source_label, "value", source_label)
    logger.debug(f"Mean-Shift ({label_name or 'all'}): {len(pts)} points -> {len(seeds)} seeds")

    return SeedSet(
        seeds=to_geopoints(seeds),
        member_count=member_count.tolist(),
        source_label=source_label,
        assignments=owner.tolist(),
    )


def seed_all_labels(pois: Iterable, config: Optional[MeanShiftConfig] = None, labels: Optional[Sequence] = None) -> List[SeedSet]:
    """
    Run Mean-Shift separately for every POI label.

    Labels with no POIs produce an empty SeedSet so callers can report them.
    """
    from ..utils.ingest import ALL_LABELS

    config = config or MeanShiftConfig()
    pois = list(pois)
    seed_sets = []
    for label in (labels or ALL_LABELS):
        members = [p.location for p in pois if p.label == label]
        if not members:
            logger.info(f"No POIs labelled {label.value}; no seeds produced")
            seed_sets.append(SeedSet(seeds=[], member_count=[], source_label=label))
            continue
        seed_sets.append(mean_shift_cluster(members, config, source_label=label))
    return seed_sets


def merge_seed_sets(seed_sets: Iterable[SeedSet]) -> SeedSet:
    """Concatenate per-label seed sets into the global seed set that fixes K"""
    seeds: List[GeoPoint] = []
    counts: List[int] = []
    for s in seed_sets:
        seeds.extend(s.seeds)
        counts.extend(s.member_count)
    return SeedSet(seeds=seeds, member_count=counts, source_label=None)
