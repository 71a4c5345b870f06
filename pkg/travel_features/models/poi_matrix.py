"""
Travel pattern matrix construction.

For every life circle the POIs strictly inside the search radius DIS add a
distance-decayed weight (1 - dis/DIS) to their label. The per-circle masses
are normalised to proportions, combined per passenger with sqrt(N_k)
weighting, and rescaled to integer pseudo-counts with a fixed row total L.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import EmptyLifeCircleError, InputDataError
from ..utils.ingest import ALL_LABELS, LABEL_NAMES, PoiLabel, PoiRecord
from .geo import as_lnglat_array, haversine_to
from .pkmeans import LIFE_CIRCLE_RADIUS_M, ClusterModel, LifeCircle, life_circles

logger = logging.getLogger(__name__)

DEFAULT_ROW_TOTAL = 1000
N_LABELS = len(ALL_LABELS)


@dataclass(frozen=True)
class LabelMassVector:
    """Per-label POI mass for one cluster, stored in PoiLabel order"""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (N_LABELS,):
            raise ValueError(f"Expected {N_LABELS} label entries, got shape {values.shape}")
        if np.any(values < 0):
            raise ValueError("Label mass entries must be >= 0")
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> Dict[PoiLabel, float]:
        return {label: float(v) for label, v in zip(ALL_LABELS, self.values)}

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @classmethod
    def from_dict(cls, mass: Dict[PoiLabel, float]) -> "LabelMassVector":
        values = np.zeros(N_LABELS)
        for label, v in mass.items():
            values[label.index] = v
        return cls(values)


@dataclass
class TravelPatternMatrix:
    """
    Integer pseudo-count matrix X: one row per passenger, one column per label.

    Every row sums to exactly `row_total`.
    """

    passengers: List[str]
    counts: np.ndarray
    row_total: int
    labels: List[PoiLabel] = field(default_factory=lambda: list(ALL_LABELS))
    dropped: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64).reshape(len(self.passengers), len(self.labels))
        if np.any(self.counts < 0):
            raise ValueError("Pattern counts must be >= 0")

    def restrict(self, vocab: Sequence[PoiLabel]) -> np.ndarray:
        """Columns for `vocab`, in the given order"""
        cols = [self.labels.index(label) for label in vocab]
        return self.counts[:, cols]

    def row(self, uid: str) -> np.ndarray:
        return self.counts[self.passengers.index(uid)]

    def subset(self, uids: Sequence[str]) -> "TravelPatternMatrix":
        index = {uid: i for i, uid in enumerate(self.passengers)}
        rows = [index[u] for u in uids]
        return TravelPatternMatrix(
            passengers=list(uids),
            counts=self.counts[rows],
            row_total=self.row_total,
            labels=list(self.labels),
        )

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.counts, columns=[label.value for label in self.labels])
        df.insert(0, "uid", self.passengers)
        return df

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "TravelPatternMatrix":
        missing = [name for name in LABEL_NAMES if name not in df.columns]
        if "uid" not in df.columns or missing:
            raise InputDataError(f"Pattern matrix frame is missing columns: {(['uid'] if 'uid' not in df.columns else []) + missing}")
        counts = df[LABEL_NAMES].to_numpy(dtype=np.int64)
        totals = counts.sum(axis=1)
        row_total = int(totals[0]) if len(totals) else DEFAULT_ROW_TOTAL
        if np.any(totals != row_total):
            raise InputDataError("Pattern matrix rows do not share a common row total")
        return cls(passengers=df["uid"].astype(str).tolist(), counts=counts, row_total=row_total)


def _poi_arrays(pois: Sequence[PoiRecord]) -> Tuple[np.ndarray, np.ndarray]:
    if not pois:
        return np.empty((0, 2)), np.empty(0, dtype=int)
    coords = as_lnglat_array([p.location for p in pois])
    labels = np.array([p.label.index for p in pois], dtype=int)
    return coords, labels


def _label_mass(center: np.ndarray, radius_m: float, coords: np.ndarray, labels: np.ndarray) -> LabelMassVector:
    if len(coords) == 0:
        return LabelMassVector(np.zeros(N_LABELS))
    dist = haversine_to(coords, center)
    inside = dist < radius_m
    weights = 1.0 - dist[inside] / radius_m
    return LabelMassVector(np.bincount(labels[inside], weights=weights, minlength=N_LABELS))


def cluster_label_mass(circle: LifeCircle, pois: Sequence[PoiRecord]) -> LabelMassVector:
    """
    Distance-decayed POI mass per label around one life circle.

    M[t] = sum over POIs i of label t with dis_i < DIS of (1 - dis_i / DIS),
    with DIS = circle.radius_m.
    """
    coords, labels = _poi_arrays(list(pois))
    center = np.array([circle.center.lng, circle.center.lat])
    return _label_mass(center, circle.radius_m, coords, labels)


def normalize_cluster(mass: LabelMassVector) -> LabelMassVector:
    """
    Divide every entry by the total over all labels.

    Raises:
        EmptyLifeCircleError: the circle holds no POI mass
    """
    total = mass.values.sum()
    if not total > 0:
        raise EmptyLifeCircleError("Life circle contains no POI mass")
    return LabelMassVector(mass.values / total)


def raw_passenger_pattern(circles_with_mass: Iterable[Tuple[LifeCircle, LabelMassVector]]) -> np.ndarray:
    """
    Unrounded pattern row: sum over circles of normalized mass * sqrt(N_k).

    Circles with zero mass are skipped.
    """
    raw = np.zeros(N_LABELS)
    for circle, mass in circles_with_mass:
        if mass.values.sum() <= 0:
            continue
        raw = raw + mass.values * np.sqrt(circle.n_k)
    return raw


def round_to_total(raw: np.ndarray, row_total: int = DEFAULT_ROW_TOTAL) -> np.ndarray:
    """
    Rescale a non-negative vector to sum `row_total` and round by largest remainder.

    Remainder ties go to the lowest label index, so the result is deterministic
    and sums to exactly row_total.
    """
    raw = np.asarray(raw, dtype=float)
    total = raw.sum()
    if not total > 0:
        raise EmptyLifeCircleError("Cannot rescale an all-zero pattern")
    if row_total < 1:
        raise ValueError(f"row_total must be >= 1, got {row_total}")

    scaled = raw / total * row_total
    floors = np.floor(scaled).astype(np.int64)
    shortfall = int(row_total - floors.sum())
    if shortfall > 0:
        order = np.argsort(-(scaled - floors), kind="stable")
        floors[order[:shortfall]] += 1
    return floors


def passenger_pattern(
    circles_with_mass: Iterable[Tuple[LifeCircle, LabelMassVector]], row_total: int = DEFAULT_ROW_TOTAL
) -> np.ndarray:
    """
    One pattern-matrix row for a passenger.

    Args:
        circles_with_mass: (life circle, normalized label mass) pairs
        row_total: Pseudo-document length L

    Returns:
        Integer counts in PoiLabel order summing to row_total

    Raises:
        EmptyLifeCircleError: every circle is empty
    """
    return round_to_total(raw_passenger_pattern(circles_with_mass), row_total)


def cluster_masses(
    model: ClusterModel, pois: Sequence[PoiRecord], radius_m: float = LIFE_CIRCLE_RADIUS_M
) -> Dict[int, Optional[LabelMassVector]]:
    """
    Normalized label mass for every cluster center (None for empty circles).

    Masses depend only on the center and DIS, so they are computed once per
    cluster and shared by every passenger visiting it.
    """
    coords, labels = _poi_arrays(list(pois))
    out: Dict[int, Optional[LabelMassVector]] = {}
    for j, center in enumerate(model.centers_array):
        mass = _label_mass(center, radius_m, coords, labels)
        try:
            out[j] = normalize_cluster(mass)
        except EmptyLifeCircleError:
            out[j] = None
    empty = sum(1 for m in out.values() if m is None)
    if empty:
        logger.info(f"{empty}/{model.k} life circles contain no POI within {radius_m} m")
    return out


def build_travel_pattern_matrix(
    model: ClusterModel,
    point_uids: Sequence[str],
    pois: Sequence[PoiRecord],
    radius_m: float = LIFE_CIRCLE_RADIUS_M,
    row_total: int = DEFAULT_ROW_TOTAL,
) -> TravelPatternMatrix:
    """
    Build X for every passenger whose points were clustered by `model`.

    Passengers whose life circles are all empty are dropped and reported in
    `TravelPatternMatrix.dropped`. Rows are ordered by first appearance of the uid.
    """
    uids = list(point_uids)
    if len(uids) != len(model.assignments):
        raise InputDataError("point_uids must align with the model's assignments")

    masses = cluster_masses(model, pois, radius_m)
    index: Dict[str, List[int]] = {}
    for i, uid in enumerate(uids):
        index.setdefault(uid, []).append(i)

    passengers: List[str] = []
    rows: List[np.ndarray] = []
    dropped: Dict[str, str] = {}
    for uid, idx in index.items():
        circles = life_circles(model, radius_m, idx)
        pairs = [(c, masses[c.cluster]) for c in circles if masses[c.cluster] is not None]
        try:
            row = passenger_pattern(pairs, row_total)
        except EmptyLifeCircleError:
            dropped[uid] = "all life circles empty"
            continue
        passengers.append(uid)
        rows.append(row)

    if dropped:
        logger.warning(f"Dropped {len(dropped)} passengers with no POI mass in any life circle")

    counts = np.vstack(rows) if rows else np.empty((0, N_LABELS), dtype=np.int64)
    return TravelPatternMatrix(passengers=passengers, counts=counts, row_total=row_total, dropped=dropped)
