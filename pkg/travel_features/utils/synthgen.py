"""
Synthetic city and passenger generator.

Cities are Gaussian blobs of POIs per label at well separated centers.
Passengers get a true class per attribute and visit POIs of the labels that
characterise their classes, mixed with uniform noise visits. The output uses
the same CSV formats the ingest module reads, plus ground truth tables.
"""

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import ConfigError
from ..models.geo import GeoPoint, EARTH_RADIUS_M, from_local_xy, haversine_matrix
from ..models.plda import ATTRIBUTE_NAMES, BUILTIN_ATTRIBUTES
from .ingest import ALL_LABELS, PoiLabel, PoiRecord, TrajectoryRecord, labels_from_names, write_poi_csv, write_trajectory_csv
from .table_writer import write_frame

logger = logging.getLogger(__name__)

_MAX_PLACEMENT_ATTEMPTS = 10_000


@dataclass
class SynthConfig:
    """
    Parameters for a synthetic city and its passengers.

    Args:
        rng_seed: Seed for the single generation stream
        n_blobs_per_label: Blob count for every label (see label_blobs)
        label_blobs: Per-label blob count overrides, keyed by label name
        pois_per_blob: POIs drawn per blob
        blob_sigma_m: Standard deviation of POI offsets from the blob center
        city_center: (lng, lat) of the extent's center
        city_extent_deg: Side of the square extent in degrees
        min_center_separation_m: Minimum distance between any two blob centers
        n_passengers: Number of synthetic passengers
        records_min / records_max: Inclusive range of records per passenger
        noise: Fraction of visits drawn uniformly from all POIs
        visit_sigma_m: Standard deviation of a record around the visited POI
        duplicate_fraction: Share of POIs re-listed under a second label
        attributes: Attributes whose classes drive visits
        profile_weights: Class distribution per attribute (uniform by default)
        start_date: First day of the trajectory window (YYYY-MM-DD)
        window_days: Length of the trajectory window in days
    """

    rng_seed: int = 0
    n_blobs_per_label: int = 5
    label_blobs: Dict[str, int] = field(default_factory=dict)
    pois_per_blob: int = 40
    blob_sigma_m: float = 50.0
    city_center: Tuple[float, float] = (109.49, 36.60)
    city_extent_deg: float = 0.8
    min_center_separation_m: float = 5000.0
    n_passengers: int = 500
    records_min: int = 150
    records_max: int = 150
    noise: float = 0.2
    visit_sigma_m: float = 30.0
    duplicate_fraction: float = 0.0
    attributes: Tuple[str, ...] = ATTRIBUTE_NAMES
    profile_weights: Dict[str, List[float]] = field(default_factory=dict)
    start_date: str = "2018-01-01"
    window_days: int = 181

    def __post_init__(self):
        if not self.blob_sigma_m > 0 or not self.visit_sigma_m > 0:
            raise ConfigError("blob_sigma_m and visit_sigma_m must be > 0")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError(f"noise must be in [0, 1], got {self.noise}")
        if not 0.0 <= self.duplicate_fraction <= 1.0:
            raise ConfigError(f"duplicate_fraction must be in [0, 1], got {self.duplicate_fraction}")
        if self.n_blobs_per_label < 0 or self.pois_per_blob < 1 or self.n_passengers < 0:
            raise ConfigError("Blob, POI and passenger counts must be non-negative (pois_per_blob >= 1)")
        if not 0 <= self.records_min <= self.records_max:
            raise ConfigError(f"Invalid records range [{self.records_min}, {self.records_max}]")
        if self.window_days < 1:
            raise ConfigError("window_days must be >= 1")
        unknown = [a for a in self.attributes if a not in BUILTIN_ATTRIBUTES]
        if unknown:
            raise ConfigError(f"Unknown attributes: {unknown}")
        for name, weights in self.profile_weights.items():
            if name not in BUILTIN_ATTRIBUTES:
                raise ConfigError(f"profile_weights given for unknown attribute {name!r}")
            w = np.asarray(weights, dtype=float)
            if len(w) != BUILTIN_ATTRIBUTES[name].k_classes or np.any(w < 0) or not w.sum() > 0:
                raise ConfigError(f"profile_weights[{name}] must be {BUILTIN_ATTRIBUTES[name].k_classes} non-negative weights")
        try:
            datetime.strptime(self.start_date, "%Y-%m-%d")
        except ValueError as e:
            raise ConfigError(f"start_date must be YYYY-MM-DD, got {self.start_date!r}") from e
        try:
            labels_from_names(self.label_blobs.keys())
        except ValueError as e:
            raise ConfigError(f"label_blobs: {e}") from e

    def blobs_for(self, label: PoiLabel) -> int:
        return int(self.label_blobs.get(label.value, self.n_blobs_per_label))

    def class_weights(self, attribute: str) -> np.ndarray:
        k = BUILTIN_ATTRIBUTES[attribute].k_classes
        w = np.asarray(self.profile_weights.get(attribute, np.ones(k)), dtype=float)
        return w / w.sum()


@dataclass
class SyntheticCity:
    """Generated POIs plus the planted blob centers"""

    pois: List[PoiRecord]
    blob_centers: pd.DataFrame

    def pois_of(self, label: PoiLabel) -> List[PoiRecord]:
        return [p for p in self.pois if p.label == label]


@dataclass
class SyntheticPassengers:
    records: List[TrajectoryRecord]
    truth: Dict[str, Dict[str, str]]
    visit_labels: List[PoiLabel]

    def truth_frame(self, attributes: Sequence[str] = ATTRIBUTE_NAMES) -> pd.DataFrame:
        cols = [a for a in ATTRIBUTE_NAMES if a in attributes]
        rows = [{"uid": uid, **{a: classes.get(a, "") for a in cols}} for uid, classes in self.truth.items()]
        return pd.DataFrame(rows, columns=["uid"] + cols)


def _place_centers(config: SynthConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    half = config.city_extent_deg / 2
    lng0, lat0 = config.city_center
    centers: List[np.ndarray] = []
    for _ in range(n):
        for _ in range(_MAX_PLACEMENT_ATTEMPTS):
            cand = np.array([lng0 + rng.uniform(-half, half), lat0 + rng.uniform(-half, half)])
            if not centers or haversine_matrix(cand, np.vstack(centers)).min() >= config.min_center_separation_m:
                centers.append(cand)
                break
        else:
            raise ConfigError(
                f"Could not place {n} blob centers {config.min_center_separation_m} m apart "
                f"inside a {config.city_extent_deg} degree extent"
            )
    return np.vstack(centers) if centers else np.empty((0, 2))


def generate_city(config: SynthConfig) -> SyntheticCity:
    """
    Plant Gaussian POI blobs for every label.

    Deterministic under config.rng_seed. Labels with zero blobs get no POIs.
    Duplicates (same name and coordinates, different label) are appended after
    the originals.
    """
    rng = np.random.default_rng(config.rng_seed)
    plan = [(label, b) for label in ALL_LABELS for b in range(config.blobs_for(label))]
    centers = _place_centers(config, len(plan), rng)

    pois: List[PoiRecord] = []
    center_rows = []
    for (label, b), center in zip(plan, centers):
        offsets = rng.normal(0.0, config.blob_sigma_m, size=(config.pois_per_blob, 2))
        coords = from_local_xy(offsets, center)
        for i, (lng, lat) in enumerate(coords):
            pois.append(PoiRecord(
                location=GeoPoint(float(lng), float(lat)),
                name=f"{label.value}-{b}-{i}",
                label=label,
                city="synthetic",
                area=f"blob-{b}",
                address=f"{label.value} street {i}",
            ))
        center_rows.append({"label": label.value, "blob": b, "lng": float(center[0]), "lat": float(center[1])})

    n_dup = int(round(config.duplicate_fraction * len(pois)))
    if n_dup:
        for idx in np.sort(rng.choice(len(pois), size=n_dup, replace=False)):
            src = pois[idx]
            others = [l for l in ALL_LABELS if l != src.label]
            alt = others[int(rng.integers(len(others)))]
            pois.append(PoiRecord(src.location, src.name, alt, src.city, src.area, src.address))

    logger.info(f"Generated synthetic city: {len(pois)} POIs in {len(plan)} blobs ({n_dup} duplicates)")
    return SyntheticCity(pois=pois, blob_centers=pd.DataFrame(center_rows, columns=["label", "blob", "lng", "lat"]))


def _jitter(origins: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Move every origin by its own (east, north) meter offset"""
    scale = math.radians(1.0) * EARTH_RADIUS_M
    lng = origins[:, 0] + offsets[:, 0] / (scale * np.cos(np.radians(origins[:, 1])))
    lat = origins[:, 1] + offsets[:, 1] / scale
    return np.column_stack([lng, lat])


def _draw_profile(config: SynthConfig, rng: np.random.Generator) -> Dict[str, int]:
    return {a: int(rng.choice(BUILTIN_ATTRIBUTES[a].k_classes, p=config.class_weights(a))) for a in config.attributes}


def generate_passengers(
    config: SynthConfig, city: Union[SyntheticCity, Sequence[PoiRecord]]
) -> SyntheticPassengers:
    """
    Sample passengers with planted attribute profiles.

    Each record visits, with probability 1 - noise, a POI of a label drawn
    uniformly from the union of the passenger's seeded labels, otherwise a POI
    drawn uniformly from the whole city. Records are offset from the POI by
    N(0, visit_sigma_m) meters and time-stamped uniformly over the window.
    """
    pois = list(city.pois if isinstance(city, SyntheticCity) else city)
    if not pois:
        raise ConfigError("Cannot generate passengers for a city without POIs")

    rng = np.random.default_rng(config.rng_seed + 1)
    coords = np.array([[p.location.lng, p.location.lat] for p in pois])
    by_label: Dict[PoiLabel, np.ndarray] = {}
    for i, p in enumerate(pois):
        by_label.setdefault(p.label, []).append(i)
    by_label = {label: np.asarray(idx) for label, idx in by_label.items()}

    start = datetime.strptime(config.start_date, "%Y-%m-%d")
    window_s = config.window_days * 86_400

    records: List[TrajectoryRecord] = []
    visit_labels: List[PoiLabel] = []
    truth: Dict[str, Dict[str, str]] = {}
    for n in range(config.n_passengers):
        uid = f"P{n:05d}"
        profile = _draw_profile(config, rng)
        truth[uid] = {a: BUILTIN_ATTRIBUTES[a].class_names[k] for a, k in profile.items()}

        seeded = sorted(
            {label for a, k in profile.items() for label in BUILTIN_ATTRIBUTES[a].seed_map[k] if label in by_label},
            key=lambda l: l.index,
        )
        n_records = int(rng.integers(config.records_min, config.records_max + 1))
        noisy = rng.random(n_records) < config.noise if seeded else np.ones(n_records, dtype=bool)
        chosen = np.empty(n_records, dtype=int)
        for r in range(n_records):
            if noisy[r]:
                chosen[r] = rng.integers(len(pois))
            else:
                members = by_label[seeded[int(rng.integers(len(seeded)))]]
                chosen[r] = members[int(rng.integers(len(members)))]

        offsets = rng.normal(0.0, config.visit_sigma_m, size=(n_records, 2))
        seconds = np.sort(rng.integers(0, window_s, size=n_records))
        located = _jitter(coords[chosen], offsets)
        for r, (lng, lat) in enumerate(located):
            records.append(TrajectoryRecord(
                uid=uid,
                location=GeoPoint(float(lng), float(lat)),
                up_time=start + timedelta(seconds=int(seconds[r])),
            ))
            visit_labels.append(pois[chosen[r]].label)

    logger.info(f"Generated {len(records)} trajectory records for {config.n_passengers} passengers (noise={config.noise})")
    return SyntheticPassengers(records=records, truth=truth, visit_labels=visit_labels)


def write_synthetic_dataset(out_dir: Union[str, Path], config: Optional[SynthConfig] = None) -> Dict[str, Path]:
    """
    Generate a city and passengers and write them as CSVs.

    Returns:
        Paths keyed by pois, trajectories, ground_truth, blob_centers
    """
    config = config or SynthConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    city = generate_city(config)
    passengers = generate_passengers(config, city)
    paths = {
        "pois": write_poi_csv(city.pois, out / "pois.csv"),
        "trajectories": write_trajectory_csv(passengers.records, out / "trajectories.csv"),
        "ground_truth": write_frame(passengers.truth_frame(config.attributes), out / "ground_truth.csv"),
        "blob_centers": write_frame(city.blob_centers, out / "blob_centers.csv", float_format=None),
    }
    logger.info(f"Wrote synthetic dataset to {out}")
    return paths


def load_ground_truth(path: Union[str, Path]) -> Dict[str, Dict[str, str]]:
    """Read ground_truth.csv back into uid -> {attribute: class name}"""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    attrs = [c for c in df.columns if c != "uid"]
    return {row["uid"]: {a: row[a] for a in attrs if row[a]} for _, row in df.iterrows()}


def true_class_index(truth: Mapping[str, Mapping[str, str]], attribute: str) -> Dict[str, int]:
    """Class index per uid for one attribute, using the built-in class order"""
    names = list(BUILTIN_ATTRIBUTES[attribute].class_names)
    return {uid: names.index(classes[attribute]) for uid, classes in truth.items() if attribute in classes}
