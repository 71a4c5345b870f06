"""
POI and bus-trajectory ingestion.

Loads the map POI export and the bus card trajectory export into typed records,
dropping and counting unusable rows, then deduplicates POIs and partitions
trajectories per passenger.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from ..errors import ConfigError, InputDataError, InvalidCoordinateError, MalformedHeaderError
from ..models.geo import GeoPoint
from .table_writer import write_frame

logger = logging.getLogger(__name__)

POI_COLUMNS = ["lat", "lng", "name", "label", "city", "area", "address"]
TRAJECTORY_COLUMNS = ["uid", "lng", "lat", "up_time"]
TIMESTAMP_FORMAT = "%Y/%m/%d %H:%M:%S"


class PoiLabel(Enum):
    """The 17 retained POI industry labels, in map-classification order"""

    FOOD = "food"
    HOTEL = "hotel"
    SHOPPING = "shopping"
    SERVICE = "service"
    BEAUTY = "beauty"
    TRAVEL = "travel"
    ENTERTAINMENT = "entertainment"
    SPORTS = "sports"
    EDUCATION = "education"
    MEDIA = "media"
    MEDICINE = "medicine"
    CAR = "car"
    TRAFFIC = "traffic"
    FINANCE = "finance"
    ESTATE = "estate"
    COMPANY = "company"
    GOVERNMENT = "government"

    @property
    def index(self) -> int:
        return ALL_LABELS.index(self)

    @classmethod
    def parse(cls, text: str) -> "PoiLabel":
        """
        Parse a record name ("food") or map category name ("Delicious Food").

        Raises:
            ExcludedLabelError: for the four unused map categories
            ValueError: for anything else unrecognised
        """
        key = " ".join(str(text).strip().lower().split())
        if key in EXCLUDED_CATEGORIES:
            raise ExcludedLabelError(text)
        try:
            return cls(key)
        except ValueError:
            pass
        if key in _CATEGORY_NAMES:
            return _CATEGORY_NAMES[key]
        raise ValueError(f"Unknown POI label: {text!r}")


ALL_LABELS: List[PoiLabel] = list(PoiLabel)
LABEL_NAMES: List[str] = [label.value for label in ALL_LABELS]

_CATEGORY_NAMES = {
    "delicious food": PoiLabel.FOOD,
    "hotel": PoiLabel.HOTEL,
    "shopping": PoiLabel.SHOPPING,
    "life services": PoiLabel.SERVICE,
    "beauty": PoiLabel.BEAUTY,
    "tourist attractions": PoiLabel.TRAVEL,
    "leisure and entertainment": PoiLabel.ENTERTAINMENT,
    "fitness": PoiLabel.SPORTS,
    "educational training": PoiLabel.EDUCATION,
    "culture and media": PoiLabel.MEDIA,
    "medical treatment": PoiLabel.MEDICINE,
    "car services": PoiLabel.CAR,
    "traffic facilities": PoiLabel.TRAFFIC,
    "financial": PoiLabel.FINANCE,
    "property": PoiLabel.ESTATE,
    "incorporated business": PoiLabel.COMPANY,
    "government institutional": PoiLabel.GOVERNMENT,
}

EXCLUDED_CATEGORIES = frozenset({
    "entrances and exits",
    "natural features",
    "administrative landmark",
    "gate address",
})


class ExcludedLabelError(ValueError):
    """Row carries one of the deliberately unused map categories"""


@dataclass(frozen=True)
class PoiRecord:
    location: GeoPoint
    name: str
    label: PoiLabel
    city: str = ""
    area: str = ""
    address: str = ""

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise InputDataError("POI name must be non-empty")


@dataclass(frozen=True)
class TrajectoryRecord:
    uid: str
    location: GeoPoint
    up_time: datetime

    def __post_init__(self):
        if not self.uid or not str(self.uid).strip():
            raise InputDataError("Trajectory uid must be non-empty")


@dataclass
class DropReport:
    """Row accounting for one loaded file"""

    total_rows: int = 0
    retained: int = 0
    counts: Dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.counts[reason] = self.counts.get(reason, 0) + 1

    @property
    def dropped(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> Dict[str, int]:
        return {"total_rows": self.total_rows, "retained": self.retained, **dict(sorted(self.counts.items()))}


def _read_csv(path: Union[str, Path], expected: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise InputDataError(f"Input file not found: {path}")

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputDataError(f"Could not parse {path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise MalformedHeaderError(f"{path} has no header row") from e

    normalized = {col: str(col).strip().lower() for col in df.columns}
    missing = [c for c in expected if c not in normalized.values()]
    if missing:
        raise MalformedHeaderError(
            f"{path}: header {list(df.columns)} is missing required columns {missing}"
        )
    return df.rename(columns=normalized)[list(expected)]


def _is_blank(value) -> bool:
    return value is None or str(value).strip() == ""


def load_poi_csv(path: Union[str, Path]) -> Tuple[List[PoiRecord], DropReport]:
    """
    Load a POI CSV with header `lat,lng,name,label,city,area,address` (any order/case).

    Rows with an empty mandatory field (lat, lng, name, label), an excluded or
    unknown label, or an invalid coordinate are dropped and counted.

    Returns:
        (retained records, drop report)
    """
    df = _read_csv(path, POI_COLUMNS)
    report = DropReport(total_rows=len(df))
    records: List[PoiRecord] = []

    for row in df.itertuples(index=False):
        if any(_is_blank(getattr(row, col)) for col in ("lat", "lng", "name", "label")):
            report.drop("null")
            continue
        try:
            label = PoiLabel.parse(row.label)
        except ExcludedLabelError:
            report.drop("excluded_label")
            continue
        except ValueError:
            report.drop("unknown_label")
            continue
        try:
            location = GeoPoint(float(row.lng), float(row.lat))
        except (InvalidCoordinateError, ValueError):
            report.drop("invalid_coordinate")
            continue

        records.append(PoiRecord(
            location=location,
            name=str(row.name).strip(),
            label=label,
            city=str(row.city).strip(),
            area=str(row.area).strip(),
            address=str(row.address).strip(),
        ))

    report.retained = len(records)
    logger.info(f"Loaded {report.retained}/{report.total_rows} POIs from {path} (dropped: {report.counts})")
    return records, report


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(str(text).strip(), TIMESTAMP_FORMAT)


def format_timestamp(ts: datetime) -> str:
    """Render a timestamp without zero padding on month/day, e.g. 2018/2/1 11:23:56"""
    return f"{ts.year}/{ts.month}/{ts.day} {ts:%H:%M:%S}"


def load_trajectory_csv(path: Union[str, Path]) -> Tuple[List[TrajectoryRecord], DropReport]:
    """
    Load a trajectory CSV with header `uid,lng,lat,up_time`.

    `up_time` must read as `YYYY/M/D HH:MM:SS`; timestamps are naive local time.
    """
    df = _read_csv(path, TRAJECTORY_COLUMNS)
    report = DropReport(total_rows=len(df))
    records: List[TrajectoryRecord] = []

    for row in df.itertuples(index=False):
        if any(_is_blank(getattr(row, col)) for col in TRAJECTORY_COLUMNS):
            report.drop("null")
            continue
        try:
            location = GeoPoint(float(row.lng), float(row.lat))
        except (InvalidCoordinateError, ValueError):
            report.drop("invalid_coordinate")
            continue
        try:
            up_time = parse_timestamp(row.up_time)
        except ValueError:
            report.drop("bad_timestamp")
            continue
        records.append(TrajectoryRecord(uid=str(row.uid).strip(), location=location, up_time=up_time))

    report.retained = len(records)
    logger.info(f"Loaded {report.retained}/{report.total_rows} trajectory points from {path} (dropped: {report.counts})")
    return records, report


def dedup_poi(records: Iterable[PoiRecord]) -> List[PoiRecord]:
    """
    Collapse POIs sharing (name, lng, lat) with coordinates rounded to 1e-6 degrees.

    The first occurrence wins, so a POI listed under two categories keeps the
    first label seen. Order is otherwise preserved.
    """
    seen = set()
    unique: List[PoiRecord] = []
    for rec in records:
        key = (rec.name, round(rec.location.lng, 6), round(rec.location.lat, 6))
        if key in seen:
            continue
        seen.add(key)
        unique.append(rec)
    return unique


def partition_by_uid(records: Iterable[TrajectoryRecord]) -> Dict[str, List[TrajectoryRecord]]:
    """Group records per passenger, each list sorted ascending by up_time (stable)"""
    partition: Dict[str, List[TrajectoryRecord]] = {}
    for rec in records:
        partition.setdefault(rec.uid, []).append(rec)
    return {uid: sorted(recs, key=lambda r: r.up_time) for uid, recs in partition.items()}


def filter_min_records(
    partition: Dict[str, List[TrajectoryRecord]], threshold: int = 100
) -> Dict[str, List[TrajectoryRecord]]:
    """Keep passengers with strictly more than `threshold` records"""
    if threshold < 0:
        raise ConfigError(f"min_records threshold must be >= 0, got {threshold}")
    return {uid: recs for uid, recs in partition.items() if len(recs) > threshold}


def record_count_distribution(
    partition: Dict[str, List[TrajectoryRecord]], threshold: int = 100
) -> pd.DataFrame:
    """Per-passenger record counts, flagged against the retention threshold"""
    rows = [
        {"uid": uid, "n_records": len(recs), "above_threshold": len(recs) > threshold}
        for uid, recs in partition.items()
    ]
    df = pd.DataFrame(rows, columns=["uid", "n_records", "above_threshold"])
    return df.sort_values(["n_records", "uid"], ascending=[False, True]).reset_index(drop=True)


def label_counts(records: Iterable[PoiRecord]) -> Dict[PoiLabel, int]:
    counts = Counter(rec.label for rec in records)
    return {label: counts.get(label, 0) for label in ALL_LABELS}


def poi_frame(records: Sequence[PoiRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "lat": rec.location.lat,
                "lng": rec.location.lng,
                "name": rec.name,
                "label": rec.label.value,
                "city": rec.city,
                "area": rec.area,
                "address": rec.address,
            }
            for rec in records
        ],
        columns=POI_COLUMNS,
    )


def trajectory_frame(records: Sequence[TrajectoryRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "uid": rec.uid,
                "lng": rec.location.lng,
                "lat": rec.location.lat,
                "up_time": format_timestamp(rec.up_time),
            }
            for rec in records
        ],
        columns=TRAJECTORY_COLUMNS,
    )


def labels_from_names(names: Optional[Iterable[str]]) -> List[PoiLabel]:
    if names is None:
        return list(ALL_LABELS)
    return [PoiLabel.parse(n) for n in names]


def write_poi_csv(records: Sequence[PoiRecord], path: Union[str, Path]) -> Path:
    return write_frame(poi_frame(records), path, float_format=None)


def write_trajectory_csv(records: Sequence[TrajectoryRecord], path: Union[str, Path]) -> Path:
    return write_frame(trajectory_frame(records), path, float_format=None)
