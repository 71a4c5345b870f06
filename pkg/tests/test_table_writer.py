import numpy as np

from travel_features.models.poi_matrix import TravelPatternMatrix
from travel_features.utils.ingest import ALL_LABELS
from travel_features.utils.table_writer import read_frame, write_frame, write_records


def test_hash_characters_in_values_survive_a_round_trip(tmp_path):
    path = write_records([{"uid": "card#001", "n": 1}, {"uid": "card#002", "n": 2}, {"uid": "#3", "n": 3}],
                         tmp_path / "rows.csv", ["uid", "n"])
    df = read_frame(path, dtype={"uid": str})
    assert df["uid"].tolist() == ["card#001", "card#002", "#3"]
    assert df["n"].tolist() == [1, 2, 3]


def test_only_leading_comment_lines_are_skipped(tmp_path):
    path = write_records([{"uid": "a#b", "score": 0.5}], tmp_path / "report.csv", ["uid", "score"],
                         header_comment="first note\nsecond # note")
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# first note\n# second # note\nuid,score\n")

    df = read_frame(path, dtype={"uid": str})
    assert list(df.columns) == ["uid", "score"]
    assert df["uid"].tolist() == ["a#b"]


def test_pattern_matrix_keeps_passengers_with_hash_ids_apart(tmp_path):
    counts = np.zeros((2, len(ALL_LABELS)), dtype=np.int64)
    counts[0, 0] = 1000
    counts[1, 1] = 1000
    matrix = TravelPatternMatrix(passengers=["card#001", "card#002"], counts=counts, row_total=1000)

    path = write_frame(matrix.to_frame(), tmp_path / "pattern_matrix.csv")
    loaded = TravelPatternMatrix.from_frame(read_frame(path, dtype={"uid": str}))
    assert loaded.passengers == ["card#001", "card#002"]
    np.testing.assert_array_equal(loaded.counts, counts)
