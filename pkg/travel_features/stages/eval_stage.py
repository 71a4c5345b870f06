"""
Eval Stage - 80-20 held-out prediction quality per attribute
"""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from ..errors import InputDataError
from ..models.metrics import MAE_NOTE, macro_mean_report, prediction_metrics
from ..models.plda import fold_in
from ..models.poi_matrix import TravelPatternMatrix
from ..utils.synthgen import load_ground_truth, true_class_index
from ..utils.table_writer import write_records
from .base_stage import BaseStage
from .lda_stage import fit_all_attributes

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["attribute", "n", "recall", "precision", "f1", "mae"]


def split_passengers(uids: List[str], train_fraction: float, rng_seed: int) -> Tuple[List[str], List[str]]:
    """Deterministic random split; the train side has floor(train_fraction * M) passengers"""
    order = np.random.default_rng(rng_seed).permutation(len(uids))
    n_train = int(np.floor(train_fraction * len(uids)))
    train = sorted(uids[i] for i in order[:n_train])
    test = sorted(uids[i] for i in order[n_train:])
    return train, test


class EvalStage(BaseStage):
    """Trains on 80% of passengers, folds in the rest and scores against ground truth"""

    name = "eval"
    requires = ("matrix",)
    outputs = ("prediction_report.csv",)

    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        self.config.require_paths(["ground_truth_csv"])
        truth = load_ground_truth(self.config.paths.ground_truth_csv)
        matrix = TravelPatternMatrix.from_frame(self.read_artifact("pattern_matrix.csv", dtype={"uid": str}))

        uids = [u for u in matrix.passengers if u in truth]
        if len(uids) < 2:
            raise InputDataError("Fewer than two passengers have both a pattern row and ground truth")
        train, test = split_passengers(uids, self.config.eval.train_fraction, self.config.rng_seed)
        if not test:
            raise InputDataError("Held-out split is empty")

        fitted = fit_all_attributes(matrix.subset(train), self.config.lda, self.config.rng_seed, self.config.n_jobs)
        test_matrix = matrix.subset(test)

        reports = []
        for name, (model, _) in fitted.items():
            classes = true_class_index(truth, name)
            held = [u for u in test if u in classes]
            if not held:
                logger.warning(f"No held-out ground truth for {name}; skipped")
                continue
            counts = test_matrix.subset(held).restrict(model.vocab)
            _, theta = fold_in(model, counts, n_sweeps=self.config.lda.fold_in_sweeps,
                               rng_seed=self.config.rng_seed, uids=held, sampler=self.config.lda.sampler)
            y_true = [classes[u] for u in held]
            y_pred = np.argmax(theta, axis=1)
            report = prediction_metrics(y_true, y_pred, theta, attribute=name)
            logger.info(f"{name}: recall={report.recall:.3f} precision={report.precision:.3f} "
                        f"f1={report.f1:.3f} mae={report.mae:.3f}")
            reports.append(report)

        if not reports:
            raise InputDataError("Ground truth covers none of the configured attributes")
        rows = [r.to_row() for r in reports] + [macro_mean_report(reports).to_row()]
        split_rows = [{"uid": u, "split": "train"} for u in train] + [{"uid": u, "split": "test"} for u in test]

        outputs = [
            write_records(rows, self.artifact("prediction_report.csv"), REPORT_COLUMNS,
                          header_comment=f"macro-averaged over classes; {MAE_NOTE}"),
            write_records(split_rows, self.artifact("eval_split.csv"), ["uid", "split"]),
        ]
        return {"outputs": outputs, "n_train": len(train), "n_test": len(test),
                "recall": {r.attribute: r.recall for r in reports}}
