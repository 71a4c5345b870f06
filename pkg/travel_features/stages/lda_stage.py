"""
LDA Stage - one seeded topic model per passenger attribute
"""

import logging
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..config import LdaConfig
from ..errors import ProfileNotFoundError
from ..models.plda import AttributeConfig, LdaModel, fit_plda, infer_profile, poi_weightings, select_best_model
from ..models.poi_matrix import TravelPatternMatrix
from ..utils.table_writer import write_frame, write_records
from .base_stage import BaseStage

logger = logging.getLogger(__name__)


def fit_attribute(
    counts: np.ndarray, uids: Sequence[str], attr: AttributeConfig, lda: LdaConfig, rng_seed: int
) -> Tuple[LdaModel, List[float]]:
    """
    Fit n_restarts chains (rng seeds rng_seed + i) and keep the most consistent one.

    Args:
        counts: Pattern counts restricted to attr.vocab
        uids: Row identifiers
        attr: Attribute vocabulary and seeds
        lda: Hyperparameters
        rng_seed: Base seed

    Returns:
        (selected model, consistency score per restart)
    """
    candidates = [
        fit_plda(
            counts,
            attr,
            alpha=lda.alpha,
            beta=lda.beta,
            beta_seed=lda.beta_seed,
            n_sweeps=lda.n_sweeps,
            rng_seed=rng_seed + i,
            burn_in=lda.burn_in,
            uids=uids,
            sampler=lda.sampler,
            log_every=lda.log_every,
        )
        for i in range(lda.n_restarts)
    ]
    best, scores = select_best_model(candidates, counts)
    logger.info(f"{attr.name}: consistency scores {[round(s, 4) for s in scores]}, kept rng_seed={best.rng_seed}")
    return best, scores


def fit_all_attributes(
    matrix: TravelPatternMatrix, lda: LdaConfig, rng_seed: int, n_jobs: int = 1
) -> Dict[str, Tuple[LdaModel, List[float]]]:
    """Fit every configured attribute; attributes are independent and run in parallel"""
    configs = lda.attribute_configs()
    results = Parallel(n_jobs=n_jobs)(
        delayed(fit_attribute)(matrix.restrict(cfg.vocab), matrix.passengers, cfg, lda, rng_seed)
        for cfg in configs.values()
    )
    return dict(zip(configs.keys(), results))


class LdaStage(BaseStage):
    """Fits P-LDA per attribute and writes theta, phi, selection scores and profiles"""

    name = "lda"
    requires = ("matrix",)
    outputs = ("profiles.csv",)

    def run(self, request: Dict[str, Any]) -> Dict[str, Any]:
        matrix = TravelPatternMatrix.from_frame(self.read_artifact("pattern_matrix.csv", dtype={"uid": str}))
        fitted = fit_all_attributes(matrix, self.config.lda, self.config.rng_seed, self.config.n_jobs)

        outputs = []
        label_rows = []
        for name, (model, scores) in fitted.items():
            theta = pd.DataFrame(model.theta, columns=[f"class_{k}" for k in range(model.k)])
            theta.insert(0, "uid", model.uids)
            phi = pd.DataFrame(
                [{"class": model.class_names[k], "label": label.value, "weight": float(model.phi[k, w])}
                 for k in range(model.k) for w, label in enumerate(model.vocab)],
                columns=["class", "label", "weight"],
            )
            restarts = [
                {"restart": i, "rng_seed": self.config.rng_seed + i, "consistency": s,
                 "selected": self.config.rng_seed + i == model.rng_seed}
                for i, s in enumerate(scores)
            ]
            outputs += [
                write_frame(theta, self.artifact(f"theta_{name}.csv")),
                write_frame(phi, self.artifact(f"phi_{name}.csv")),
                write_records(restarts, self.artifact(f"consistency_{name}.csv"),
                              ["restart", "rng_seed", "consistency", "selected"]),
            ]
            for class_name, weights in poi_weightings(model).items():
                ranked = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0].index))
                for rank, (label, weight) in enumerate(ranked, start=1):
                    label_rows.append({"attribute": name, "class": class_name, "rank": rank,
                                       "label": label.value, "weight": weight})
            if model.excluded:
                logger.info(f"{name}: {len(model.excluded)} passengers had no tokens in the vocabulary")

        models = {name: model for name, (model, _) in fitted.items()}
        profile_rows = []
        for uid in matrix.passengers:
            try:
                profile = infer_profile(models, uid)
            except ProfileNotFoundError:
                profile_rows.append({"uid": uid, **{f"{name}_class": "" for name in models}})
                continue
            profile_rows.append({"uid": uid, **{f"{name}_class": profile.class_name(name) or "" for name in models}})

        outputs += [
            write_records(label_rows, self.artifact("poi_weightings.csv"),
                          ["attribute", "class", "rank", "label", "weight"]),
            write_records(profile_rows, self.artifact("profiles.csv"), ["uid"] + [f"{name}_class" for name in models]),
        ]
        return {"outputs": outputs, "attributes": list(models), "n_passengers": len(matrix.passengers)}
