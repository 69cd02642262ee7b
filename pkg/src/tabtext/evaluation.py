"""Split, classifier, AUROC, and the sentence-representation ablation grid."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ._kernels import logistic_gd
from .baseline import FeatureMatrix
from .errors import StageError, ValidationError
from .serializer import CombineMode, MissingPolicy, SerializationConfig


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must be in (0, 1)")


def split(
    entities: Sequence[str],
    spec: SplitSpec,
    labels: Optional[Sequence[int]] = None,
) -> tuple[list[str], list[str]]:
    """Deterministic train/test partition of the entity list.

    Train size is round(train_fraction * N). Stratified mode preserves the
    class ratio within one entity per class (largest-remainder allocation).
    """
    n = len(entities)
    if n < 2:
        raise ValidationError("need at least 2 entities to split")
    n_train = int(round(spec.train_fraction * n))
    rng = np.random.default_rng(spec.seed)

    if spec.stratified:
        if labels is None:
            raise ValidationError("stratified split requires labels")
        labels = np.asarray(labels)
        classes = np.unique(labels)
        if len(classes) < 2:
            raise ValidationError("stratified split requires both classes present")
        targets = {c: spec.train_fraction * np.sum(labels == c) for c in classes}
        take = {c: int(np.floor(targets[c])) for c in classes}
        leftover = n_train - sum(take.values())
        for c in sorted(classes, key=lambda c: -(targets[c] - np.floor(targets[c]))):
            if leftover <= 0:
                break
            take[c] += 1
            leftover -= 1
        train_idx: list[int] = []
        for c in classes:
            members = np.flatnonzero(labels == c)
            perm = rng.permutation(len(members))
            train_idx.extend(members[perm[: take[c]]])
    else:
        perm = rng.permutation(n)
        train_idx = list(perm[:n_train])

    train_set = set(train_idx)
    train = [entities[i] for i in range(n) if i in train_set]
    test = [entities[i] for i in range(n) if i not in train_set]
    return train, test


def split_hash(test_ids: Sequence[str]) -> str:
    """Stable digest of a test partition, for paired-comparison logging."""
    joined = "\n".join(sorted(test_ids))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve via Mann-Whitney rank summation.

    Equals the fraction of positive-negative pairs where the positive
    outscores the negative, ties counted 1/2. O(N log N).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUROC needs at least one positive and one negative")
    ranks = rankdata(scores, method="average")
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class LinearClassifier:
    """Logistic model fit by deterministic full-batch gradient descent."""

    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray  # 0 for ignored (zero-variance) features

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        scale = np.where(self.feature_scale > 0, self.feature_scale, 1.0)
        Xs = (X - self.feature_mean) / scale
        Xs = Xs * (self.feature_scale > 0)
        return Xs @ self.weights + self.bias


def fit_linear_classifier(
    train: FeatureMatrix,
    *,
    steps: int = 500,
    lr: float = 0.1,
    l2: float = 1e-4,
) -> LinearClassifier:
    """Fit the built-in classifier: zero init, fixed step, L2, 500 iterations.

    Features are standardized internally by train-set mean/std; zero-variance
    features are ignored. Fully deterministic.
    """
    if train.labels is None:
        raise ValidationError("training requires labels")
    y = np.asarray(train.labels, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise ValidationError("cannot fit a classifier on a single class")
    X = np.asarray(train.values, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    Xs = (X - mean) / scale
    Xs = np.ascontiguousarray(Xs * (std > 0))
    w, b = logistic_gd(Xs, np.ascontiguousarray(y), steps, lr, l2)
    return LinearClassifier(
        weights=np.asarray(w), bias=float(b), feature_mean=mean, feature_scale=np.where(std > 0, std, 0.0)
    )


POLICY_LABELS = {
    MissingPolicy.EXCLUDE: "Exclusion",
    MissingPolicy.ENCODE_MISSING: "Is missing",
    MissingPolicy.ZERO_PAD: "Is 0",
    MissingPolicy.KEEP_ORIGINAL: "Original",
}
META_LABELS = {True: "Include", False: "Does not Include"}
DESC_LABELS = {True: "Yes", False: "No"}
COMBINE_LABELS = {
    CombineMode.SEPARATE: "Separate",
    CombineMode.SINGLE_PARAGRAPH: "Single Paragraph",
}


@dataclass(frozen=True)
class AblationRow:
    config: SerializationConfig
    test_auroc: float
    split_hash: str


@dataclass
class AblationReport:
    """Grid results sorted by test AUROC plus per-axis aggregate means."""

    rows: list[AblationRow]
    extended: bool = False

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: -r.test_auroc)

    def axis_means(self) -> dict[str, dict[str, float]]:
        def mean_over(select: Callable[[SerializationConfig], bool]) -> float:
            hits = [r.test_auroc for r in self.rows if select(r.config)]
            return float(np.mean(hits))

        means: dict[str, dict[str, float]] = {
            "missing_policy": {
                POLICY_LABELS[p]: mean_over(lambda c, p=p: c.missing_policy is p)
                for p in MissingPolicy
            },
            "include_meta": {
                META_LABELS[v]: mean_over(lambda c, v=v: c.include_meta is v)
                for v in (True, False)
            },
            "descriptive": {
                DESC_LABELS[v]: mean_over(lambda c, v=v: c.descriptive is v)
                for v in (True, False)
            },
        }
        if self.extended:
            means["combine_sources"] = {
                COMBINE_LABELS[m]: mean_over(lambda c, m=m: c.combine_sources is m)
                for m in CombineMode
            }
        return means

    def render(self) -> str:
        lines = ["Missing Handling | Meta Info | Descriptiveness | Test AUC"]
        if self.extended:
            lines = [
                "Missing Handling | Meta Info | Descriptiveness | Sources | Test AUC"
            ]
        lines.append("-" * len(lines[0]))
        for row in self.rows:
            cfg = row.config
            fields = [
                POLICY_LABELS[cfg.missing_policy],
                META_LABELS[cfg.include_meta],
                DESC_LABELS[cfg.descriptive],
            ]
            if self.extended:
                fields.append(COMBINE_LABELS[cfg.combine_sources])
            fields.append(f"{row.test_auroc:.3f}")
            lines.append(" | ".join(fields))
        for axis, table in self.axis_means().items():
            lines.append("")
            lines.append(f"Aggregated by {axis}:")
            for value, mean in table.items():
                lines.append(f"  {value}: {mean:.3f}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "missing_policy": r.config.missing_policy.value,
                    "include_meta": r.config.include_meta,
                    "descriptive": r.config.descriptive,
                    "combine_sources": r.config.combine_sources.value,
                    "test_auroc": r.test_auroc,
                    "split_hash": r.split_hash,
                }
                for r in self.rows
            ],
            "axis_means": self.axis_means(),
        }


def grid_points(extended: bool = False) -> list[SerializationConfig]:
    """The 16-point ablation grid (32 with the source-combination axis)."""
    combine_values = (
        list(CombineMode) if extended else [CombineMode.SEPARATE]
    )
    points = []
    for policy in MissingPolicy:
        for meta in (True, False):
            for descriptive in (True, False):
                for combine in combine_values:
                    points.append(
                        SerializationConfig(
                            missing_policy=policy,
                            include_meta=meta,
                            descriptive=descriptive,
                            combine_sources=combine,
                        )
                    )
    return points


def evaluate_features(
    features: FeatureMatrix, spec: SplitSpec
) -> tuple[float, str]:
    """Split, fit the built-in classifier, and score the test set."""
    if features.labels is None:
        raise ValidationError("evaluation requires labels")
    train_ids, test_ids = split(features.entity_ids, spec, features.labels)
    pos = {e: i for i, e in enumerate(features.entity_ids)}
    train_idx = [pos[e] for e in train_ids]
    test_idx = [pos[e] for e in test_ids]
    train = FeatureMatrix(
        entity_ids=train_ids,
        feature_names=features.feature_names,
        values=features.values[train_idx],
        labels=features.labels[train_idx],
    )
    model = fit_linear_classifier(train)
    scores = model.scores(features.values[test_idx])
    return auroc(scores, features.labels[test_idx]), split_hash(test_ids)


def run_ablation(
    feature_builder: Callable[[SerializationConfig], FeatureMatrix],
    spec: SplitSpec,
    extended: bool = False,
) -> AblationReport:
    """Evaluate every grid point under one shared train/test split.

    ``feature_builder`` maps a serialization config to the labeled feature
    matrix (serialize -> embed -> aggregate). The same split seed is used for
    every point so AUROC differences reflect representation, not split noise.
    """
    rows = []
    for config in grid_points(extended):
        try:
            features = feature_builder(config)
            score, shash = evaluate_features(features, spec)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(
                "ablate",
                f"grid point ({config.missing_policy.value}, "
                f"meta={config.include_meta}, descriptive={config.descriptive}, "
                f"{config.combine_sources.value}) failed: {exc}",
            ) from exc
        rows.append(AblationRow(config=config, test_auroc=score, split_hash=shash))
    return AblationReport(rows=rows, extended=extended)
