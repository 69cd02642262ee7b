"""Seeded synthetic multi-table corpora with a known label mechanism.

Stands in for confidential clinical data: a static demographics table (with a
high-cardinality diagnosis text column), a timestamped vitals table, and a
labels file. The label signal is injected through a categorical diagnosis
token so that a text pipeline can genuinely recover it while the traditional
baseline, which drops free-text columns, cannot.

The ``informative_missingness`` switch produces a corpus where only the
pattern of absent values predicts the label: values themselves are noise and
missing cells are written as empty strings.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

SIGNAL_WORDS = (
    "septic shock",
    "cardiac arrest",
    "acute respiratory failure",
    "severe hemorrhage",
)
BENIGN_WORDS = (
    "routine observation",
    "stable recovery",
    "scheduled followup",
    "minor sprain",
    "mild dehydration",
)

_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"


@dataclass
class CorpusSpec:
    seed: int = 0
    n_entities: int = 1590
    positive_rate: float = 121 / 1590
    missingness_rate: float = 0.2
    informative_missingness: bool = False
    # diagnosis channel: P(signal word | y)
    p_signal_pos: float = 0.95
    p_signal_neg: float = 0.02
    # mild numeric signal so the baseline is better than chance
    age_shift: float = 7.0
    heart_rate_shift: float = 6.0
    # informative-missingness channel: P(missing | y)
    p_missing_pos: float = 0.85
    p_missing_neg: float = 0.10
    missing_token: str = "NaN"

    def __post_init__(self):
        for rate in (
            self.positive_rate,
            self.missingness_rate,
            self.p_signal_pos,
            self.p_signal_neg,
            self.p_missing_pos,
            self.p_missing_neg,
        ):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"rate {rate} outside [0, 1]")
        if self.informative_missingness:
            # only missingness may carry signal in this mode
            self.missing_token = ""


DEMOGRAPHICS_SCHEMA = {
    "meta": {
        "table_title": "Demographics",
        "description": "patient background and admission diagnosis",
    },
    "entity_column": "id",
    "time_column": None,
    "columns": [
        {"name": "id", "kind": "categorical"},
        {
            "name": "age",
            "kind": "numeric",
            "unit": "years",
            "descriptive_template": "The patient is {value} years old",
        },
        {"name": "gender", "kind": "binary"},
        {
            "name": "bmi",
            "kind": "numeric",
            "descriptive_template": "The body mass index is {value}",
        },
        {"name": "note_a", "kind": "free_text", "label": "first note"},
        {"name": "note_b", "kind": "free_text", "label": "second note"},
        {"name": "note_c", "kind": "free_text", "label": "third note"},
        {"name": "diagnosis", "kind": "free_text"},
    ],
}

VITALS_SCHEMA = {
    "meta": {
        "table_title": "Vitals",
        "description": "timestamped bedside measurements",
    },
    "entity_column": "id",
    "time_column": "hour",
    "columns": [
        {"name": "id", "kind": "categorical"},
        {"name": "hour", "kind": "timestamp"},
        {
            "name": "heart_rate",
            "kind": "numeric",
            "unit": "bpm",
            "descriptive_template": "The heart rate is {value} beats per minute",
        },
        {"name": "resp_rate", "kind": "numeric", "label": "respiratory rate"},
    ],
}


def _word(rng: np.random.Generator, length: int = 6) -> str:
    return "".join(_ALPHABET[i] for i in rng.integers(0, len(_ALPHABET), size=length))


def generate(spec: CorpusSpec, out_dir: Union[str, Path]) -> Path:
    """Write a corpus (data + schema + labels + ground truth) to out_dir.

    Deterministic given the seed: two runs produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    n = spec.n_entities
    ids = [f"p{i:05d}" for i in range(n)]
    y = (rng.random(n) < spec.positive_rate).astype(int)

    age_shift = 0.0 if spec.informative_missingness else spec.age_shift
    hr_shift = 0.0 if spec.informative_missingness else spec.heart_rate_shift
    age = rng.normal(55.0 + age_shift * y, 12.0)
    gender = np.where(rng.random(n) < 0.5, "female", "male")
    bmi = rng.normal(27.0, 4.0, size=n)

    if spec.informative_missingness:
        p_missing = np.where(y == 1, spec.p_missing_pos, spec.p_missing_neg)
        p_signal = np.full(n, 0.0)
    else:
        p_missing = np.full(n, spec.missingness_rate)
        p_signal = np.where(y == 1, spec.p_signal_pos, spec.p_signal_neg)

    # informative mode: missingness lives on the three unique-word note
    # columns; every other column is pure noise (the diagnosis text gets a
    # label-independent random length so sentence-length effects are noise).
    bmi_missing = (
        np.zeros(n, dtype=bool)
        if spec.informative_missingness
        else rng.random(n) < p_missing
    )
    note_missing = np.column_stack([rng.random(n) < p_missing for _ in range(3)])
    has_signal = rng.random(n) < p_signal
    if spec.informative_missingness:
        diagnosis = [
            " ".join(_word(rng) for _ in range(int(rng.integers(3, 10))))
            for _ in range(n)
        ]
    else:
        diagnosis = [
            SIGNAL_WORDS[rng.integers(0, len(SIGNAL_WORDS))]
            if has_signal[i]
            else BENIGN_WORDS[rng.integers(0, len(BENIGN_WORDS))]
            for i in range(n)
        ]
    notes = [[_word(rng) for _ in range(3)] for _ in range(n)]

    demo_lines = ["id,age,gender,bmi,note_a,note_b,note_c,diagnosis"]
    for i in range(n):
        demo_lines.append(
            ",".join(
                [
                    ids[i],
                    f"{age[i]:.1f}",
                    str(gender[i]),
                    spec.missing_token if bmi_missing[i] else f"{bmi[i]:.1f}",
                    *[
                        spec.missing_token if note_missing[i, k] else notes[i][k]
                        for k in range(3)
                    ],
                    diagnosis[i],
                ]
            )
        )

    vitals_lines = ["id,hour,heart_rate,resp_rate"]
    for i in range(n):
        n_obs = int(rng.integers(1, 11))
        hours = np.sort(np.round(rng.uniform(0.0, 48.0, size=n_obs), 1))
        hr = rng.normal(78.0 + hr_shift * y[i], 10.0, size=n_obs)
        rr = rng.normal(16.0 + 0.25 * hr_shift * y[i], 3.0, size=n_obs)
        for k in range(n_obs):
            vitals_lines.append(
                f"{ids[i]},{hours[k]:.1f},{hr[k]:.1f},{rr[k]:.1f}"
            )

    label_lines = ["entity_id,label"]
    label_lines.extend(f"{ids[i]},{int(y[i])}" for i in range(n))

    (out / "demographics.csv").write_text("\n".join(demo_lines) + "\n", encoding="utf-8")
    (out / "vitals.csv").write_text("\n".join(vitals_lines) + "\n", encoding="utf-8")
    (out / "labels.csv").write_text("\n".join(label_lines) + "\n", encoding="utf-8")

    import yaml

    (out / "demographics.schema.yaml").write_text(
        yaml.safe_dump(DEMOGRAPHICS_SCHEMA, sort_keys=False), encoding="utf-8"
    )
    (out / "vitals.schema.yaml").write_text(
        yaml.safe_dump(VITALS_SCHEMA, sort_keys=False), encoding="utf-8"
    )

    truth = {
        "seed": spec.seed,
        "n_entities": n,
        "n_positive": int(y.sum()),
        "informative_missingness": spec.informative_missingness,
        "mechanism": {
            "age": {"mean_neg": 55.0, "shift_pos": age_shift, "std": 12.0},
            "heart_rate": {"mean_neg": 78.0, "shift_pos": hr_shift, "std": 10.0},
            "resp_rate": {"mean_neg": 16.0, "shift_pos": 0.25 * hr_shift, "std": 3.0},
            "diagnosis": {
                "p_signal_pos": float(p_signal[y == 1].mean()) if y.any() else 0.0,
                "p_signal_neg": 0.0
                if spec.informative_missingness
                else spec.p_signal_neg,
            },
            "missingness": {
                "p_missing_pos": spec.p_missing_pos
                if spec.informative_missingness
                else spec.missingness_rate,
                "p_missing_neg": spec.p_missing_neg
                if spec.informative_missingness
                else spec.missingness_rate,
                "columns": ["note_a", "note_b", "note_c"]
                if spec.informative_missingness
                else ["bmi", "note_a", "note_b", "note_c"],
            },
        },
    }
    (out / "ground_truth.json").write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


def oracle_scores(corpus_dir: Union[str, Path]) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Exact log-likelihood-ratio scores under the generative mechanism.

    Returns (entity_ids, scores, labels). The AUROC of these scores is the
    empirical Bayes-optimal performance on this corpus; no pipeline should
    beat it by more than statistical noise.
    """
    out = Path(corpus_dir)
    truth = json.loads((out / "ground_truth.json").read_text(encoding="utf-8"))
    mech = truth["mechanism"]

    labels: dict[str, int] = {}
    for line in (out / "labels.csv").read_text(encoding="utf-8").splitlines()[1:]:
        entity, lab = line.split(",")
        labels[entity] = int(lab)

    scores = {e: 0.0 for e in labels}

    def gauss_llr(x: float, mean_neg: float, shift: float, std: float) -> float:
        if shift == 0.0:
            return 0.0
        mean_pos = mean_neg + shift
        return ((x - mean_neg) ** 2 - (x - mean_pos) ** 2) / (2 * std**2)

    def bern_llr(hit: bool, p_pos: float, p_neg: float) -> float:
        p_pos = min(max(p_pos, 1e-9), 1 - 1e-9)
        p_neg = min(max(p_neg, 1e-9), 1 - 1e-9)
        if hit:
            return math.log(p_pos / p_neg)
        return math.log((1 - p_pos) / (1 - p_neg))

    miss = mech["missingness"]
    diag = mech["diagnosis"]
    with open(out / "demographics.csv", encoding="utf-8", newline="") as handle:
        for record in csv.DictReader(handle):
            score = gauss_llr(
                float(record["age"]),
                mech["age"]["mean_neg"],
                mech["age"]["shift_pos"],
                mech["age"]["std"],
            )
            if diag["p_signal_neg"] > 0.0 or diag["p_signal_pos"] > 0.0:
                score += bern_llr(
                    record["diagnosis"] in SIGNAL_WORDS,
                    diag["p_signal_pos"],
                    diag["p_signal_neg"],
                )
            for column in miss["columns"]:
                is_missing = record[column].strip().lower() in ("", "nan")
                score += bern_llr(
                    is_missing, miss["p_missing_pos"], miss["p_missing_neg"]
                )
            scores[record["id"]] += score

    hr = mech["heart_rate"]
    rr = mech["resp_rate"]
    for line in (out / "vitals.csv").read_text(encoding="utf-8").splitlines()[1:]:
        entity, _hour, heart, resp = line.split(",")
        scores[entity] += gauss_llr(float(heart), hr["mean_neg"], hr["shift_pos"], hr["std"])
        scores[entity] += gauss_llr(float(resp), rr["mean_neg"], rr["shift_pos"], rr["std"])

    ids = sorted(labels)
    return (
        ids,
        np.array([scores[e] for e in ids]),
        np.array([labels[e] for e in ids]),
    )
