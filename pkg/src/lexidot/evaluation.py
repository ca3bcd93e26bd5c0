"""Evaluation protocol: accuracies, buckets, baselines, rater agreement.

Discarded and backend-failed instances count as incorrect throughout, which
keeps accuracy denominators comparable across conditions. Predictions are
``None`` for such instances.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Any, Mapping, Sequence

import numpy as np

from .dotobjects import DOT_OBJECTS, DotRegistry
from .errors import BackendError, DiscardSignal, ValidationError
from .inventory import POSCategory, SenseInventory, simplify_pos
from .pairs import RPCondition, Task, TestInstance, WSDMode, build_rp_pairs, build_wsd_pairs
from .scoring import Backend, select

SIMPLE_MAX_SENSES = 10  # a lemma with more senses counts as Complex


def accuracy(preds: Sequence[str | None], golds: Sequence[str | None]) -> float:
    """Fraction of matching predictions; a None prediction never matches."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not preds:
        raise ValueError("empty prediction list")
    hits = sum(1 for p, g in zip(preds, golds) if p is not None and p == g)
    return hits / len(preds)


def bucket_by_complexity(
    instances: Sequence[TestInstance], inv: SenseInventory
) -> dict[str, list[TestInstance]]:
    """Split instances into Simple (<= 10 senses) and Complex (> 10)."""
    buckets: dict[str, list[TestInstance]] = {"Simple": [], "Complex": []}
    for inst in instances:
        key = "Simple" if inv.sense_count(inst.lemma) <= SIMPLE_MAX_SENSES else "Complex"
        buckets[key].append(inst)
    return buckets


def pos_bucket(inst: TestInstance) -> str:
    """Three-way POS bucket; proper nouns fold into Other for WSD reporting."""
    category = simplify_pos(inst.pos_raw)
    if category is POSCategory.COMMON_NOUN:
        return "Noun"
    if category is POSCategory.VERB:
        return "Verb"
    return "Other"


# ---------------------------------------------------------------------------
# Baselines

@dataclass(frozen=True)
class RandomBaseline:
    analytic: float
    monte_carlo: float
    trials: int
    seed: int


def baseline_random(
    candidate_counts: Sequence[int], seed: int = 0, trials: int = 10_000
) -> RandomBaseline:
    """Accuracy of picking uniformly among each instance's candidates.

    The analytic value is exactly mean(1/k_i); the Monte-Carlo estimate draws
    ``trials`` independent passes with a fixed seed.
    """
    if not candidate_counts:
        raise ValueError("no candidate counts")
    if any(k <= 0 for k in candidate_counts):
        raise ValueError("every instance needs at least one candidate")
    counts = np.asarray(candidate_counts, dtype=float)
    analytic = float(np.mean(1.0 / counts))
    rng = np.random.default_rng(seed)
    probs = 1.0 / counts
    hits = 0
    for _ in range(trials):
        hits += int(np.count_nonzero(rng.random(len(counts)) < probs))
    monte_carlo = hits / (trials * len(counts))
    return RandomBaseline(analytic, monte_carlo, trials, seed)


def mfs_predictions(
    train: Sequence[TestInstance],
    test: Sequence[TestInstance],
    inv: SenseInventory,
) -> list[str | None]:
    """Most-frequent-sense predictions; None where the strategy has no basis.

    A lemma unseen in training, or whose trained senses each occur exactly
    once, yields no prediction. Frequency ties break by inventory order.
    """
    freq: dict[str, Counter[str]] = {}
    for inst in train:
        if inst.gold is not None:
            freq.setdefault(inst.lemma, Counter())[inst.gold] += 1
    preds: list[str | None] = []
    for inst in test:
        counter = freq.get(inst.lemma)
        if not counter:
            preds.append(None)
            continue
        top = max(counter.values())
        if top <= 1:
            preds.append(None)
            continue
        tied = {sid for sid, n in counter.items() if n == top}
        order = {s.sense_id: i for i, s in enumerate(inv.senses(inst.lemma))}
        preds.append(min(tied, key=lambda sid: (order.get(sid, len(order)), sid)))
    return preds


def baseline_mfs(
    train: Sequence[TestInstance],
    test: Sequence[TestInstance],
    inv: SenseInventory,
) -> float:
    preds = mfs_predictions(train, test, inv)
    return accuracy(preds, [inst.gold for inst in test])


@dataclass(frozen=True)
class MostFreqRP:
    overall: float
    per_dot: dict[str, float]


def baseline_mostfreq_rp(
    train: Sequence[TestInstance],
    test: Sequence[TestInstance],
    reg: DotRegistry,
) -> MostFreqRP:
    """Always predict each dot object's majority type class from training."""
    label_counts: dict[str, Counter[str]] = {}
    for inst in train:
        if inst.gold is None:
            continue
        dot = reg.entry(inst.lemma).dot_object
        label_counts.setdefault(dot.name, Counter())[inst.gold] += 1

    majority: dict[str, str] = {}
    for dot_name, counter in label_counts.items():
        order = {name: i for i, name in enumerate(DOT_OBJECTS[dot_name].class_names())}
        top = max(counter.values())
        tied = [name for name, n in counter.items() if n == top]
        majority[dot_name] = min(tied, key=lambda name: order.get(name, len(order)))

    per_dot_hits: dict[str, list[int]] = {}
    overall_hits = []
    for inst in test:
        dot = reg.entry(inst.lemma).dot_object
        hit = int(majority.get(dot.name) is not None and majority[dot.name] == inst.gold)
        per_dot_hits.setdefault(dot.name, []).append(hit)
        overall_hits.append(hit)
    if not overall_hits:
        raise ValueError("empty test set")
    per_dot = {name: sum(hits) / len(hits) for name, hits in sorted(per_dot_hits.items())}
    return MostFreqRP(sum(overall_hits) / len(overall_hits), per_dot)


# ---------------------------------------------------------------------------
# Candidate counts (for the random baseline under each condition)

def wsd_candidate_count(
    inst: TestInstance, inv: SenseInventory, mode: WSDMode
) -> int | None:
    """Candidate count the model faces, or None for a discarded instance."""
    senses = inv.senses(inst.lemma)
    if len(senses) < 2:
        return None
    if mode is WSDMode.POS_GUIDED:
        target_pos = simplify_pos(inst.pos_raw)
        filtered = sum(1 for s in senses if s.pos is target_pos)
        if filtered >= 2:
            return filtered
    return len(senses)


def rp_candidate_count(
    inst: TestInstance, reg: DotRegistry, condition: RPCondition
) -> int:
    entry = reg.entry(inst.lemma)
    return 8 if condition is RPCondition.ALL_TYPES else len(entry.dot_object.classes)


# ---------------------------------------------------------------------------
# Reports

@dataclass(frozen=True)
class BucketStat:
    correct: int
    total: int

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.total if self.total else None

    def to_json(self) -> dict[str, Any]:
        return {"correct": self.correct, "total": self.total, "accuracy": self.accuracy}


@dataclass
class EvalReport:
    task: str
    condition: str
    overall: float
    buckets: dict[str, dict[str, BucketStat]]
    baselines: dict[str, Any]
    counts: dict[str, int]
    config: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "format_version": "1",
            "task": self.task,
            "condition": self.condition,
            "overall": self.overall,
            "buckets": {
                family: {name: stat.to_json() for name, stat in stats.items()}
                for family, stats in self.buckets.items()
            },
            "baselines": self.baselines,
            "counts": self.counts,
            "config": self.config,
        }


def _bucket_stats(
    hits: Mapping[str, list[int]], order: Sequence[str]
) -> dict[str, BucketStat]:
    stats = {}
    for name in order:
        bucket_hits = hits.get(name, [])
        stats[name] = BucketStat(sum(bucket_hits), len(bucket_hits))
    return stats


def wsd_report(
    instances: Sequence[TestInstance],
    preds: Sequence[str | None],
    inv: SenseInventory,
    *,
    condition: str,
    counts: dict[str, int],
    seed: int = 0,
    trials: int = 10_000,
    train: Sequence[TestInstance] | None = None,
    mode: WSDMode = WSDMode.POS_GUIDED,
) -> EvalReport:
    golds = [inst.gold for inst in instances]
    overall = accuracy(preds, golds)

    complexity_hits: dict[str, list[int]] = {}
    pos_hits: dict[str, list[int]] = {}
    for inst, pred in zip(instances, preds):
        hit = int(pred is not None and pred == inst.gold)
        is_simple = inv.sense_count(inst.lemma) <= SIMPLE_MAX_SENSES
        complexity_hits.setdefault("Simple" if is_simple else "Complex", []).append(hit)
        pos_hits.setdefault(pos_bucket(inst), []).append(hit)

    candidate_counts = [
        k for inst in instances if (k := wsd_candidate_count(inst, inv, mode)) is not None
    ]
    baselines: dict[str, Any] = {}
    if candidate_counts:
        scale = len(candidate_counts) / len(instances)
        random_baseline = baseline_random(candidate_counts, seed=seed, trials=trials)
        baselines["random"] = {
            "analytic": random_baseline.analytic * scale,
            "monte_carlo": random_baseline.monte_carlo * scale,
            "trials": trials,
            "seed": seed,
        }
    if train is not None:
        baselines["mfs"] = baseline_mfs(train, instances, inv)

    return EvalReport(
        task="WSD",
        condition=condition,
        overall=overall,
        buckets={
            "complexity": _bucket_stats(complexity_hits, ["Simple", "Complex"]),
            "pos": _bucket_stats(pos_hits, ["Noun", "Verb", "Other"]),
        },
        baselines=baselines,
        counts=counts,
        config={"seed": seed, "mode": mode.value},
    )


def rp_report(
    instances: Sequence[TestInstance],
    preds: Sequence[str | None],
    reg: DotRegistry,
    *,
    condition: str,
    counts: dict[str, int],
    seed: int = 0,
    trials: int = 10_000,
    train: Sequence[TestInstance] | None = None,
    rp_condition: RPCondition = RPCondition.DOTTED,
) -> EvalReport:
    golds = [inst.gold for inst in instances]
    overall = accuracy(preds, golds)

    dot_hits: dict[str, list[int]] = {}
    for inst, pred in zip(instances, preds):
        hit = int(pred is not None and pred == inst.gold)
        dot_hits.setdefault(reg.entry(inst.lemma).dot_object.name, []).append(hit)

    candidate_counts = [rp_candidate_count(inst, reg, rp_condition) for inst in instances]
    random_baseline = baseline_random(candidate_counts, seed=seed, trials=trials)
    baselines: dict[str, Any] = {
        "random": {
            "analytic": random_baseline.analytic,
            "monte_carlo": random_baseline.monte_carlo,
            "trials": trials,
            "seed": seed,
            "per_dot_analytic": {
                name: float(np.mean([1.0 / k for inst, k in zip(instances, candidate_counts)
                                     if reg.entry(inst.lemma).dot_object.name == name]))
                for name in sorted(dot_hits)
            },
        }
    }
    if train is not None:
        mostfreq = baseline_mostfreq_rp(train, instances, reg)
        baselines["mostfreq"] = {"overall": mostfreq.overall, "per_dot": mostfreq.per_dot}

    return EvalReport(
        task="RP",
        condition=condition,
        overall=overall,
        buckets={"dot_object": _bucket_stats(dot_hits, sorted(dot_hits))},
        baselines=baselines,
        counts=counts,
        config={"seed": seed, "condition": rp_condition.value},
    )


def predict_all(
    instances: Sequence[TestInstance],
    backend: Backend,
    *,
    inventory: SenseInventory | None = None,
    registry: DotRegistry | None = None,
    mode: WSDMode = WSDMode.POS_GUIDED,
    condition: RPCondition = RPCondition.DOTTED,
    seed: int = 0,
) -> tuple[list[str | None], dict[str, int]]:
    """Run the backend over all instances; returns (preds, bookkeeping counts)."""
    preds: list[str | None] = []
    discarded = failed = 0
    for inst in instances:
        try:
            if inst.task is Task.WSD:
                if inventory is None:
                    raise ValidationError("WSD instances require an inventory")
                pairs = build_wsd_pairs(inst, inventory, mode=mode, seed=seed)
            else:
                if registry is None:
                    raise ValidationError("RP instances require a registry")
                pairs = build_rp_pairs(inst, reg=registry, condition=condition)
        except DiscardSignal:
            discarded += 1
            preds.append(None)
            continue
        try:
            scores = backend.score(pairs)
        except BackendError:
            failed += 1
            preds.append(None)
            continue
        preds.append(pairs[select(scores)].candidate_id)
    counts = {"instances": len(instances), "discarded": discarded, "backend_failed": failed}
    return preds, counts


def evaluate_wsd(
    instances: Sequence[TestInstance],
    inv: SenseInventory,
    backend: Backend,
    mode: WSDMode = WSDMode.POS_GUIDED,
    seed: int = 0,
    *,
    train: Sequence[TestInstance] | None = None,
    trials: int = 10_000,
) -> EvalReport:
    preds, counts = predict_all(instances, backend, inventory=inv, mode=mode, seed=seed)
    return wsd_report(
        instances, preds, inv,
        condition=mode.value, counts=counts, seed=seed, trials=trials,
        train=train, mode=mode,
    )


def evaluate_rp(
    instances: Sequence[TestInstance],
    reg: DotRegistry,
    backend: Backend,
    condition: RPCondition = RPCondition.DOTTED,
    seed: int = 0,
    *,
    train: Sequence[TestInstance] | None = None,
    trials: int = 10_000,
) -> EvalReport:
    preds, counts = predict_all(instances, backend, registry=reg, condition=condition, seed=seed)
    return rp_report(
        instances, preds, reg,
        condition=condition.value, counts=counts, seed=seed, trials=trials,
        train=train, rp_condition=condition,
    )


# ---------------------------------------------------------------------------
# Inter-annotator agreement

def fleiss_kappa(matrix) -> float:
    """Fleiss' kappa over an items x categories count matrix.

    Every row must sum to the same rater count (>= 2); at least two
    categories are required. Unanimous agreement returns exactly 1.0.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ValidationError("agreement matrix must be 2-D with at least one item")
    if m.shape[1] < 2:
        raise ValidationError("agreement matrix needs at least two categories")
    if not np.isfinite(m).all() or (m < 0).any():
        raise ValidationError("agreement counts must be finite and non-negative")
    row_sums = m.sum(axis=1)
    raters = row_sums[0]
    if not np.all(row_sums == raters):
        raise ValidationError("inconsistent row sums: raters per item must be constant")
    if raters < 2:
        raise ValidationError("need at least two raters per item")

    n_items = m.shape[0]
    p_i = (np.sum(m * m, axis=1) - raters) / (raters * (raters - 1))
    p_bar = float(np.mean(p_i))
    p_j = m.sum(axis=0) / (n_items * raters)
    p_e = float(np.sum(p_j * p_j))
    denom = 1.0 - p_e
    if denom == 0.0:
        return 1.0  # all ratings in one category: agreement is perfect
    return (p_bar - p_e) / denom


def load_agreement_csv(fp: IO[str]) -> np.ndarray:
    """Read the agreement matrix CSV (one row per item, one column per
    category); a non-numeric first row is treated as a header."""
    rows = [row for row in csv.reader(fp) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValidationError("empty agreement file")

    def parse(row: list[str]) -> list[int] | None:
        try:
            return [int(cell.strip()) for cell in row]
        except ValueError:
            return None

    first = parse(rows[0])
    data_rows = rows if first is not None else rows[1:]
    matrix = []
    for i, row in enumerate(data_rows, start=1):
        parsed = parse(row)
        if parsed is None:
            raise ValidationError(f"agreement row {i}: non-integer cell")
        matrix.append(parsed)
    if not matrix:
        raise ValidationError("agreement file has no data rows")
    width = len(matrix[0])
    if any(len(row) != width for row in matrix):
        raise ValidationError("agreement rows have differing column counts")
    return np.asarray(matrix, dtype=int)
