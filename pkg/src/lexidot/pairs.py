"""Context-gloss pair construction for WSD and dot-object disambiguation.

Every test instance fans out into one scoring sequence per candidate. The
context side is the sentence with the target wrapped in angular-bracket
markers; the gloss side concatenates the target with the candidate's gloss
text (and, for senses, one deterministically drawn example sentence).
"""

from __future__ import annotations

import hashlib
import json
import logging
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Sequence

from .dotobjects import DotRegistry, TypeClass, dot_candidates
from .errors import DiscardSignal, RecordError, SpanError, ValidationError
from .inventory import Sense, SenseInventory, simplify_pos

logger = logging.getLogger(__name__)

MARK_OPEN = "〈"   # 〈
MARK_CLOSE = "〉"  # 〉

GLOSS_SEPARATOR = "，"  # ，joins TGT / gloss / example segments
RP_GLOSS_COLON = "："   # ：follows TGT in dot-object glosses


class Task(Enum):
    WSD = "WSD"
    RP = "RP"


class WSDMode(Enum):
    POS_GUIDED = "pos-guided"
    ALL_SENSES = "all-senses"


class RPCondition(Enum):
    DOTTED = "dotted"
    ALL_TYPES = "all-types"


@dataclass(frozen=True)
class TestInstance:
    """A sentence with exactly one marked target span.

    ``gold`` is a sense_id for WSD instances, a type-class name for RP ones,
    or None when unlabeled.
    """

    __test__ = False  # not a pytest class, despite the Test* name

    sentence: str
    start: int
    end: int
    lemma: str
    pos_raw: str
    task: Task
    gold: str | None = None
    instance_id: int | str | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end <= len(self.sentence)):
            raise SpanError(
                f"span [{self.start}, {self.end}) out of range for sentence "
                f"of length {len(self.sentence)}"
            )
        surface = self.sentence[self.start : self.end]
        if surface != self.lemma:
            raise ValidationError(
                f"target surface {surface!r} != lemma {self.lemma!r}"
            )


@dataclass(frozen=True)
class ContextGlossPair:
    context: str
    gloss: str
    candidate_id: str
    label: bool


@dataclass(frozen=True)
class PairRecord:
    instance_id: int | str
    pair: ContextGlossPair


@dataclass
class FlattenResult:
    records: list[PairRecord]
    examples: int
    sequences: int
    discarded: int
    pos_fallbacks: int


def mark_target(
    sentence: str,
    start: int,
    end: int,
    markers: tuple[str, str] = (MARK_OPEN, MARK_CLOSE),
) -> str:
    """Wrap the target span in angular brackets, leaving all else unchanged."""
    if not (0 <= start < end <= len(sentence)):
        raise SpanError(f"span [{start}, {end}) out of range")
    opener, closer = markers
    return sentence[:start] + opener + sentence[start:end] + closer + sentence[end:]


def _check_markable(sentence: str, markers: tuple[str, str]) -> None:
    # A sentence that already contains a marker would break the
    # exactly-one-marker-pair invariant of the built context.
    if markers[0] in sentence or markers[1] in sentence:
        raise ValidationError("sentence already contains marker characters")


def _stable_index(seed: int, key: str, n: int) -> int:
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % n


def compose_sense_gloss(lemma: str, sense: Sense, seed: int) -> str:
    """TGT, sense gloss, and one seeded-draw example, comma-joined.

    The example draw is fixed per (sense_id, seed) so rebuilding the same
    pair set is byte-identical. Senses without examples drop that segment.
    """
    segments = [lemma, sense.gloss]
    if sense.examples:
        segments.append(sense.examples[_stable_index(seed, sense.sense_id, len(sense.examples))])
    return GLOSS_SEPARATOR.join(segments)


def compose_class_gloss(lemma: str, type_class: TypeClass) -> str:
    return f"{lemma}{RP_GLOSS_COLON}{type_class.label_zh}{GLOSS_SEPARATOR}{type_class.gloss_zh}"


def build_wsd_pairs(
    inst: TestInstance,
    inv: SenseInventory,
    mode: WSDMode = WSDMode.POS_GUIDED,
    seed: int = 0,
    markers: tuple[str, str] = (MARK_OPEN, MARK_CLOSE),
) -> list[ContextGlossPair]:
    """One pair per candidate sense of the target.

    Lemmas with fewer than two predefined senses raise DiscardSignal. Under
    POS guidance, candidates are the senses matching the target's simplified
    tag; if that leaves fewer than two, the full sense list is used instead
    (logged). A gold sense removed by the filter simply yields no true pair.
    """
    if inst.task is not Task.WSD:
        raise ValidationError(f"expected a WSD instance, got task {inst.task.value}")
    _check_markable(inst.sentence, markers)
    senses = inv.senses(inst.lemma)
    if len(senses) < 2:
        raise DiscardSignal(inst.lemma, len(senses))
    candidates = senses
    if mode is WSDMode.POS_GUIDED:
        target_pos = simplify_pos(inst.pos_raw)
        filtered = [s for s in senses if s.pos is target_pos]
        if len(filtered) >= 2:
            candidates = filtered
        else:
            logger.info(
                "POS filter left %d candidate(s) for %r; falling back to all senses",
                len(filtered), inst.lemma,
            )
    context = mark_target(inst.sentence, inst.start, inst.end, markers)
    pairs = [
        ContextGlossPair(
            context=context,
            gloss=compose_sense_gloss(inst.lemma, sense, seed),
            candidate_id=sense.sense_id,
            label=inst.gold is not None and sense.sense_id == inst.gold,
        )
        for sense in candidates
    ]
    if sum(p.label for p in pairs) > 1:
        raise ValidationError(f"instance {inst.instance_id!r}: more than one true pair")
    return pairs


def build_rp_pairs(
    inst: TestInstance,
    reg: DotRegistry,
    condition: RPCondition = RPCondition.DOTTED,
    markers: tuple[str, str] = (MARK_OPEN, MARK_CLOSE),
) -> list[ContextGlossPair]:
    """One pair per candidate type class of the target proper noun.

    Dotted restricts candidates to the lemma's dot-object classes; AllTypes
    runs against all eight classes in canonical order.
    """
    if inst.task is not Task.RP:
        raise ValidationError(f"expected an RP instance, got task {inst.task.value}")
    _check_markable(inst.sentence, markers)
    if condition is RPCondition.DOTTED:
        classes = dot_candidates(inst.lemma, reg)
    else:
        reg.entry(inst.lemma)  # still requires registration
        classes = list(reg.all_type_classes())
    context = mark_target(inst.sentence, inst.start, inst.end, markers)
    pairs = [
        ContextGlossPair(
            context=context,
            gloss=compose_class_gloss(inst.lemma, type_class),
            candidate_id=type_class.name,
            label=inst.gold is not None and type_class.name == inst.gold,
        )
        for type_class in classes
    ]
    if sum(p.label for p in pairs) > 1:
        raise ValidationError(f"instance {inst.instance_id!r}: more than one true pair")
    return pairs


def build_pairs(
    inst: TestInstance,
    *,
    inventory: SenseInventory | None = None,
    registry: DotRegistry | None = None,
    mode: WSDMode = WSDMode.POS_GUIDED,
    condition: RPCondition = RPCondition.DOTTED,
    seed: int = 0,
) -> list[ContextGlossPair]:
    if inst.task is Task.WSD:
        if inventory is None:
            raise ValidationError("WSD instance requires a sense inventory")
        return build_wsd_pairs(inst, inventory, mode=mode, seed=seed)
    if registry is None:
        raise ValidationError("RP instance requires a dot registry")
    return build_rp_pairs(inst, reg=registry, condition=condition)


def flatten(
    instances: Sequence[TestInstance],
    *,
    inventory: SenseInventory | None = None,
    registry: DotRegistry | None = None,
    mode: WSDMode = WSDMode.POS_GUIDED,
    condition: RPCondition = RPCondition.DOTTED,
    seed: int = 0,
) -> FlattenResult:
    """Fan every instance out into pair records; discards are counted.

    Output order follows input order. Total sequences always equals the sum
    of per-instance candidate counts.
    """
    records: list[PairRecord] = []
    examples = sequences = discarded = fallbacks = 0
    for index, inst in enumerate(instances):
        instance_id = inst.instance_id if inst.instance_id is not None else index
        if inst.task is Task.WSD and inventory is not None and mode is WSDMode.POS_GUIDED:
            if inst.lemma in inventory:
                senses = inventory.senses(inst.lemma)
                target_pos = simplify_pos(inst.pos_raw)
                if len(senses) >= 2 and len([s for s in senses if s.pos is target_pos]) < 2:
                    fallbacks += 1
        try:
            pairs = build_pairs(
                inst,
                inventory=inventory,
                registry=registry,
                mode=mode,
                condition=condition,
                seed=seed,
            )
        except DiscardSignal:
            discarded += 1
            continue
        examples += 1
        sequences += len(pairs)
        records.extend(PairRecord(instance_id, pair) for pair in pairs)
    return FlattenResult(records, examples, sequences, discarded, fallbacks)


# ---------------------------------------------------------------------------
# File I/O

def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def load_instances(source: Iterable[str]) -> list[TestInstance]:
    """Parse the instance JSONL format; instance ids are 0-based line order."""
    instances = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from None
        if not isinstance(record, dict):
            raise RecordError("record is not an object", line=lineno)
        try:
            task = Task(record.get("task", ""))
        except ValueError:
            raise ValidationError(f"line {lineno}: task must be 'WSD' or 'RP'") from None
        for key in ("sentence", "lemma", "pos_raw"):
            if not isinstance(record.get(key), str) or not record[key]:
                raise ValidationError(f"line {lineno}: field {key!r} must be a non-empty string")
        for key in ("start", "end"):
            if not isinstance(record.get(key), int):
                raise ValidationError(f"line {lineno}: field {key!r} must be an integer")
        gold = record.get("gold")
        if gold is not None and not isinstance(gold, str):
            raise ValidationError(f"line {lineno}: field 'gold' must be a string or null")
        try:
            instances.append(
                TestInstance(
                    sentence=_nfc(record["sentence"]),
                    start=record["start"],
                    end=record["end"],
                    lemma=_nfc(record["lemma"]),
                    pos_raw=record["pos_raw"],
                    task=task,
                    gold=_nfc(gold) if gold is not None else None,
                    instance_id=len(instances),
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    return instances


def dump_instances(instances: Iterable[TestInstance], fp: IO[str]) -> None:
    for inst in instances:
        fp.write(
            json.dumps(
                {
                    "sentence": inst.sentence,
                    "start": inst.start,
                    "end": inst.end,
                    "lemma": inst.lemma,
                    "pos_raw": inst.pos_raw,
                    "gold": inst.gold,
                    "task": inst.task.value,
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def write_pairs(records: Iterable[PairRecord], fp: IO[str]) -> None:
    for record in records:
        fp.write(
            json.dumps(
                {
                    "instance_id": record.instance_id,
                    "context": record.pair.context,
                    "gloss": record.pair.gloss,
                    "candidate_id": record.pair.candidate_id,
                    "label": record.pair.label,
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def read_pairs(source: Iterable[str]) -> list[PairRecord]:
    records = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from None
        try:
            records.append(
                PairRecord(
                    instance_id=raw["instance_id"],
                    pair=ContextGlossPair(
                        context=raw["context"],
                        gloss=raw["gloss"],
                        candidate_id=raw["candidate_id"],
                        label=bool(raw["label"]),
                    ),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"line {lineno}: missing field {exc}") from None
    return records
