"""Enumerated sense inventory: loading, POS simplification, candidate lookup.

The inventory file is JSONL, one object per sense:
``{"sense_id", "lemma", "pos_raw", "gloss", "examples": [str]}``, UTF-8 and
NFC-normalized. Per-lemma sense order is the file order and is authoritative:
it is the tie-breaking order everywhere downstream.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import IO, Iterable, Iterator, Mapping

from .errors import RecordError, UnknownLemmaError, ValidationError


class POSCategory(Enum):
    PROPER_NOUN = "ProperNoun"
    COMMON_NOUN = "CommonNoun"
    VERB = "Verb"
    OTHERS = "Others"


def _prefix_rule(tag: str) -> POSCategory:
    if tag == "Nb":
        return POSCategory.PROPER_NOUN
    if tag.startswith("N"):
        return POSCategory.COMMON_NOUN
    if tag.startswith("V"):
        return POSCategory.VERB
    return POSCategory.OTHERS


_DEFAULT_POS_TABLE: dict[str, POSCategory] | None = None


def default_pos_table() -> Mapping[str, POSCategory]:
    """The packaged CKIP tag table (44 tags collapsed into 4 buckets)."""
    global _DEFAULT_POS_TABLE
    if _DEFAULT_POS_TABLE is None:
        raw = json.loads(
            resources.files("lexidot.data").joinpath("ckip_pos_map.json").read_text("utf-8")
        )
        _DEFAULT_POS_TABLE = {tag: POSCategory(cat) for tag, cat in raw.items()}
    return _DEFAULT_POS_TABLE


def load_pos_table(fp: IO[str]) -> dict[str, POSCategory]:
    """Load a user override of the tag table (JSON object: tag -> category name)."""
    raw = json.load(fp)
    try:
        return {tag: POSCategory(cat) for tag, cat in raw.items()}
    except ValueError as exc:
        raise ValidationError(f"bad POS category in table: {exc}") from None


def simplify_pos(ckip_tag: str, table: Mapping[str, POSCategory] | None = None) -> POSCategory:
    """Collapse a CKIP POS tag into one of the four coarse categories.

    Total: tags absent from the table fall back to the prefix rule
    (exact "Nb" is a proper noun, other N* are common nouns, V* are verbs,
    everything else lands in Others).
    """
    if table is None:
        table = default_pos_table()
    got = table.get(ckip_tag)
    return got if got is not None else _prefix_rule(ckip_tag)


@dataclass(frozen=True)
class Sense:
    """One enumerated sense entry. ``pos`` is derived from ``pos_raw``."""

    sense_id: str
    lemma: str
    pos_raw: str
    gloss: str
    examples: tuple[str, ...] = ()
    pos: POSCategory = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not self.gloss:
            raise ValidationError(f"sense {self.sense_id!r}: gloss must be non-empty")
        if self.pos is None:
            object.__setattr__(self, "pos", simplify_pos(self.pos_raw))


class SenseInventory:
    """Immutable lemma -> ordered senses mapping. Safe for concurrent reads."""

    def __init__(self, senses: Iterable[Sense]):
        self._by_lemma: dict[str, list[Sense]] = {}
        self._by_id: dict[str, Sense] = {}
        for sense in senses:
            if sense.sense_id in self._by_id:
                raise ValidationError(f"duplicate sense_id {sense.sense_id!r}")
            self._by_id[sense.sense_id] = sense
            self._by_lemma.setdefault(sense.lemma, []).append(sense)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._by_lemma

    def __len__(self) -> int:
        """Number of distinct lemmas."""
        return len(self._by_lemma)

    def __iter__(self) -> Iterator[str]:
        return iter(self._by_lemma)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SenseInventory):
            return NotImplemented
        return self._by_lemma == other._by_lemma

    def lemmas(self) -> list[str]:
        return list(self._by_lemma)

    def senses(self, lemma: str) -> list[Sense]:
        """All senses of ``lemma`` in file order."""
        try:
            return list(self._by_lemma[lemma])
        except KeyError:
            raise UnknownLemmaError(f"lemma {lemma!r} not in inventory") from None

    def sense_count(self, lemma: str) -> int:
        try:
            return len(self._by_lemma[lemma])
        except KeyError:
            raise UnknownLemmaError(f"lemma {lemma!r} not in inventory") from None

    def sense_total(self) -> int:
        return len(self._by_id)

    def by_id(self, sense_id: str) -> Sense | None:
        return self._by_id.get(sense_id)


def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def _require_str(record: dict, key: str, line: int) -> str:
    value = record.get(key)
    if not isinstance(value, str) or not value:
        raise ValidationError(f"line {line}: field {key!r} must be a non-empty string")
    return _nfc(value)


def load_inventory(
    source: Iterable[str], pos_table: Mapping[str, POSCategory] | None = None
) -> SenseInventory:
    """Parse a JSONL sense stream into an inventory, validating every record."""
    senses = []
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
        examples = record.get("examples", [])
        if not isinstance(examples, list) or any(not isinstance(e, str) for e in examples):
            raise ValidationError(f"line {lineno}: field 'examples' must be a list of strings")
        pos_raw = _require_str(record, "pos_raw", lineno)
        senses.append(
            Sense(
                sense_id=_require_str(record, "sense_id", lineno),
                lemma=_require_str(record, "lemma", lineno),
                pos_raw=pos_raw,
                gloss=_require_str(record, "gloss", lineno),
                examples=tuple(_nfc(e) for e in examples),
                pos=simplify_pos(pos_raw, pos_table),
            )
        )
    return SenseInventory(senses)


def dump_inventory(inv: SenseInventory, fp: IO[str]) -> None:
    """Write an inventory back to JSONL in its canonical (file) order."""
    for lemma in inv:
        for sense in inv.senses(lemma):
            fp.write(
                json.dumps(
                    {
                        "sense_id": sense.sense_id,
                        "lemma": sense.lemma,
                        "pos_raw": sense.pos_raw,
                        "gloss": sense.gloss,
                        "examples": list(sense.examples),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def candidates_for(
    lemma: str, pos_filter: POSCategory | None, inv: SenseInventory
) -> list[Sense]:
    """Candidate senses of ``lemma``, optionally restricted to one POS bucket.

    The result is always an ordered sub-list of the unfiltered sense list;
    an empty result is legal and the caller decides the fallback.
    """
    senses = inv.senses(lemma)
    if pos_filter is None:
        return senses
    return [s for s in senses if s.pos is pos_filter]
