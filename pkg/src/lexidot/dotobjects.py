"""Type classes and dot objects for proper-noun disambiguation.

Eight atomic type classes, each with a fixed Chinese/English gloss, combine
into the seven canonical dot objects. The registry file is JSONL with two
record shapes:

- ``{"lemma", "dot_object": "Prcr.Prct.Loc", "wikidata_category"}`` — an entry
- ``{"type_class", "label_zh"?, "gloss_zh"?, "gloss_en"?}`` — an optional
  gloss override for one of the eight built-in classes
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

from .errors import RecordError, UnknownLemmaError, ValidationError


@dataclass(frozen=True)
class TypeClass:
    name: str      # canonical English name, e.g. "Organization"
    abbrev: str    # dot-object segment, e.g. "Org"
    label_zh: str  # Chinese display name used when rendering glosses
    gloss_zh: str
    gloss_en: str


INFORMATION = TypeClass(
    "Information", "Info", "資訊",
    "泛指一般資料和訊息。",
    "general reference to data, knowledge, and messages.",
)
PHYSICAL = TypeClass(
    "Physical", "Phy", "有形的",
    "有具體形狀。",
    "tangible objects.",
)
LOCATION = TypeClass(
    "Location", "Loc", "地點",
    "所在的地方。",
    "positions or occupied sites.",
)
HUMAN = TypeClass(
    "Human", "Hum", "人類",
    "人的總稱。",
    "general term of humanity.",
)
ORGANIZATION = TypeClass(
    "Organization", "Org", "機構",
    "泛指機關團體或工作單位。",
    "general reference to administrative and functional structures.",
)
EVENT = TypeClass(
    "Event", "Evt", "事件",
    "事情、事項。",
    "circumstances, incidents.",
)
PRODUCER = TypeClass(
    "Producer", "Prcr", "作者;製造商",
    "創作詩歌、文章或其他藝術品的人;製造或出售各種物品的商家。",
    "creators of poetry, articles, or other artworks; business who produces or supplies goods or services.",
)
PRODUCT = TypeClass(
    "Product", "Prct", "作品;產品",
    "文學藝術方面創作的成品;生產的物品。",
    "artistic creations; commodities that have been produced.",
)

# Canonical order; AllTypes candidate sets use exactly this order.
TYPE_CLASSES: tuple[TypeClass, ...] = (
    INFORMATION, PHYSICAL, LOCATION, HUMAN, ORGANIZATION, EVENT, PRODUCER, PRODUCT,
)
TYPE_CLASS_BY_NAME: dict[str, TypeClass] = {c.name: c for c in TYPE_CLASSES}


@dataclass(frozen=True)
class DotObject:
    """A named combination of 2 to 4 distinct type classes."""

    name: str
    classes: tuple[TypeClass, ...]

    def __post_init__(self) -> None:
        if not 2 <= len(self.classes) <= 4:
            raise ValidationError(f"dot object {self.name!r}: needs 2-4 classes")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValidationError(f"dot object {self.name!r}: duplicate classes")
        expected = ".".join(c.abbrev for c in self.classes)
        if self.name != expected:
            raise ValidationError(f"dot object name {self.name!r} != {expected!r}")

    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)


def _dot(*classes: TypeClass) -> DotObject:
    return DotObject(".".join(c.abbrev for c in classes), tuple(classes))


INFO_PHY = _dot(INFORMATION, PHYSICAL)
LOC_ORG = _dot(LOCATION, ORGANIZATION)
ORG_HUM = _dot(ORGANIZATION, HUMAN)
ORG_INFO_PHY_HUM = _dot(ORGANIZATION, INFORMATION, PHYSICAL, HUMAN)
ORG_LOC_HUM = _dot(ORGANIZATION, LOCATION, HUMAN)
PHY_EVT_HUM = _dot(PHYSICAL, EVENT, HUMAN)
PRCR_PRCT_LOC = _dot(PRODUCER, PRODUCT, LOCATION)

DOT_OBJECTS: dict[str, DotObject] = {
    d.name: d
    for d in (
        INFO_PHY, LOC_ORG, ORG_HUM, ORG_INFO_PHY_HUM,
        ORG_LOC_HUM, PHY_EVT_HUM, PRCR_PRCT_LOC,
    )
}


@dataclass(frozen=True)
class RegistryEntry:
    lemma: str
    dot_object: DotObject
    wikidata_category: str


class DotRegistry:
    """Immutable proper-noun lemma -> dot-object registry."""

    def __init__(
        self,
        entries: Iterable[RegistryEntry],
        type_classes: dict[str, TypeClass] | None = None,
    ):
        self.type_classes = dict(type_classes or TYPE_CLASS_BY_NAME)
        self._entries: dict[str, RegistryEntry] = {}
        for entry in entries:
            if entry.lemma in self._entries:
                raise ValidationError(f"duplicate registry lemma {entry.lemma!r}")
            if entry.dot_object.name not in DOT_OBJECTS:
                raise ValidationError(
                    f"lemma {entry.lemma!r}: unknown dot object {entry.dot_object.name!r}"
                )
            canonical = DOT_OBJECTS[entry.dot_object.name]
            if entry.dot_object.class_names() != canonical.class_names():
                raise ValidationError(
                    f"lemma {entry.lemma!r}: dot object differs from canonical "
                    f"{entry.dot_object.name!r} class-for-class"
                )
            self._entries[entry.lemma] = entry

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def entry(self, lemma: str) -> RegistryEntry:
        try:
            return self._entries[lemma]
        except KeyError:
            raise UnknownLemmaError(f"lemma {lemma!r} not in dot registry") from None

    def all_type_classes(self) -> tuple[TypeClass, ...]:
        """The eight classes (with any gloss overrides), in canonical order."""
        return tuple(self.type_classes[c.name] for c in TYPE_CLASSES)


def dot_candidates(lemma: str, reg: DotRegistry) -> list[TypeClass]:
    """The lemma's dot-object classes in registry order, overrides applied."""
    entry = reg.entry(lemma)
    return [reg.type_classes[c.name] for c in entry.dot_object.classes]


def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def load_registry(source: Iterable[str]) -> DotRegistry:
    """Parse a JSONL registry stream (entries plus optional gloss overrides)."""
    overrides = dict(TYPE_CLASS_BY_NAME)
    raw_entries: list[tuple[int, dict]] = []
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
        if "type_class" in record:
            name = record["type_class"]
            base = overrides.get(name)
            if base is None:
                raise ValidationError(f"line {lineno}: unknown type class {name!r}")
            fields = {
                k: _nfc(record[k])
                for k in ("label_zh", "gloss_zh", "gloss_en")
                if isinstance(record.get(k), str)
            }
            overrides[name] = replace(base, **fields)
            continue
        raw_entries.append((lineno, record))

    entries = []
    for lineno, record in raw_entries:
        lemma = record.get("lemma")
        dot_name = record.get("dot_object")
        category = record.get("wikidata_category", "")
        if not isinstance(lemma, str) or not lemma:
            raise ValidationError(f"line {lineno}: field 'lemma' must be a non-empty string")
        if not isinstance(dot_name, str) or dot_name not in DOT_OBJECTS:
            raise ValidationError(f"line {lineno}: unknown dot object {dot_name!r}")
        if not isinstance(category, str):
            raise ValidationError(f"line {lineno}: 'wikidata_category' must be a string")
        entries.append(
            RegistryEntry(
                lemma=_nfc(lemma),
                dot_object=DOT_OBJECTS[dot_name],
                wikidata_category=category,
            )
        )
    return DotRegistry(entries, type_classes=overrides)


def dump_registry(reg: DotRegistry, fp) -> None:
    for lemma in reg:
        entry = reg.entry(lemma)
        fp.write(
            json.dumps(
                {
                    "lemma": entry.lemma,
                    "dot_object": entry.dot_object.name,
                    "wikidata_category": entry.wikidata_category,
                },
                ensure_ascii=False,
            )
            + "\n"
        )
