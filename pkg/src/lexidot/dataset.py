"""Corpus-to-dataset pipeline for the proper-noun side.

Stages: filter NER mentions to the five relevant entity types, keep the
most-frequent 1% of word types per entity type, resolve survivors against
Wikidata (dropping no-entry words, splitting multi-entry ones), map each
entry's category closure to a dot object, then sample sentences per word.
Every stage count lands in the run manifest.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

from .dotobjects import DOT_OBJECTS, DotObject
from .errors import (
    RecordError,
    UnmappedCategory,
    ValidationError,
    WikidataTransportError,
)
from .pairs import Task, TestInstance

logger = logging.getLogger(__name__)

RELEVANT_ENTITY_TYPES = ("LOC", "ORG", "GPE", "PRODUCT", "WORK_OF_ART")
CLOSURE_MAX_DEPTH = 5


@dataclass(frozen=True)
class EntityMention:
    surface: str
    entity_type: str
    sentence: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end <= len(self.sentence)):
            raise ValidationError(
                f"mention span [{self.start}, {self.end}) out of range"
            )
        if self.sentence[self.start : self.end] != self.surface:
            raise ValidationError(
                f"mention surface {self.surface!r} does not match its span"
            )


@dataclass(frozen=True)
class WikidataEntry:
    qid: str
    label: str
    categories: tuple[str, ...]  # instance_of/subclass_of closure, BFS order

    def __post_init__(self) -> None:
        if not self.qid:
            raise ValidationError("Wikidata entry needs a non-empty qid")


def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def load_corpus(source: Iterable[str]) -> list[EntityMention]:
    """Parse corpus JSONL: {"sentence", "mentions": [{surface,type,start,end}]}."""
    mentions = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from None
        sentence = record.get("sentence")
        if not isinstance(sentence, str):
            raise ValidationError(f"line {lineno}: 'sentence' must be a string")
        sentence = _nfc(sentence)
        for raw in record.get("mentions", []):
            try:
                mentions.append(
                    EntityMention(
                        surface=_nfc(raw["surface"]),
                        entity_type=raw["type"],
                        sentence=sentence,
                        start=raw["start"],
                        end=raw["end"],
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"line {lineno}: bad mention ({exc})") from None
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
    return mentions


def filter_entity_types(
    mentions: Sequence[EntityMention],
    keep: Sequence[str] = RELEVANT_ENTITY_TYPES,
) -> list[EntityMention]:
    kept = set(keep)
    return [m for m in mentions if m.entity_type in kept]


def frequency_percentile_filter(
    counts: Mapping[str, int], percentile: float = 0.99
) -> list[str]:
    """Word types at or above the nearest-rank percentile threshold.

    Keeps the top ceil((1 - percentile) * n) types by frequency, plus any
    type tied with the last kept one. Output is sorted by descending
    frequency, then by word, so runs are reproducible.
    """
    if not counts:
        raise ValueError("empty frequency table")
    if not 0.0 < percentile < 1.0:
        raise ValueError(f"percentile must be in (0, 1), got {percentile}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    # round before ceil so 100 * (1 - 0.99) = 1.0000000000000009 keeps 1, not 2
    keep_n = max(1, math.ceil(round(len(ranked) * (1.0 - percentile), 9)))
    threshold = ranked[keep_n - 1][1]
    return [word for word, freq in ranked if freq >= threshold]


class WikidataClient(Protocol):
    def entries(self, word: str) -> list[WikidataEntry]: ...


class FixtureWikidataClient:
    """Client backed by a JSONL fixture: {"word", "entries": [...]}.

    Categories in the fixture are the already-flattened closure in BFS
    order. Unlisted words have no entry. Safe for concurrent use.
    """

    def __init__(self, source: Iterable[str]):
        self._table: dict[str, list[WikidataEntry]] = {}
        for lineno, line in enumerate(source, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from None
            word = record.get("word")
            if not isinstance(word, str) or not word:
                raise ValidationError(f"line {lineno}: 'word' must be a non-empty string")
            entries = []
            for raw in record.get("entries", []):
                entries.append(
                    WikidataEntry(
                        qid=raw.get("qid", ""),
                        label=_nfc(raw.get("label", "")),
                        categories=tuple(raw.get("categories", [])),
                    )
                )
            self._table[_nfc(word)] = entries

    def entries(self, word: str) -> list[WikidataEntry]:
        return list(self._table.get(word, []))


class LiveWikidataClient:
    """Thin client for the Wikidata API; rate-limit friendly, serial use only.

    The instance_of/subclass_of closure is traversed breadth-first and capped
    at CLOSURE_MAX_DEPTH hops. Transport problems raise
    WikidataTransportError so callers can distinguish "down" from "no entry".
    """

    def __init__(self, endpoint: str | None = None, language: str = "zh"):
        self.endpoint = (
            endpoint
            or os.environ.get("LEXIDOT_WIKIDATA_ENDPOINT")
            or "https://www.wikidata.org"
        ).rstrip("/")
        self.language = language

    def _call(self, **params) -> dict:
        import requests

        try:
            response = requests.get(
                f"{self.endpoint}/w/api.php",
                params={"format": "json", **params},
                timeout=30,
            )
            response.raise_for_status()
            return response.json()
        except Exception as exc:  # requests exposes many transport errors
            raise WikidataTransportError(str(exc)) from None

    def _claim_targets(self, qid: str, prop: str) -> list[str]:
        data = self._call(action="wbgetclaims", entity=qid, property=prop)
        targets = []
        for claim in data.get("claims", {}).get(prop, []):
            value = claim.get("mainsnak", {}).get("datavalue", {}).get("value", {})
            target = value.get("id")
            if target:
                targets.append(target)
        return targets

    def _labels(self, qids: Sequence[str]) -> dict[str, str]:
        if not qids:
            return {}
        data = self._call(
            action="wbgetentities", ids="|".join(qids), props="labels",
            languages="en",
        )
        out = {}
        for qid, entity in data.get("entities", {}).items():
            label = entity.get("labels", {}).get("en", {}).get("value")
            if label:
                out[qid] = label
        return out

    def _closure(self, qid: str) -> list[str]:
        seen: list[str] = []
        frontier = self._claim_targets(qid, "P31")  # instance_of
        depth = 0
        while frontier and depth < CLOSURE_MAX_DEPTH:
            next_frontier = []
            for node in frontier:
                if node in seen:
                    continue
                seen.append(node)
                next_frontier.extend(self._claim_targets(node, "P279"))  # subclass_of
            frontier = next_frontier
            depth += 1
        labels = self._labels(seen)
        return [labels[q] for q in seen if q in labels]

    def entries(self, word: str) -> list[WikidataEntry]:
        data = self._call(
            action="wbsearchentities", search=word,
            language=self.language, type="item", limit=5,
        )
        hits = [
            h for h in data.get("search", [])
            if h.get("label") == word or h.get("match", {}).get("text") == word
        ]
        entries = []
        for hit in hits:
            qid = hit.get("id")
            if not qid:
                continue
            entries.append(
                WikidataEntry(
                    qid=qid,
                    label=_nfc(hit.get("label", word)),
                    categories=tuple(self._closure(qid)),
                )
            )
        return entries


def resolve_wikidata(
    word: str, client: WikidataClient
) -> list[tuple[str, WikidataEntry]]:
    """Resolve a word against the reference database.

    No entry drops the word; one entry keeps it as-is; several entries split
    it into one word type per entry, surfaced with the entry labels verbatim.
    """
    entries = client.entries(word)
    if not entries:
        return []
    if len(entries) == 1:
        return [(word, entries[0])]
    return [(entry.label or word, entry) for entry in entries]


class CategoryMap:
    """Wikidata category -> dot-object name mapping."""

    def __init__(self, mapping: Mapping[str, str]):
        for category, dot_name in mapping.items():
            if dot_name not in DOT_OBJECTS:
                raise ValidationError(
                    f"category {category!r} maps to unknown dot object {dot_name!r}"
                )
        self._map = dict(mapping)

    def __contains__(self, category: str) -> bool:
        return category in self._map

    def __len__(self) -> int:
        return len(self._map)

    def items(self):
        return self._map.items()

    def get(self, category: str) -> str | None:
        return self._map.get(category)

    @classmethod
    def from_jsonl(cls, source: Iterable[str]) -> "CategoryMap":
        mapping = {}
        for lineno, line in enumerate(source, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from None
            category = record.get("category")
            dot_name = record.get("dot_object")
            if not isinstance(category, str) or not isinstance(dot_name, str):
                raise ValidationError(
                    f"line {lineno}: need string 'category' and 'dot_object'"
                )
            mapping[category] = dot_name
        return cls(mapping)

    @classmethod
    def builtin(cls) -> "CategoryMap":
        from importlib import resources

        text = resources.files("lexidot.data").joinpath("category_map.jsonl").read_text("utf-8")
        return cls.from_jsonl(text.splitlines())


def map_category_to_dot(entry: WikidataEntry, category_map: CategoryMap) -> tuple[DotObject, str]:
    """First mapped category in the entry's closure wins (closure order is
    breadth-first from instance_of). Returns (dot object, matched category)."""
    for category in entry.categories:
        dot_name = category_map.get(category)
        if dot_name is not None:
            return DOT_OBJECTS[dot_name], category
    raise UnmappedCategory(
        f"entry {entry.qid} ({entry.label!r}): no category maps to a dot object"
    )


def _word_rng(seed: int, word: str) -> random.Random:
    return random.Random(f"{seed}\x1e{word}")


def sample_sentences(
    mentions: Sequence[EntityMention],
    word: str,
    n: int = 30,
    seed: int = 0,
) -> list[TestInstance]:
    """Up to ``n`` seeded sample instances for occurrences of ``word``.

    One instance per occurrence (a sentence mentioning the word twice yields
    two candidate occurrences). Sampling is without replacement and the
    output keeps corpus order.
    """
    occurrences = [m for m in mentions if m.surface == word]
    if not occurrences:
        logger.warning("word %r has no corpus occurrences", word)
        return []
    if len(occurrences) > n:
        rng = _word_rng(seed, word)
        chosen = sorted(rng.sample(range(len(occurrences)), n))
        occurrences = [occurrences[i] for i in chosen]
    return [
        TestInstance(
            sentence=m.sentence,
            start=m.start,
            end=m.end,
            lemma=word,
            pos_raw="Nb",
            task=Task.RP,
            gold=None,
        )
        for m in occurrences
    ]


def split_dataset(
    instances: Sequence[TestInstance],
    test_fraction: float,
    seed: int = 0,
) -> tuple[list[TestInstance], list[TestInstance]]:
    """Disjoint, exhaustive, seeded train/test split, stratified by lemma."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_lemma: dict[str, list[int]] = {}
    for index, inst in enumerate(instances):
        by_lemma.setdefault(inst.lemma, []).append(index)
    test_indices: set[int] = set()
    for lemma, indices in by_lemma.items():
        take = int(len(indices) * test_fraction + 0.5)
        rng = _word_rng(seed, lemma)
        shuffled = list(indices)
        rng.shuffle(shuffled)
        test_indices.update(shuffled[:take])
    train = [inst for i, inst in enumerate(instances) if i not in test_indices]
    test = [inst for i, inst in enumerate(instances) if i in test_indices]
    return train, test


# ---------------------------------------------------------------------------
# End-to-end build

@dataclass
class DatasetBuild:
    instances: list[TestInstance]
    registry_rows: list[dict]
    manifest: dict = field(default_factory=dict)


def build_dataset(
    mentions: Sequence[EntityMention],
    client: WikidataClient,
    category_map: CategoryMap,
    *,
    percentile: float = 0.99,
    sample_size: int = 30,
    seed: int = 0,
) -> DatasetBuild:
    """Run the full pipeline over pre-tagged corpus mentions."""
    kept = filter_entity_types(mentions)

    selected: list[str] = []
    per_type_selected: dict[str, int] = {}
    seen_words = set()
    for entity_type in RELEVANT_ENTITY_TYPES:
        counts = Counter(m.surface for m in kept if m.entity_type == entity_type)
        if not counts:
            per_type_selected[entity_type] = 0
            continue
        survivors = frequency_percentile_filter(counts, percentile)
        per_type_selected[entity_type] = len(survivors)
        for word in survivors:
            if word not in seen_words:
                seen_words.add(word)
                selected.append(word)

    resolved: list[tuple[str, str, WikidataEntry]] = []  # (source, resolved, entry)
    dropped = splits = 0
    for word in selected:
        results = resolve_wikidata(word, client)
        if not results:
            dropped += 1
            continue
        splits += len(results) - 1
        resolved.extend((word, resolved_word, entry) for resolved_word, entry in results)

    mapped: list[tuple[str, str, str, str]] = []  # (source, resolved, dot, category)
    unmapped = 0
    for source, resolved_word, entry in resolved:
        try:
            dot, category = map_category_to_dot(entry, category_map)
        except UnmappedCategory as exc:
            logger.info("excluding %r: %s", resolved_word, exc)
            unmapped += 1
            continue
        mapped.append((source, resolved_word, dot.name, category))

    registry_rows: list[dict] = []
    instances: list[TestInstance] = []
    ambiguous = 0
    seen_sources: dict[str, str] = {}
    for source, resolved_word, dot_name, category in mapped:
        registry_rows.append(
            {"lemma": resolved_word, "dot_object": dot_name, "wikidata_category": category}
        )
        if source in seen_sources:
            # Split word whose entries we already sampled once; flag mapping
            # disagreements but keep the first mapping for the surface form.
            if seen_sources[source] != dot_name:
                ambiguous += 1
                logger.warning(
                    "split word %r maps to both %s and %s; keeping the first",
                    source, seen_sources[source], dot_name,
                )
            continue
        seen_sources[source] = dot_name
        if resolved_word != source:
            registry_rows.append(
                {"lemma": source, "dot_object": dot_name, "wikidata_category": category}
            )
        instances.extend(sample_sentences(kept, source, n=sample_size, seed=seed))

    # Drop duplicate registry rows (same lemma) that splits can introduce.
    unique_rows: dict[str, dict] = {}
    for row in registry_rows:
        unique_rows.setdefault(row["lemma"], row)
    registry_rows = list(unique_rows.values())

    manifest = {
        "format_version": "1",
        "seed": seed,
        "config": {"percentile": percentile, "sample_size": sample_size},
        "stages": {
            "mentions_total": len(mentions),
            "mentions_kept": len(kept),
            "words_selected": len(selected),
            "words_selected_per_type": per_type_selected,
            "words_dropped_no_entry": dropped,
            "words_split_extra": splits,
            "words_resolved": len(resolved),
            "words_unmapped": unmapped,
            "words_mapped": len(mapped),
            "split_mapping_conflicts": ambiguous,
            "instances": len(instances),
        },
    }
    return DatasetBuild(instances=instances, registry_rows=registry_rows, manifest=manifest)


def import_labels(
    instances: Sequence[TestInstance],
    labels: Mapping[int, str],
    candidate_names: Mapping[str, Sequence[str]],
) -> list[TestInstance]:
    """Attach gold labels, validating each against its lemma's candidate set."""
    from dataclasses import replace

    labeled = []
    for index, inst in enumerate(instances):
        label = labels.get(index)
        if label is None:
            labeled.append(inst)
            continue
        allowed = candidate_names.get(inst.lemma, ())
        if label not in allowed:
            raise ValidationError(
                f"instance {index}: label {label!r} not among candidates {list(allowed)}"
            )
        labeled.append(replace(inst, gold=label))
    return labeled
