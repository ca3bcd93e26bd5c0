"""Disambiguation toolkit for Mandarin: enumerated word senses for common
words, dot-object type classes for proper nouns, scored as context-gloss
pairs."""

from .dotobjects import (
    DOT_OBJECTS,
    TYPE_CLASSES,
    DotObject,
    DotRegistry,
    RegistryEntry,
    TypeClass,
    dot_candidates,
    dump_registry,
    load_registry,
)
from .errors import (
    BackendError,
    DiscardSignal,
    LexidotError,
    RecordError,
    SpanError,
    UnknownLemmaError,
    UnmappedCategory,
    ValidationError,
    WikidataTransportError,
)
from .evaluation import (
    EvalReport,
    accuracy,
    baseline_mfs,
    baseline_mostfreq_rp,
    baseline_random,
    bucket_by_complexity,
    evaluate_rp,
    evaluate_wsd,
    fleiss_kappa,
)
from .inventory import (
    POSCategory,
    Sense,
    SenseInventory,
    candidates_for,
    dump_inventory,
    load_inventory,
    simplify_pos,
)
from .pairs import (
    ContextGlossPair,
    FlattenResult,
    PairRecord,
    RPCondition,
    Task,
    TestInstance,
    WSDMode,
    build_rp_pairs,
    build_wsd_pairs,
    flatten,
    load_instances,
    mark_target,
)
from .scoring import (
    ExternalSession,
    OracleBackend,
    OverlapBackend,
    RandomBackend,
    disambiguate,
    make_backend,
    score_overlap,
    select,
)

__version__ = "0.1.0"
