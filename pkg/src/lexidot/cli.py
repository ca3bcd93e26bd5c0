"""Batch command-line surface. File-based JSONL/JSON in, JSON out.

Exit codes are a stable contract: 0 success, 2 input error, 3 backend error,
4 network error. Failures emit one machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import dataset as ds
from .dotobjects import DotRegistry, load_registry
from .errors import (
    BackendError,
    DiscardSignal,
    LexidotError,
    RecordError,
    UnknownLemmaError,
    ValidationError,
    WikidataTransportError,
)
from .evaluation import (
    fleiss_kappa,
    load_agreement_csv,
    predict_all,
    rp_report,
    wsd_report,
)
from .inventory import SenseInventory, load_inventory, load_pos_table
from .pairs import (
    RPCondition,
    Task,
    WSDMode,
    build_pairs,
    dump_instances,
    flatten,
    load_instances,
    write_pairs,
)
from .scoring import ExternalSession, make_backend, select

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BACKEND = 3
EXIT_NETWORK = 4

FORMAT_VERSION = "1"


class _CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        self.code = code
        self.kind = kind
        super().__init__(message)


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": {"type": kind, "message": message}}), file=sys.stderr)
    return code


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise _CliError(EXIT_INPUT, "io", f"cannot read {path}: {exc}") from None


def _load_inventory(path: str | None, pos_map: str | None) -> SenseInventory | None:
    if path is None:
        return None
    table = None
    if pos_map is not None:
        with open(pos_map, encoding="utf-8") as fp:
            table = load_pos_table(fp)
    return load_inventory(_read_lines(path), pos_table=table)


def _load_registry(path: str | None) -> DotRegistry | None:
    if path is None:
        return None
    return load_registry(_read_lines(path))


def _parse_modes(mode: str) -> tuple[WSDMode, RPCondition]:
    wsd_mode = WSDMode.POS_GUIDED
    rp_condition = RPCondition.DOTTED
    if mode in (m.value for m in WSDMode):
        wsd_mode = WSDMode(mode)
    elif mode in (c.value for c in RPCondition):
        rp_condition = RPCondition(mode)
    return wsd_mode, rp_condition


def _common_flags(sub: argparse.ArgumentParser, backend: bool = False) -> None:
    sub.add_argument("--inventory", help="sense inventory JSONL")
    sub.add_argument("--registry", help="dot-object registry JSONL")
    sub.add_argument("--instances", required=True, help="test instance JSONL")
    sub.add_argument(
        "--mode",
        default="pos-guided",
        choices=["pos-guided", "all-senses", "dotted", "all-types"],
    )
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.add_argument("--pos-map", help="override JSON table for the 44-tag POS map")
    sub.add_argument("--format-version", default="1", choices=["1"])
    if backend:
        sub.add_argument(
            "--backend",
            default="overlap",
            help="overlap | random | oracle | external:<command>",
        )
        sub.add_argument("--timeout", type=float, default=None,
                         help="seconds to wait for an external scorer response")


def cmd_build_pairs(args: argparse.Namespace) -> int:
    inv = _load_inventory(args.inventory, args.pos_map)
    reg = _load_registry(args.registry)
    instances = load_instances(_read_lines(args.instances))
    wsd_mode, rp_condition = _parse_modes(args.mode)
    result = flatten(
        instances,
        inventory=inv,
        registry=reg,
        mode=wsd_mode,
        condition=rp_condition,
        seed=args.seed,
    )
    buffer = io.StringIO()
    write_pairs(result.records, buffer)
    _atomic_write(Path(args.out), buffer.getvalue())
    summary = {
        "format_version": FORMAT_VERSION,
        "examples": result.examples,
        "sequences": result.sequences,
        "discarded": result.discarded,
        "pos_fallbacks": result.pos_fallbacks,
        "seed": args.seed,
        "mode": args.mode,
    }
    print(json.dumps(summary, ensure_ascii=False))
    return EXIT_OK


def cmd_disambiguate(args: argparse.Namespace) -> int:
    inv = _load_inventory(args.inventory, args.pos_map)
    reg = _load_registry(args.registry)
    instances = load_instances(_read_lines(args.instances))
    wsd_mode, rp_condition = _parse_modes(args.mode)
    backend = make_backend(args.backend, seed=args.seed, timeout=args.timeout)
    records = []
    discarded = failed = 0
    try:
        if isinstance(backend, ExternalSession):
            backend.handshake()  # failure here means the backend is down: exit 3
        for index, inst in enumerate(instances):
            instance_id = inst.instance_id if inst.instance_id is not None else index
            try:
                pairs = build_pairs(
                    inst,
                    inventory=inv,
                    registry=reg,
                    mode=wsd_mode,
                    condition=rp_condition,
                    seed=args.seed,
                )
            except DiscardSignal:
                discarded += 1
                records.append({"instance_id": instance_id, "predicted": None, "scores": []})
                continue
            try:
                scores = backend.score(pairs)
            except BackendError:
                failed += 1
                records.append({"instance_id": instance_id, "predicted": None, "scores": []})
                continue
            records.append(
                {
                    "instance_id": instance_id,
                    "predicted": pairs[select(scores)].candidate_id,
                    "scores": scores,
                }
            )
    finally:
        if isinstance(backend, ExternalSession):
            backend.close()
    text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    _atomic_write(Path(args.out), text)
    print(
        json.dumps(
            {
                "format_version": FORMAT_VERSION,
                "instances": len(instances),
                "discarded": discarded,
                "backend_failed": failed,
                "seed": args.seed,
            }
        )
    )
    return EXIT_OK


def _load_predictions(path: str, n_instances: int) -> list[str | None]:
    preds: list[str | None] = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        expected = len(preds)
        if record.get("instance_id") != expected:
            raise ValidationError(
                f"predictions line {lineno}: instance_id {record.get('instance_id')!r}"
                f" does not match expected {expected}"
            )
        preds.append(record.get("predicted"))
    if len(preds) != n_instances:
        raise ValidationError(
            f"{len(preds)} predictions for {n_instances} instances"
        )
    return preds


def cmd_evaluate(args: argparse.Namespace) -> int:
    inv = _load_inventory(args.inventory, args.pos_map)
    reg = _load_registry(args.registry)
    instances = load_instances(_read_lines(args.instances))
    if not instances:
        raise ValidationError("no instances to evaluate")
    tasks = {inst.task for inst in instances}
    if len(tasks) != 1:
        raise ValidationError("evaluate expects a single-task instance file")
    task = tasks.pop()
    wsd_mode, rp_condition = _parse_modes(args.mode)
    train = load_instances(_read_lines(args.train)) if args.train else None

    if args.predictions:
        preds = _load_predictions(args.predictions, len(instances))
        counts = {
            "instances": len(instances),
            "discarded": sum(1 for p in preds if p is None),
            "backend_failed": 0,
        }
    else:
        backend = make_backend(args.backend, seed=args.seed, timeout=args.timeout)
        try:
            if isinstance(backend, ExternalSession):
                backend.handshake()
            preds, counts = predict_all(
                instances,
                backend,
                inventory=inv,
                registry=reg,
                mode=wsd_mode,
                condition=rp_condition,
                seed=args.seed,
            )
        finally:
            if isinstance(backend, ExternalSession):
                backend.close()

    if task is Task.WSD:
        if inv is None:
            raise ValidationError("WSD evaluation requires --inventory")
        report = wsd_report(
            instances, preds, inv,
            condition=wsd_mode.value, counts=counts, seed=args.seed,
            trials=args.trials, train=train, mode=wsd_mode,
        )
    else:
        if reg is None:
            raise ValidationError("RP evaluation requires --registry")
        report = rp_report(
            instances, preds, reg,
            condition=rp_condition.value, counts=counts, seed=args.seed,
            trials=args.trials, train=train, rp_condition=rp_condition,
        )
    _atomic_write(Path(args.out), json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n")
    print(json.dumps({"overall": report.overall, "out": args.out}))
    return EXIT_OK


def cmd_kappa(args: argparse.Namespace) -> int:
    with open(args.agreement, encoding="utf-8") as fp:
        matrix = load_agreement_csv(fp)
    value = fleiss_kappa(matrix)
    payload = json.dumps(
        {"format_version": FORMAT_VERSION, "kappa": value, "items": int(matrix.shape[0])}
    )
    if args.out:
        _atomic_write(Path(args.out), payload + "\n")
    print(payload)
    return EXIT_OK


def cmd_build_dataset(args: argparse.Namespace) -> int:
    mentions = ds.load_corpus(_read_lines(args.corpus))
    if args.category_map:
        category_map = ds.CategoryMap.from_jsonl(_read_lines(args.category_map))
    else:
        category_map = ds.CategoryMap.builtin()
    if args.wikidata_fixture:
        client: ds.WikidataClient = ds.FixtureWikidataClient(_read_lines(args.wikidata_fixture))
    elif args.wikidata_live:
        client = ds.LiveWikidataClient(endpoint=args.endpoint)
    else:
        raise _CliError(
            EXIT_INPUT, "config", "need --wikidata-fixture PATH or --wikidata-live"
        )
    build = ds.build_dataset(
        mentions,
        client,
        category_map,
        percentile=args.percentile,
        sample_size=args.sample_size,
        seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    buffer = io.StringIO()
    dump_instances(build.instances, buffer)
    _atomic_write(out_dir / "instances.jsonl", buffer.getvalue())
    registry_text = "".join(
        json.dumps(row, ensure_ascii=False) + "\n" for row in build.registry_rows
    )
    _atomic_write(out_dir / "registry.jsonl", registry_text)
    _atomic_write(
        out_dir / "manifest.json",
        json.dumps(build.manifest, ensure_ascii=False, indent=2) + "\n",
    )
    print(json.dumps(build.manifest["stages"]))
    return EXIT_OK


def cmd_import_labels(args: argparse.Namespace) -> int:
    reg = _load_registry(args.registry)
    if reg is None:
        raise ValidationError("import-labels requires --registry")
    instances = load_instances(_read_lines(args.instances))
    labels: dict[int, str] = {}
    for lineno, line in enumerate(_read_lines(args.labels), start=1):
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        labels[int(record["instance_id"])] = record["label"]
    candidate_names = {
        lemma: reg.entry(lemma).dot_object.class_names() for lemma in reg
    }
    labeled = ds.import_labels(instances, labels, candidate_names)
    buffer = io.StringIO()
    dump_instances(labeled, buffer)
    _atomic_write(Path(args.out), buffer.getvalue())
    print(json.dumps({"labeled": len(labels), "instances": len(labeled)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexidot",
        description="Disambiguate common-word senses and proper-noun type classes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-pairs", help="flatten instances into context-gloss pairs")
    _common_flags(p)
    p.set_defaults(func=cmd_build_pairs)

    p = sub.add_parser("disambiguate", help="score pairs and pick winning candidates")
    _common_flags(p, backend=True)
    p.set_defaults(func=cmd_disambiguate)

    p = sub.add_parser("evaluate", help="score predictions into a full report")
    _common_flags(p, backend=True)
    p.add_argument("--predictions", help="predictions JSONL (skips running a backend)")
    p.add_argument("--train", help="labeled training instances for MFS/MostFreq baselines")
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("kappa", help="Fleiss' kappa over an agreement CSV")
    p.add_argument("--agreement", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("build-dataset", help="corpus -> proper-noun dataset pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--category-map", help="category map JSONL (defaults to built-in)")
    p.add_argument("--wikidata-fixture", help="fixture client JSONL")
    p.add_argument("--wikidata-live", action="store_true")
    p.add_argument("--endpoint", help="live API root; default env LEXIDOT_WIKIDATA_ENDPOINT")
    p.add_argument("--percentile", type=float, default=0.99)
    p.add_argument("--sample-size", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format-version", default="1", choices=["1"])
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("import-labels", help="attach validated gold labels to instances")
    p.add_argument("--instances", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_labels)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        return _fail(exc.code, exc.kind, str(exc))
    except WikidataTransportError as exc:
        return _fail(EXIT_NETWORK, "network", str(exc))
    except BackendError as exc:
        return _fail(EXIT_BACKEND, "backend", str(exc))
    except (RecordError, ValidationError, UnknownLemmaError) as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_INPUT, "io", str(exc))
    except LexidotError as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc))
    except ValueError as exc:
        return _fail(EXIT_INPUT, "argument", str(exc))


if __name__ == "__main__":
    sys.exit(main())
