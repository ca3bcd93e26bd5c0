import json
import sys

import pytest

from lexidot.cli import main

from fixtures import (
    INVENTORY_RECORDS,
    REGISTRY_RECORDS,
    jsonl,
)

WSD_INSTANCES = [
    {"sentence": "雇主一狀告到上頭", "start": 3, "end": 4, "lemma": "狀",
     "pos_raw": "Na", "gold": "06613404", "task": "WSD"},
    {"sentence": "他去打點上司", "start": 2, "end": 4, "lemma": "打點",
     "pos_raw": "VC", "gold": "05170001", "task": "WSD"},
    {"sentence": "他泡了一杯茶", "start": 5, "end": 6, "lemma": "茶",
     "pos_raw": "Na", "gold": "03010001", "task": "WSD"},
    {"sentence": "他始終單身", "start": 3, "end": 5, "lemma": "單身",
     "pos_raw": "Na", "gold": "07230001", "task": "WSD"},
]

RP_INSTANCES = [
    {"sentence": "他最近為了哈佛學費煩惱", "start": 5, "end": 7, "lemma": "哈佛",
     "pos_raw": "Nb", "gold": "Organization", "task": "RP"},
    {"sentence": "天天喝星巴克總比天天吃牛排還好吧", "start": 3, "end": 6,
     "lemma": "星巴克", "pos_raw": "Nb", "gold": "Product", "task": "RP"},
]


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "inventory.jsonl").write_text(
        "\n".join(jsonl(INVENTORY_RECORDS)) + "\n", encoding="utf-8"
    )
    (tmp_path / "registry.jsonl").write_text(
        "\n".join(jsonl(REGISTRY_RECORDS)) + "\n", encoding="utf-8"
    )
    (tmp_path / "wsd.jsonl").write_text(
        "\n".join(jsonl(WSD_INSTANCES)) + "\n", encoding="utf-8"
    )
    (tmp_path / "rp.jsonl").write_text(
        "\n".join(jsonl(RP_INSTANCES)) + "\n", encoding="utf-8"
    )
    return tmp_path


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_build_pairs_summary(workspace, capsys):
    out_path = workspace / "pairs.jsonl"
    code, out, _ = _run(capsys, [
        "build-pairs",
        "--instances", str(workspace / "wsd.jsonl"),
        "--inventory", str(workspace / "inventory.jsonl"),
        "--mode", "pos-guided",
        "--seed", "0",
        "--out", str(out_path),
    ])
    assert code == 0
    summary = json.loads(out)
    # 狀:4 + 打點(POS-guided VC):2 + 茶:2, 單身 discarded
    assert summary["examples"] == 3
    assert summary["sequences"] == 8
    assert summary["discarded"] == 1
    assert summary["seed"] == 0
    lines = out_path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == summary["sequences"]
    record = json.loads(lines[0])
    assert set(record) == {"instance_id", "context", "gloss", "candidate_id", "label"}


def test_build_pairs_missing_inventory(workspace, capsys):
    code, _, err = _run(capsys, [
        "build-pairs",
        "--instances", str(workspace / "wsd.jsonl"),
        "--inventory", str(workspace / "nope.jsonl"),
        "--out", str(workspace / "pairs.jsonl"),
    ])
    assert code == 2
    assert "error" in json.loads(err)


def test_build_pairs_rerun_byte_identical(workspace, capsys):
    args = [
        "build-pairs",
        "--instances", str(workspace / "wsd.jsonl"),
        "--inventory", str(workspace / "inventory.jsonl"),
        "--seed", "11",
        "--out", str(workspace / "pairs.jsonl"),
    ]
    assert main(args) == 0
    first = (workspace / "pairs.jsonl").read_bytes()
    capsys.readouterr()
    assert main(args) == 0
    capsys.readouterr()
    assert (workspace / "pairs.jsonl").read_bytes() == first


def test_unknown_flag_rejected(workspace):
    with pytest.raises(SystemExit) as excinfo:
        main(["build-pairs", "--no-such-flag"])
    assert excinfo.value.code == 2


def test_disambiguate_oracle_all_correct(workspace, capsys):
    out_path = workspace / "preds.jsonl"
    code, out, _ = _run(capsys, [
        "disambiguate",
        "--instances", str(workspace / "rp.jsonl"),
        "--registry", str(workspace / "registry.jsonl"),
        "--mode", "dotted",
        "--backend", "oracle",
        "--out", str(out_path),
    ])
    assert code == 0
    records = [json.loads(l) for l in out_path.read_text(encoding="utf-8").splitlines()]
    assert [r["predicted"] for r in records] == ["Organization", "Product"]
    assert all(set(r) == {"instance_id", "predicted", "scores"} for r in records)


def test_disambiguate_overlap_matches_library(workspace, capsys):
    out_path = workspace / "preds.jsonl"
    code, _, _ = _run(capsys, [
        "disambiguate",
        "--instances", str(workspace / "wsd.jsonl"),
        "--inventory", str(workspace / "inventory.jsonl"),
        "--backend", "overlap",
        "--seed", "0",
        "--out", str(out_path),
    ])
    assert code == 0
    from lexidot import OverlapBackend, load_instances, load_inventory
    from lexidot.errors import DiscardSignal
    from lexidot.scoring import disambiguate

    inv = load_inventory(jsonl(INVENTORY_RECORDS))
    instances = load_instances(jsonl(WSD_INSTANCES))
    expected = []
    for inst in instances:
        try:
            expected.append(disambiguate(inst, backend=OverlapBackend(), inventory=inv, seed=0))
        except DiscardSignal:
            expected.append(None)
    records = [json.loads(l) for l in out_path.read_text(encoding="utf-8").splitlines()]
    assert [r["predicted"] for r in records] == expected


def test_disambiguate_backend_down_exit_3(workspace, capsys):
    code, _, err = _run(capsys, [
        "disambiguate",
        "--instances", str(workspace / "rp.jsonl"),
        "--registry", str(workspace / "registry.jsonl"),
        "--backend", f"external:{sys.executable} -c pass",
        "--timeout", "5",
        "--out", str(workspace / "preds.jsonl"),
    ])
    assert code == 3
    assert json.loads(err)["error"]["type"] == "backend"


def test_evaluate_report(workspace, capsys):
    report_path = workspace / "report.json"
    code, out, _ = _run(capsys, [
        "evaluate",
        "--instances", str(workspace / "rp.jsonl"),
        "--registry", str(workspace / "registry.jsonl"),
        "--mode", "dotted",
        "--backend", "oracle",
        "--trials", "2000",
        "--out", str(report_path),
    ])
    assert code == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["format_version"] == "1"
    assert 0.0 <= report["overall"] <= 1.0
    assert report["overall"] == 1.0
    random_baseline = report["baselines"]["random"]
    assert abs(random_baseline["monte_carlo"] - random_baseline["analytic"]) <= 0.02
    assert report["counts"]["instances"] == 2


def test_evaluate_wsd_with_train_mfs(workspace, capsys):
    train_path = workspace / "train.jsonl"
    train_records = [WSD_INSTANCES[2]] * 3  # 茶 gold 03010001 thrice
    train_path.write_text("\n".join(jsonl(train_records)) + "\n", encoding="utf-8")
    report_path = workspace / "report.json"
    code, _, _ = _run(capsys, [
        "evaluate",
        "--instances", str(workspace / "wsd.jsonl"),
        "--inventory", str(workspace / "inventory.jsonl"),
        "--backend", "oracle",
        "--train", str(train_path),
        "--trials", "500",
        "--out", str(report_path),
    ])
    assert code == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert "mfs" in report["baselines"]
    assert report["counts"]["discarded"] == 1
    totals = [b["total"] for b in report["buckets"]["complexity"].values()]
    assert sum(totals) == len(WSD_INSTANCES)


def test_evaluate_from_predictions_and_id_mismatch(workspace, capsys):
    preds_path = workspace / "preds.jsonl"
    code, _, _ = _run(capsys, [
        "disambiguate",
        "--instances", str(workspace / "rp.jsonl"),
        "--registry", str(workspace / "registry.jsonl"),
        "--backend", "oracle",
        "--out", str(preds_path),
    ])
    assert code == 0
    report_path = workspace / "report.json"
    code, _, _ = _run(capsys, [
        "evaluate",
        "--instances", str(workspace / "rp.jsonl"),
        "--registry", str(workspace / "registry.jsonl"),
        "--predictions", str(preds_path),
        "--trials", "100",
        "--out", str(report_path),
    ])
    assert code == 0
    assert json.loads(report_path.read_text(encoding="utf-8"))["overall"] == 1.0

    # corrupt an id: validation error, exit 2
    lines = preds_path.read_text(encoding="utf-8").splitlines()
    bad = json.loads(lines[1])
    bad["instance_id"] = 41
    preds_path.write_text(lines[0] + "\n" + json.dumps(bad) + "\n", encoding="utf-8")
    code, _, err = _run(capsys, [
        "evaluate",
        "--instances", str(workspace / "rp.jsonl"),
        "--registry", str(workspace / "registry.jsonl"),
        "--predictions", str(preds_path),
        "--trials", "100",
        "--out", str(report_path),
    ])
    assert code == 2


def test_kappa_perfect_csv(workspace, capsys):
    csv_path = workspace / "agreement.csv"
    csv_path.write_text("2,0\n0,2\n2,0\n", encoding="utf-8")
    code, out, _ = _run(capsys, ["kappa", "--agreement", str(csv_path)])
    assert code == 0
    assert json.loads(out)["kappa"] == 1.0


def test_build_dataset_manifest(workspace, capsys):
    corpus_path = workspace / "corpus.jsonl"
    rows = []
    for i in range(40):
        rows.append({
            "sentence": f"第{i}篇談星巴克如故",
            "mentions": [{"surface": "星巴克", "type": "ORG",
                          "start": f"第{i}篇談".__len__(), "end": f"第{i}篇談".__len__() + 3}],
        })
    corpus_path.write_text("\n".join(jsonl(rows)) + "\n", encoding="utf-8")
    fixture_path = workspace / "wikidata.jsonl"
    fixture_path.write_text(
        json.dumps({"word": "星巴克", "entries": [
            {"qid": "Q37158", "label": "星巴克", "categories": ["business"]},
        ]}, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    out_dir = workspace / "dataset"
    code, out, _ = _run(capsys, [
        "build-dataset",
        "--corpus", str(corpus_path),
        "--wikidata-fixture", str(fixture_path),
        "--sample-size", "30",
        "--seed", "5",
        "--out-dir", str(out_dir),
    ])
    assert code == 0
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["stages"]["instances"] == 30
    assert manifest["seed"] == 5
    instances = (out_dir / "instances.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(instances) == 30
    registry = [json.loads(l) for l in (out_dir / "registry.jsonl").read_text(encoding="utf-8").splitlines()]
    assert registry[0]["dot_object"] == "Prcr.Prct.Loc"


def test_build_dataset_empty_corpus(workspace, capsys):
    corpus_path = workspace / "empty.jsonl"
    corpus_path.write_text("", encoding="utf-8")
    fixture_path = workspace / "wikidata.jsonl"
    fixture_path.write_text("", encoding="utf-8")
    out_dir = workspace / "dataset"
    code, _, _ = _run(capsys, [
        "build-dataset",
        "--corpus", str(corpus_path),
        "--wikidata-fixture", str(fixture_path),
        "--out-dir", str(out_dir),
    ])
    assert code == 0
    assert (out_dir / "instances.jsonl").read_text(encoding="utf-8") == ""


def test_build_dataset_live_without_network_exit_4(workspace, capsys, monkeypatch):
    corpus_path = workspace / "corpus.jsonl"
    corpus_path.write_text(
        json.dumps({
            "sentence": "再談星巴克如何",
            "mentions": [{"surface": "星巴克", "type": "ORG", "start": 2, "end": 5}],
        }, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    code, _, err = _run(capsys, [
        "build-dataset",
        "--corpus", str(corpus_path),
        "--wikidata-live",
        "--endpoint", "http://127.0.0.1:1",  # nothing listens here
        "--out-dir", str(workspace / "dataset"),
    ])
    assert code == 4
    assert json.loads(err)["error"]["type"] == "network"


def test_import_labels_cli(workspace, capsys):
    labels_path = workspace / "labels.jsonl"
    labels_path.write_text(
        json.dumps({"instance_id": 0, "label": "Location"}) + "\n", encoding="utf-8"
    )
    out_path = workspace / "labeled.jsonl"
    code, _, _ = _run(capsys, [
        "import-labels",
        "--instances", str(workspace / "rp.jsonl"),
        "--labels", str(labels_path),
        "--registry", str(workspace / "registry.jsonl"),
        "--out", str(out_path),
    ])
    assert code == 0
    records = [json.loads(l) for l in out_path.read_text(encoding="utf-8").splitlines()]
    assert records[0]["gold"] == "Location"
    assert records[1]["gold"] == "Product"  # untouched
