import json

import pytest

from toydata import instances_to_pairs, make_instances


@pytest.fixture
def train_instances():
    return make_instances(50, seed=11)  # 50 instances x 4 candidates = 200 pairs


@pytest.fixture
def heldout_instances():
    return make_instances(40, seed=23)


@pytest.fixture
def train_pairs(train_instances):
    return instances_to_pairs(train_instances)


@pytest.fixture
def pair_file(tmp_path, train_pairs):
    path = tmp_path / "train_pairs.jsonl"
    path.write_text(
        "".join(json.dumps(p, ensure_ascii=False) + "\n" for p in train_pairs),
        encoding="utf-8",
    )
    return path
