import pytest

from lexidot import (
    DotRegistry,
    SenseInventory,
    Task,
    TestInstance,
    load_inventory,
    load_registry,
)

from fixtures import INVENTORY_RECORDS, REGISTRY_RECORDS, jsonl


@pytest.fixture
def inventory() -> SenseInventory:
    return load_inventory(jsonl(INVENTORY_RECORDS))


@pytest.fixture
def registry() -> DotRegistry:
    return load_registry(jsonl(REGISTRY_RECORDS))


@pytest.fixture
def zhuang_instance() -> TestInstance:
    return TestInstance(
        sentence="雇主一狀告到上頭",
        start=3,
        end=4,
        lemma="狀",
        pos_raw="Na",
        task=Task.WSD,
        gold="06613404",
        instance_id=0,
    )


@pytest.fixture
def harvard_instance() -> TestInstance:
    return TestInstance(
        sentence="他最近為了哈佛學費煩惱",
        start=5,
        end=7,
        lemma="哈佛",
        pos_raw="Nb",
        task=Task.RP,
        gold="Organization",
        instance_id=1,
    )


@pytest.fixture
def starbucks_instance() -> TestInstance:
    return TestInstance(
        sentence="天天喝星巴克總比天天吃牛排還好吧",
        start=3,
        end=6,
        lemma="星巴克",
        pos_raw="Nb",
        task=Task.RP,
        gold="Product",
        instance_id=2,
    )
