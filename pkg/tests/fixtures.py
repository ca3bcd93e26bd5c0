"""Shared fixture data: sense entries and dot-object registry rows."""

import json

# Four senses of 狀 (all common nouns); the fourth is the complaint sense.
ZHUANG_SENSES = [
    {
        "sense_id": "06613401",
        "lemma": "狀",
        "pos_raw": "Na",
        "gloss": "以說話者的觀點，描述特定對象呈現的樣子。",
        "examples": ["我故作痛苦地把眉頭一皺，作欲嘔狀。"],
    },
    {
        "sense_id": "06613402",
        "lemma": "狀",
        "pos_raw": "Na",
        "gloss": "構成特定對象的外部輪廓。",
        "examples": ["葉片呈心形狀，邊緣有鋸齒。"],
    },
    {
        "sense_id": "06613403",
        "lemma": "狀",
        "pos_raw": "Na",
        "gloss": "請求司法機關審理的案件。",
        "examples": ["向法院提出刑事陳明狀。"],
    },
    {
        "sense_id": "06613404",
        "lemma": "狀",
        "pos_raw": "Na",
        "gloss": "刻意向較有權力的人陳述他人的過失。",
        "examples": ["到產品公司的網站去告她一狀。"],
    },
]

# Mixed-POS lemma: two verbal senses, two nominal ones.
DADIAN_SENSES = [
    {
        "sense_id": "05170001",
        "lemma": "打點",
        "pos_raw": "VC",
        "gloss": "整理並準備後述事項所需的物品。",
        "examples": ["出門前先打點行李。"],
    },
    {
        "sense_id": "05170002",
        "lemma": "打點",
        "pos_raw": "VE",
        "gloss": "用金錢或人情疏通相關的人。",
        "examples": [],
    },
    {
        "sense_id": "05170003",
        "lemma": "打點",
        "pos_raw": "Na",
        "gloss": "棒球比賽中打擊者使跑者得分的紀錄。",
        "examples": ["他本季累積了九十個打點。"],
    },
    {
        "sense_id": "05170004",
        "lemma": "打點",
        "pos_raw": "Nc",
        "gloss": "表演開始前整备的場地位置。",
        "examples": [],
    },
]

# Single-sense lemma, used for the discard rule.
DANSHEN_SENSES = [
    {
        "sense_id": "07230001",
        "lemma": "單身",
        "pos_raw": "Na",
        "gloss": "沒有配偶的狀態。",
        "examples": ["他維持單身多年。"],
    },
]

# Two-sense lemma for MFS and small pipeline fixtures.
CHA_SENSES = [
    {
        "sense_id": "03010001",
        "lemma": "茶",
        "pos_raw": "Na",
        "gloss": "以茶葉沖泡而成的飲料。",
        "examples": ["他泡了一壺茶。"],
    },
    {
        "sense_id": "03010002",
        "lemma": "茶",
        "pos_raw": "Na",
        "gloss": "茶樹的葉子。",
        "examples": ["春天採的茶品質最好。"],
    },
]

INVENTORY_RECORDS = ZHUANG_SENSES + DADIAN_SENSES + DANSHEN_SENSES + CHA_SENSES

REGISTRY_RECORDS = [
    {"lemma": "星巴克", "dot_object": "Prcr.Prct.Loc", "wikidata_category": "business"},
    {"lemma": "哈佛", "dot_object": "Org.Loc.Hum", "wikidata_category": "university"},
    {"lemma": "海軍", "dot_object": "Org.Hum", "wikidata_category": "military unit"},
]


def jsonl(records) -> list[str]:
    return [json.dumps(r, ensure_ascii=False) for r in records]
