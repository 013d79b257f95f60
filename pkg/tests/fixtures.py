"""Synthetic dataset builders shared by the runner and acceptance tests.

All builders are deterministic: fixed vocabularies and arithmetic index
schedules, no RNG, so expected outcomes are stable across sessions.
"""

from __future__ import annotations

import json
from pathlib import Path

ADJECTIVES = ("red", "blue", "steel", "wooden", "leather")
TYPES = ("dress", "shirt", "lamp", "chair", "bottle", "kettle", "sofa", "boot", "scarf", "wallet")


def write_jsonl(path: Path, records: list[dict]) -> None:
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), "utf-8")


def lexical_fixture(root: Path, n_queries: int = 30) -> dict[str, str]:
    """50 products with descriptive titles; relevant items share query tokens.

    Each query names one exact product (its title), one substitute (same
    type, different adjective), and two irrelevant items (different type).
    Queries alternate train/test explicitly.
    """
    products = []
    for a, adjective in enumerate(ADJECTIVES):
        for t, type_name in enumerate(TYPES):
            products.append(
                {
                    "product_id": f"P{a}{t}",
                    "title": f"{adjective} {type_name}",
                    "description": f"a {adjective} {type_name} for everyday use",
                    "image_ref": f"img/{adjective}_{type_name}.jpg",
                }
            )
    queries = []
    judgments = []
    for i in range(n_queries):
        a, t = i % len(ADJECTIVES), (i * 3 + 1) % len(TYPES)
        qid = f"q{i:03d}"
        split = "train" if i % 2 == 0 else "test"
        queries.append({"query_id": qid, "text": f"{ADJECTIVES[a]} {TYPES[t]}"})
        exact = f"P{a}{t}"
        substitute = f"P{(a + 1) % len(ADJECTIVES)}{t}"
        irrelevant_1 = f"P{(a + 2) % len(ADJECTIVES)}{(t + 4) % len(TYPES)}"
        irrelevant_2 = f"P{(a + 3) % len(ADJECTIVES)}{(t + 7) % len(TYPES)}"
        for pid, label in ((exact, "E"), (substitute, "S"), (irrelevant_1, "I"), (irrelevant_2, "I")):
            judgments.append(
                {"query_id": qid, "product_id": pid, "label": label, "split": split}
            )
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "products.jsonl", products)
    write_jsonl(root / "queries.jsonl", queries)
    write_jsonl(root / "judgments.jsonl", judgments)
    return {
        "products_path": str(root / "products.jsonl"),
        "queries_path": str(root / "queries.jsonl"),
        "judgments_path": str(root / "judgments.jsonl"),
    }


def baseline_fixture(root: Path, n_queries: int = 240, pool: int = 30, fillers: int = 600) -> dict[str, str]:
    """Popularity-transfer fixture: a small pool of recurring relevant items.

    Exact items come from the shared pool (so training counts generalize to
    test queries); irrelevant originals come from a large filler set that
    never recurs enough to score. Every other test query also carries a
    substitute that never appears in training, so the popularity baseline
    has something to lose as padding grows, like real unseen items do.
    """
    products = [{"product_id": f"POP{i:03d}", "title": f"popular item {i}"} for i in range(pool)]
    products += [{"product_id": f"FIL{i:04d}", "title": f"filler item {i}"} for i in range(fillers)]
    products += [{"product_id": f"NEW{i:04d}", "title": f"fresh item {i}"} for i in range(n_queries)]
    queries = []
    judgments = []
    for i in range(n_queries):
        qid = f"q{i:04d}"
        split = "test" if i % 4 == 0 else "train"  # 25% evaluation queries
        queries.append({"query_id": qid, "text": f"need item {i}"})
        chosen: dict[str, str] = {}
        exact_count = 1 + (i % 2)
        candidate = i
        while sum(1 for v in chosen.values() if v == "E") < exact_count:
            pid = f"POP{candidate % pool:03d}"
            if pid not in chosen:
                chosen[pid] = "E"
            candidate += 7
        if split == "test" and i % 8 == 0:
            chosen[f"NEW{i:04d}"] = "S"  # unseen in training: score 0
        else:
            substitute = f"POP{(i * 11 + 5) % pool:03d}"
            if substitute not in chosen:
                chosen[substitute] = "S"
        if i % 3 == 0:
            chosen[f"FIL{(i * 13) % fillers:04d}"] = "I"
        for pid, label in sorted(chosen.items()):
            judgments.append({"query_id": qid, "product_id": pid, "label": label, "split": split})
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "products.jsonl", products)
    write_jsonl(root / "queries.jsonl", queries)
    write_jsonl(root / "judgments.jsonl", judgments)
    return {
        "products_path": str(root / "products.jsonl"),
        "queries_path": str(root / "queries.jsonl"),
        "judgments_path": str(root / "judgments.jsonl"),
    }


def modality_fixture(root: Path, n_queries: int = 20) -> dict[str, str]:
    """Discriminative tokens live only in image locators, never in titles.

    Titles are near-constant catalog noise; image file names carry the
    adjective+type tokens the queries ask for, so stub captions (which
    embed the locator) are the only searchable signal.
    """
    products = []
    for a, adjective in enumerate(ADJECTIVES):
        for t, type_name in enumerate(TYPES):
            products.append(
                {
                    "product_id": f"M{a}{t}",
                    "title": f"catalog item {a}{t}",
                    "image_ref": f"img/{adjective} {type_name} photo.jpg",
                }
            )
    queries = []
    judgments = []
    for i in range(n_queries):
        a, t = i % len(ADJECTIVES), (i * 7 + 2) % len(TYPES)
        qid = f"q{i:03d}"
        queries.append({"query_id": qid, "text": f"{ADJECTIVES[a]} {TYPES[t]} photo"})
        rows = [
            (f"M{a}{t}", "E"),
            (f"M{(a + 1) % len(ADJECTIVES)}{t}", "S"),
            (f"M{(a + 2) % len(ADJECTIVES)}{(t + 3) % len(TYPES)}", "I"),
            (f"M{(a + 4) % len(ADJECTIVES)}{(t + 6) % len(TYPES)}", "I"),
        ]
        for pid, label in rows:
            judgments.append({"query_id": qid, "product_id": pid, "label": label, "split": "test"})
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "products.jsonl", products)
    write_jsonl(root / "queries.jsonl", queries)
    write_jsonl(root / "judgments.jsonl", judgments)
    return {
        "products_path": str(root / "products.jsonl"),
        "queries_path": str(root / "queries.jsonl"),
        "judgments_path": str(root / "judgments.jsonl"),
    }


def distribution_fixture(root: Path, n_queries: int = 500, catalog_size: int = 3000) -> dict[str, str]:
    """Label shares near E 37.7%, S 37.0%, C 3.5%, I 21.8% at about 4.8 E/Q."""
    shares = (("E", 0.377), ("S", 0.370), ("C", 0.035), ("I", 0.218))
    total = round(n_queries * 4.8)
    labels: list[str] = []
    for label, share in shares:
        labels.extend([label] * round(total * share))
    while len(labels) < total:
        labels.append("I")
    labels = labels[:total]
    # interleave labels deterministically so every query gets a realistic mix
    labels.sort()
    stride = 7  # coprime with the list length's typical factors
    order = [(i * stride) % len(labels) for i in range(len(labels))]
    shuffled = [labels[i] for i in order] if len(set(order)) == len(labels) else labels

    products = [{"product_id": f"C{i:05d}", "title": f"item {i}"} for i in range(catalog_size)]
    queries = [{"query_id": f"q{i:04d}", "text": f"query {i}"} for i in range(n_queries)]
    judgments = []
    cursor = 0
    next_product = 0
    for i in range(n_queries):
        size = 5 if i % 5 < 4 else 4  # mean 4.8 examples per query
        for _ in range(size):
            if cursor >= len(shuffled):
                break
            judgments.append(
                {
                    "query_id": f"q{i:04d}",
                    "product_id": f"C{next_product % catalog_size:05d}",
                    "label": shuffled[cursor],
                    "split": "test",
                }
            )
            cursor += 1
            next_product += 1
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "products.jsonl", products)
    write_jsonl(root / "queries.jsonl", queries)
    write_jsonl(root / "judgments.jsonl", judgments)
    return {
        "products_path": str(root / "products.jsonl"),
        "queries_path": str(root / "queries.jsonl"),
        "judgments_path": str(root / "judgments.jsonl"),
    }
