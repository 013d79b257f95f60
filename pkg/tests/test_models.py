"""Domain type invariants: labels, records, container uniqueness, splits."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from escirank.errors import DataError
from escirank.models import (
    Catalog,
    Dataset,
    EsciLabel,
    Judgment,
    JudgmentSet,
    Product,
    Provenance,
    Query,
    QuerySet,
    assign_hash_split,
    validate_dataset,
)


class TestEsciLabel:
    @pytest.mark.parametrize("token,expected", [
        ("E", EsciLabel.EXACT),
        ("e", EsciLabel.EXACT),
        ("s", EsciLabel.SUBSTITUTE),
        (" c ", EsciLabel.COMPLEMENT),
        ("I", EsciLabel.IRRELEVANT),
    ])
    def test_parse_case_insensitive(self, token, expected):
        assert EsciLabel.parse(token) is expected

    @pytest.mark.parametrize("token", ["X", "", "EX", "exact", "1", None])
    def test_parse_rejects_other_tokens(self, token):
        with pytest.raises(DataError):
            EsciLabel.parse(token)

    @given(st.sampled_from("ESCI"), st.booleans())
    def test_parse_total_over_case_variants(self, letter, lower):
        token = letter.lower() if lower else letter
        assert EsciLabel.parse(token).value == letter

    def test_canonical_output_is_uppercase(self):
        assert str(EsciLabel.parse("e")) == "E"


class TestRecords:
    def test_product_requires_id(self):
        with pytest.raises(DataError):
            Product(product_id="", title="x")

    def test_generated_fields_require_provenance(self):
        with pytest.raises(DataError, match="provenance"):
            Product(product_id="P1", title="x", generated_caption="a caption")
        prov = Provenance("stub", "stub-caption", "abc")
        product = Product(product_id="P1", title="x", generated_caption="a caption",
                          caption_provenance=prov)
        assert product.generated_caption == "a caption"

    def test_query_requires_text(self):
        with pytest.raises(DataError):
            Query("q1", "")

    def test_padded_judgment_must_be_irrelevant(self):
        with pytest.raises(DataError):
            Judgment("q1", "p1", EsciLabel.EXACT, origin="padded")
        judgment = Judgment("q1", "p1", EsciLabel.IRRELEVANT, origin="padded")
        assert judgment.origin == "padded"


class TestContainers:
    def test_catalog_rejects_duplicates(self):
        with pytest.raises(DataError, match="duplicate product_id"):
            Catalog([Product("P1", title="a"), Product("P1", title="b")])

    def test_queryset_rejects_duplicates(self):
        with pytest.raises(DataError, match="duplicate query_id"):
            QuerySet([Query("q1", "a"), Query("q1", "b")])

    def test_judgmentset_rejects_duplicate_pairs(self):
        rows = [Judgment("q1", "p1", EsciLabel.EXACT), Judgment("q1", "p1", EsciLabel.SUBSTITUTE)]
        with pytest.raises(DataError, match="duplicate judgment"):
            JudgmentSet(rows)

    def test_judgmentset_lookup(self):
        judgments = JudgmentSet([
            Judgment("q1", "p1", EsciLabel.EXACT),
            Judgment("q1", "p2", EsciLabel.IRRELEVANT),
            Judgment("q2", "p1", EsciLabel.SUBSTITUTE),
        ])
        assert len(judgments.for_query("q1")) == 2
        assert judgments.get("q2", "p1").label is EsciLabel.SUBSTITUTE
        assert judgments.get("q2", "p9") is None


class TestDataset:
    def _parts(self):
        catalog = Catalog([Product("p1", title="a"), Product("p2", title="b")])
        queries = QuerySet([Query("q1", "one"), Query("q2", "two")])
        judgments = JudgmentSet([
            Judgment("q1", "p1", EsciLabel.EXACT),
            Judgment("q1", "p2", EsciLabel.IRRELEVANT),
            Judgment("q2", "p2", EsciLabel.SUBSTITUTE),
        ])
        return catalog, queries, judgments

    def test_consistent_fixture_validates_clean(self):
        report = validate_dataset(*self._parts())
        assert report.ok and not report.dropped_empty_queries
        assert report.describe() == "dataset consistent"

    def test_dangling_product_named(self):
        catalog, queries, _ = self._parts()
        judgments = JudgmentSet([Judgment("q1", "ZZZ", EsciLabel.EXACT)])
        report = validate_dataset(catalog, queries, judgments)
        assert report.dangling_product_ids == ("ZZZ",)
        with pytest.raises(DataError, match="ZZZ"):
            Dataset.build(catalog, queries, judgments)

    def test_orphan_query_dropped_with_count(self, caplog):
        catalog, queries, judgments = self._parts()
        queries = QuerySet(list(queries) + [Query("q3", "orphan")])
        report = validate_dataset(catalog, queries, judgments)
        assert report.dropped_empty_queries == ("q3",)
        with caplog.at_level("WARNING"):
            dataset = Dataset.build(catalog, queries, judgments)
        assert "q3" not in dataset.queries
        assert len(dataset.queries) == 2

    def test_referential_integrity_after_build(self):
        dataset = Dataset.build(*self._parts())
        for judgment in dataset.judgments:
            assert judgment.query_id in dataset.queries
            assert judgment.product_id in dataset.catalog

    def test_query_split_is_test_when_any_test_judgment(self):
        catalog, queries, _ = self._parts()
        judgments = JudgmentSet([
            Judgment("q1", "p1", EsciLabel.EXACT, split="train"),
            Judgment("q1", "p2", EsciLabel.EXACT, split="test"),
            Judgment("q2", "p2", EsciLabel.EXACT, split="train"),
        ])
        dataset = Dataset.build(catalog, queries, judgments)
        assert dataset.query_split("q1") == "test"
        assert dataset.query_split("q2") == "train"
        assert dataset.test_query_ids() == ["q1"]


class TestHashSplit:
    def test_split_is_deterministic_and_query_consistent(self):
        judgments = [
            Judgment(f"q{i}", f"p{j}", EsciLabel.EXACT) for i in range(50) for j in range(3)
        ]
        first = assign_hash_split(judgments, train_ratio=0.8, salt=7)
        second = assign_hash_split(judgments, train_ratio=0.8, salt=7)
        assert {(j.query_id, j.product_id): j.split for j in first} == {
            (j.query_id, j.product_id): j.split for j in second
        }
        by_query: dict[str, set[str]] = {}
        for judgment in first:
            by_query.setdefault(judgment.query_id, set()).add(judgment.split)
        assert all(len(splits) == 1 for splits in by_query.values())

    def test_ratio_roughly_respected(self):
        judgments = [Judgment(f"q{i}", "p0", EsciLabel.EXACT) for i in range(1000)]
        split = assign_hash_split(judgments, train_ratio=0.8, salt=0)
        train = sum(1 for j in split if j.split == "train")
        assert 700 < train < 900

    def test_invalid_ratio_rejected(self):
        with pytest.raises(DataError):
            assign_hash_split([], train_ratio=1.5)
