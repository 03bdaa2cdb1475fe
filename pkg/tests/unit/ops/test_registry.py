"""
Purpose: Test suite for the operator registry
"""
import pytest

from src.core.exceptions import ParamValidation, UnknownOp
from src.core.ops import OPERATORS, Registry
from src.core.ops.text_ops import TextLengthFilter
from tests.helpers import UpperMapper

CATALOG = {
    "text_length_filter", "character_repetition_filter", "words_num_filter",
    "special_characters_filter", "whitespace_normalization_mapper", "text_chunk_mapper",
    "image_shape_filter", "image_aspect_ratio_filter", "image_size_filter", "audio_size_filter",
    "document_deduplicator", "image_deduplicator", "document_minhash_deduplicator",
    "range_selector", "random_selector", "naive_grouper", "key_value_grouper",
    "count_aggregator", "concat_aggregator", "script_mapper",
}


class TestRegistry:
    def test_catalog_is_registered(self):
        assert CATALOG <= set(OPERATORS.names())
        assert OPERATORS.names() == sorted(OPERATORS.names())

    def test_create_validates_params(self):
        op = OPERATORS.create("text_length_filter", {"min_len": 3})
        assert isinstance(op, TextLengthFilter)
        assert op.params.min_len == 3

    def test_unknown_op(self):
        with pytest.raises(UnknownOp) as exc:
            OPERATORS.create("nope")
        assert exc.value.exit_code == 2

    def test_params_must_be_a_mapping(self):
        with pytest.raises(ParamValidation):
            OPERATORS.create("text_length_filter", [1, 2])

    def test_describe_lists_types_and_params(self):
        rows = {row["name"]: row for row in OPERATORS.describe()}
        assert rows["text_length_filter"]["type"] == "Filter"
        assert "min_len" in rows["text_length_filter"]["params"]
        assert rows["document_deduplicator"]["supports_batch"] is False

    def test_double_registration_with_another_class_fails(self):
        class Shout(UpperMapper):
            pass

        registry = Registry()
        registry.register("upper")(Shout)
        registry.register("upper")(Shout)
        with pytest.raises(ValueError):
            registry.register("upper")(TextLengthFilter)
        assert "upper" in registry
        assert list(registry) == [Shout]
        assert Shout.name == "upper"
