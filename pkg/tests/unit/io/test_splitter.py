"""
Purpose: Test suite for size-targeted, line-aligned source splitting
"""
from pathlib import Path

import orjson
import pytest

from src.core.exceptions import SourceNotFound
from src.core.io.splitter import SplitManifest, split_subsets
from tests.helpers import records


@pytest.fixture
def source(jsonl_file):
    return jsonl_file(records([f"sample number {i:03d}" for i in range(40)]))


def joined(manifest):
    return b"".join(Path(p).read_bytes() for p in manifest.part_paths)


class TestSplitSubsets:
    def test_parts_respect_target_and_keep_lines_whole(self, source, tmp_path):
        line = len(source.read_bytes().splitlines(keepends=True)[0])
        manifest = split_subsets(source, target_bytes=line * 6 + 3, out_dir=tmp_path / "split")

        assert len(manifest.parts) == 7
        assert all(part.byte_size <= manifest.target_bytes for part in manifest.parts)
        assert [part.sample_count for part in manifest.parts] == [6] * 6 + [4]
        assert joined(manifest) == source.read_bytes()
        assert manifest.warnings == []

    def test_manifest_is_written(self, source, tmp_path):
        manifest = split_subsets(source, target_bytes=1024, out_dir=tmp_path / "split")
        stored = SplitManifest.from_dict(orjson.loads((tmp_path / "split" / "manifest.json").read_bytes()))
        assert stored == manifest
        assert len(manifest.origin_digest) == 64

    def test_part_count_hint_spreads_small_sources(self, source, tmp_path):
        manifest = split_subsets(source, target_bytes=1 << 20, part_count_hint=4,
                                 out_dir=tmp_path / "split")
        assert len(manifest.parts) == 4
        assert [part.sample_count for part in manifest.parts] == [10, 10, 10, 10]
        assert joined(manifest) == source.read_bytes()

    def test_hint_never_lowers_the_part_count(self, source, tmp_path):
        total = source.stat().st_size
        manifest = split_subsets(source, target_bytes=total // 5 + 1, part_count_hint=2,
                                 out_dir=tmp_path / "split")
        assert len(manifest.parts) >= 5
        assert joined(manifest) == source.read_bytes()

    def test_size_bound_wins_over_the_hint(self, source, tmp_path):
        """Lines that cannot pair up under the target give more parts than the hint asks for"""
        line = len(source.read_bytes().splitlines(keepends=True)[0])
        manifest = split_subsets(source, target_bytes=line * 3 // 2, part_count_hint=30,
                                 out_dir=tmp_path / "split")

        assert len(manifest.parts) == 40
        assert all(part.byte_size <= manifest.target_bytes for part in manifest.parts)
        assert [part.sample_count for part in manifest.parts] == [1] * 40
        assert joined(manifest) == source.read_bytes()

    def test_oversized_sample_gets_its_own_part_and_a_warning(self, jsonl_file, tmp_path):
        path = jsonl_file(records(["tiny", "x" * 500, "tiny"]))
        manifest = split_subsets(path, target_bytes=100, out_dir=tmp_path / "split")

        assert [part.sample_count for part in manifest.parts] == [1, 1, 1]
        assert len(manifest.warnings) == 1
        assert manifest.warnings[0].startswith("OversizedSample")

    def test_default_output_directory(self, source):
        manifest = split_subsets(source, target_bytes=1 << 20)
        assert Path(manifest.parts[0].path).parent == source.parent / "data_split"

    def test_invalid_target(self, source):
        with pytest.raises(ValueError):
            split_subsets(source, target_bytes=0)

    def test_missing_source(self, tmp_path):
        with pytest.raises(SourceNotFound):
            split_subsets(tmp_path / "nope.jsonl")
