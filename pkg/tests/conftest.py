# Standard library imports
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

# Third-party imports
import orjson
import pytest
from dotenv import load_dotenv
from PIL import Image
import yaml

from src.core.config import EngineConfig
from src.core.ops.base import OpContext


@pytest.fixture(scope="session", autouse=True)
def load_env():
    """Load environment variables before running tests."""
    load_dotenv()


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Pin engine settings so tests never depend on the caller's environment."""
    for name in ("DJ_SEED", "DJ_LOG_LEVEL", "DJ_BATCH_SIZE", "DJ_PROBE_SIZE",
                 "DJ_MEM_UTILIZATION", "DJ_ACCEL_SLOTS", "DJ_MONITOR_INTERVAL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("DJ_WORK_DIR", str(tmp_path / "outputs"))


@pytest.fixture
def engine_config() -> EngineConfig:
    return EngineConfig.from_env(seed=42)


@pytest.fixture
def ctx(engine_config, tmp_path) -> OpContext:
    """Operator context resolving media against the test's temp directory."""
    return OpContext(config=engine_config, base_dir=str(tmp_path))


@pytest.fixture
def jsonl_file(tmp_path) -> Callable[..., Path]:
    """Write records (dicts, or raw strings written verbatim) as one JSONL file."""
    def write(records: Sequence[Any], name: str = "data.jsonl") -> Path:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as handle:
            for record in records:
                line = record.encode("utf-8") if isinstance(record, str) else orjson.dumps(record)
                handle.write(line + b"\n")
        return path
    return write


@pytest.fixture
def png_file(tmp_path) -> Callable[..., str]:
    """Create a PNG of the given size under ``tmp_path``; returns its relative path."""
    def make(width: int, height: int, name: str = "") -> str:
        name = name or f"img_{width}x{height}.png"
        Image.new("RGB", (width, height), color=(width % 256, height % 256, 0)).save(tmp_path / name)
        return name
    return make


@pytest.fixture
def recipe_file(tmp_path) -> Callable[..., Path]:
    """Write a recipe mapping as YAML."""
    def write(recipe: Dict[str, Any], name: str = "recipe.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(recipe, sort_keys=False), encoding="utf-8")
        return path
    return write


@pytest.fixture
def text_records() -> List[Dict[str, Any]]:
    """A small mixed-quality text corpus."""
    return [
        {"text": "A clean sentence about data processing pipelines.", "meta": {"src": "web"}},
        {"text": "short", "meta": {"src": "web"}},
        {"text": "!!!! ???? #### $$$$ %%%% ^^^^ &&&&", "meta": {"src": "forum"}},
        {"text": "Another reasonably long and ordinary sentence for testing.",
         "meta": {"src": "book"}},
        {"text": "abcabcabcabcabcabcabcabcabcabcabcabcabcabcabcabc", "meta": {"src": "forum"}},
        {"text": "   spaced    out     words    here   ", "meta": {"src": "web"}},
    ]
