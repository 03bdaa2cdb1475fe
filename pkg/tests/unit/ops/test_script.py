"""
Purpose: Test suite for the script operator's JSONL stdin/stdout protocol
"""
import sys
import time

import pytest

from src.core.exceptions import ParamValidation, SchemaViolation, ScriptNonZeroExit, ScriptTimedOut
from src.core.io.dataset import Dataset
from src.core.models.sample import PLACEHOLDER_KEY, Sample
from src.core.ops import OPERATORS, run, run_script
from tests.helpers import samples_from_texts

UPPERCASE = """
import json, sys
for line in sys.stdin:
    record = json.loads(line)
    record["text"] = record["text"].upper()
    print(json.dumps(record))
"""

DUPLICATE = """
import sys
for line in sys.stdin:
    sys.stdout.write(line)
    sys.stdout.write(line)
"""

FAIL = """
import sys
sys.stdin.read()
sys.stderr.write("bad input")
sys.exit(3)
"""

GARBAGE = """
import sys
sys.stdin.read()
print("not json")
"""

HANG = """
import sys, time
print(sys.stdin.readline().strip(), flush=True)
time.sleep(60)
"""


def script(source, **params):
    return OPERATORS.create("script_mapper", {"command": [sys.executable, "-c", source], **params})


class TestScriptMapper:
    def test_transforms_every_sample(self, ctx):
        out = run_script(script(UPPERCASE), samples_from_texts(["a", "b"]), ctx)
        assert [s.text for s in out] == ["A", "B"]

    def test_output_count_may_differ(self, ctx):
        out = run_script(script(DUPLICATE), samples_from_texts(["a", "b"]), ctx)
        assert [s.text for s in out] == ["a", "a", "b", "b"]

    def test_nonzero_exit_aborts_with_stderr(self, ctx):
        with pytest.raises(ScriptNonZeroExit) as exc:
            run_script(script(FAIL), samples_from_texts(["a"]), ctx)
        assert exc.value.returncode == 3
        assert "bad input" in exc.value.stderr

    def test_invalid_output_is_a_schema_violation(self, ctx):
        with pytest.raises(SchemaViolation):
            run_script(script(GARBAGE), samples_from_texts(["a"]), ctx)

    def test_hung_script_is_killed_at_the_timeout(self, ctx):
        started = time.monotonic()
        with pytest.raises(ScriptTimedOut) as exc:
            run_script(script(HANG, timeout=0.5), samples_from_texts(["a", "b"]), ctx)
        assert time.monotonic() - started < 30
        assert exc.value.code == "SCRIPT_TIMED_OUT"
        assert exc.value.exit_code == 3

    def test_missing_executable_is_rejected_up_front(self):
        with pytest.raises(ParamValidation):
            OPERATORS.create("script_mapper", {"command": "definitely-not-a-real-binary --x"})

    def test_placeholders_bypass_the_script(self, ctx):
        placeholder = Sample(meta={PLACEHOLDER_KEY: True})
        data = Dataset.from_samples([Sample(text="a"), placeholder])
        out = list(run(script(UPPERCASE), data, ctx))
        assert [s.text for s in out] == ["A", ""]
        assert out[1].is_placeholder
