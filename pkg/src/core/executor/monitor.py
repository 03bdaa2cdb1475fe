"""Periodic run monitoring written as JSONL."""
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import orjson
import psutil

from src.core.models.run_state import MonitorSample

logger = logging.getLogger(__name__)


@dataclass
class RunState:
    """Live progress shared between the executor and the monitor thread."""
    started: float = field(default_factory=time.monotonic)
    samples_done: int = 0
    queue_depth: int = 0
    current_op: str = ""
    op_time: Dict[str, float] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def advance(self, samples: int, queue_depth: int) -> None:
        with self.lock:
            self.samples_done += samples
            self.queue_depth = queue_depth


def monitor_tick(state: RunState) -> MonitorSample:
    with state.lock:
        elapsed = time.monotonic() - state.started
        return MonitorSample(
            timestamp=time.time(),
            elapsed=elapsed,
            throughput=state.samples_done / elapsed if elapsed > 0 else 0.0,
            queue_depth=state.queue_depth,
            op_time=dict(state.op_time),
            rss_bytes=psutil.Process().memory_info().rss,
            current_op=state.current_op,
        )


class Monitor:
    """Background thread appending one monitor sample per interval, plus a final one on stop."""

    def __init__(self, path: str | Path, state: RunState, interval: float = 1.0) -> None:
        self.path = Path(path)
        self.state = state
        self.interval = interval
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def _write(self, sample: MonitorSample) -> None:
        with self.path.open("ab") as handle:
            handle.write(orjson.dumps(sample.as_dict()) + b"\n")

    def _loop(self) -> None:
        while not self._stop.wait(self.interval):
            self._write(monitor_tick(self.state))

    def start(self) -> 'Monitor':
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_bytes(b"")
        self._thread = threading.Thread(target=self._loop, name="monitor", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        self._write(monitor_tick(self.state))
        logger.info(f"monitor log written to {self.path}")

    def __enter__(self) -> 'Monitor':
        return self.start()

    def __exit__(self, *exc: object) -> None:
        self.stop()
