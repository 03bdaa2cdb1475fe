"""
Media filters over image and audio files.

Purpose: Filter samples on per-file properties read from container headers only
(width/height, aspect ratio, byte size). Reads for one batch are issued on a
small thread pool and cached in the per-batch context, so fused filters over the
same media read each file once.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, ClassVar, Dict, List, Literal, Optional, Sequence, Tuple

from PIL import Image
from pydantic import ByteSize, NonNegativeFloat, NonNegativeInt, model_validator

from src.core.exceptions import UnreadableMedia
from src.core.models.sample import Sample
from src.core.ops.base import Filter, OpContext, RangeParams, StatRange
from src.core.ops.registry import OPERATORS
from src.core.schema.validation import resolve_media_path

logger = logging.getLogger(__name__)

Reader = Callable[[str], object]


def read_image_shape(path: str) -> Tuple[int, int]:
    with Image.open(path) as img:
        return img.size


def read_file_size(path: str) -> int:
    return os.path.getsize(path)


def read_media(paths: Sequence[str], reader: Reader, kind: str,
               ctx: OpContext) -> Dict[str, object]:
    """
    Read a property of every path, concurrently, through the per-batch cache.

    Raises:
        UnreadableMedia: for the first unreadable path, in input order
    """
    pending = [p for p in dict.fromkeys(paths) if f"{kind}:{p}" not in ctx.cache]

    def attempt(path: str) -> Tuple[Optional[object], Optional[str]]:
        try:
            return reader(resolve_media_path(path, ctx.base_dir)), None
        except (OSError, ValueError) as e:
            return None, str(e) or type(e).__name__

    if pending:
        workers = max(1, min(ctx.io_threads, len(pending)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attempt, pending))
        for path, (value, error) in zip(pending, results):
            if error is not None:
                logger.warning(f"unreadable media {path}: {error}")
                raise UnreadableMedia(path, error)
            ctx.cache[f"{kind}:{path}"] = value
    return {p: ctx.cache[f"{kind}:{p}"] for p in paths}


class MediaFilter(Filter):
    """Per-file stats with any/all keep semantics; a sample without media is kept."""

    media_field: ClassVar[str] = "images"
    kind: ClassVar[str] = ""
    reader: ClassVar[Reader]

    def media_stats(self, values: List[object]) -> Dict[str, list]:
        raise NotImplementedError

    def file_ok(self, stats: Dict[str, list], i: int) -> bool:
        raise NotImplementedError

    def compute_stats_batch(self, samples: List[Sample], ctx: OpContext) -> List[Sample]:
        paths = [p for s in samples for p in getattr(s, self.media_field)]
        try:
            values = read_media(paths, type(self).reader, self.kind, ctx)
        except UnreadableMedia as e:
            e.position = next(i for i, s in enumerate(samples)
                              if e.path in getattr(s, self.media_field))
            raise
        return [s.with_stats(self.media_stats([values[p] for p in getattr(s, self.media_field)]),
                             self.name)
                for s in samples]

    def compute_stats(self, sample: Sample, ctx: OpContext) -> Sample:
        return self.compute_stats_batch([sample], ctx)[0]

    def keep(self, sample: Sample) -> bool:
        count = len(getattr(sample, self.media_field))
        if count == 0:
            return True
        verdicts = [self.file_ok(sample.stats, i) for i in range(count)]
        return all(verdicts) if self.params.any_or_all == "all" else any(verdicts)


@OPERATORS.register("image_shape_filter")
class ImageShapeFilter(MediaFilter):
    kind = "shape"
    reader = staticmethod(read_image_shape)
    shared_inputs = ("images",)
    stat_keys = ("image_widths", "image_heights")

    class Params(RangeParams):
        bounds = ("min_width", "max_width")
        min_width: Optional[NonNegativeInt] = None
        max_width: Optional[NonNegativeInt] = None
        min_height: Optional[NonNegativeInt] = None
        max_height: Optional[NonNegativeInt] = None
        any_or_all: Literal["any", "all"] = "all"

        @model_validator(mode="after")
        def check_heights(self) -> RangeParams:
            self.height_range()
            return self

        def height_range(self) -> StatRange:
            return StatRange(self.min_height, self.max_height)

    def media_stats(self, values: List[object]) -> Dict[str, list]:
        return {"image_widths": [v[0] for v in values], "image_heights": [v[1] for v in values]}

    def file_ok(self, stats: Dict[str, list], i: int) -> bool:
        return (stats["image_widths"][i] in self.params.stat_range()
                and stats["image_heights"][i] in self.params.height_range())


@OPERATORS.register("image_aspect_ratio_filter")
class ImageAspectRatioFilter(MediaFilter):
    kind = "shape"
    reader = staticmethod(read_image_shape)
    shared_inputs = ("images",)
    stat_keys = ("aspect_ratios",)

    class Params(RangeParams):
        bounds = ("min_ratio", "max_ratio")
        min_ratio: Optional[NonNegativeFloat] = None
        max_ratio: Optional[NonNegativeFloat] = None
        any_or_all: Literal["any", "all"] = "all"

    def media_stats(self, values: List[object]) -> Dict[str, list]:
        return {"aspect_ratios": [w / h if h else 0.0 for w, h in values]}

    def file_ok(self, stats: Dict[str, list], i: int) -> bool:
        return stats["aspect_ratios"][i] in self.params.stat_range()


class SizeParams(RangeParams):
    bounds = ("min_size", "max_size")
    min_size: Optional[ByteSize] = None
    max_size: Optional[ByteSize] = None
    any_or_all: Literal["any", "all"] = "all"


@OPERATORS.register("image_size_filter")
class ImageSizeFilter(MediaFilter):
    kind = "size"
    reader = staticmethod(read_file_size)
    shared_inputs = ("images",)
    stat_keys = ("image_sizes",)
    Params = SizeParams

    def media_stats(self, values: List[object]) -> Dict[str, list]:
        return {"image_sizes": list(values)}

    def file_ok(self, stats: Dict[str, list], i: int) -> bool:
        return stats["image_sizes"][i] in self.params.stat_range()


@OPERATORS.register("audio_size_filter")
class AudioSizeFilter(MediaFilter):
    media_field = "audios"
    kind = "size"
    reader = staticmethod(read_file_size)
    shared_inputs = ("audios",)
    stat_keys = ("audio_sizes",)
    Params = SizeParams

    def media_stats(self, values: List[object]) -> Dict[str, list]:
        return {"audio_sizes": list(values)}

    def file_ok(self, stats: Dict[str, list], i: int) -> bool:
        return stats["audio_sizes"][i] in self.params.stat_range()
