"""Dataset I/O: loading, export, splitting and checkpoints."""
from .checkpoint import ResumeState, read_checkpoint, recipe_digest, resume, write_checkpoint
from .dataset import BadLine, Dataset, ExportReport, LoadMode, export, load, write_jsonl
from .splitter import DEFAULT_TARGET_BYTES, SplitManifest, split_subsets

__all__ = [
    'BadLine', 'DEFAULT_TARGET_BYTES', 'Dataset', 'ExportReport', 'LoadMode', 'ResumeState',
    'SplitManifest', 'export', 'load', 'read_checkpoint', 'recipe_digest', 'resume',
    'split_subsets', 'write_checkpoint', 'write_jsonl',
]
