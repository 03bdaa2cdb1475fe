from .validation import Goal, make_empty_sample, validate_dataset

__all__ = ['Goal', 'make_empty_sample', 'validate_dataset']
