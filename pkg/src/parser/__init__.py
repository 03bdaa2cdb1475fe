"""
Purpose: Initializes the parser package and provides convenient imports
"""
from src.parser.chunk_parser import ChunkParser
from src.parser.recipe_parser import (
    Recipe,
    apply_overrides,
    dump_recipe,
    load_recipe,
    parse_recipe,
    save_recipe,
)

__all__ = [
    'ChunkParser',
    'Recipe',
    'apply_overrides',
    'dump_recipe',
    'load_recipe',
    'parse_recipe',
    'save_recipe',
]
