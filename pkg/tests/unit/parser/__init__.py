"""
Purpose: Marks the directory as a Python test package
"""
# This file can be empty as it's mainly used to mark the directory as a Python package
# and allow pytest to discover tests in this directory