"""
Command-line interface
"""

from .main import build_parser, run_command, main

__all__ = ['build_parser', 'run_command', 'main']
