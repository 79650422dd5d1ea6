"""
Command groups of the gaussian-phase CLI
"""
from . import dyne, oracle, qfi, simulate
