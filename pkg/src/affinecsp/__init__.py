"""Affine relaxations for finite-template CSPs, with exact solvers, group templates and generators."""

__version__ = "0.1.0"
