"""Finite bivariate biorthogonal N-Konhauser polynomials and identity checks."""

from __future__ import annotations

__version__ = "0.1.0"
