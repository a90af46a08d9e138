"""Dilated PT-symmetric qubit evolution, two-qubit circuit synthesis and the
state-discrimination and metrology experiments built on them."""

__version__ = "0.1.0"

from .errors import PTMapError  # noqa: E402,F401
