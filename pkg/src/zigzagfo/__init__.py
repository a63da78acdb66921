"""Zig-zag expander structures, gadget encodings and bounded-degree testers."""

from .kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
