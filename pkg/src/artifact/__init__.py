"""Coherent Pauli summation versus quantum expectation estimation, on a dense statevector simulator."""

from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:
    __version__ = "0.0.0"
