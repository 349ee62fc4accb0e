"""Spin and vibration dynamics of electrons trapped above liquid helium."""

from ._version import __version__

__all__ = ["__version__"]
