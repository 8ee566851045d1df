"""Battle of the Exes simulation package."""

__version__ = "0.1.0"
