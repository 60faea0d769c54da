"""visemekit: the text side of two-stage lip reading."""

__version__ = "0.1.0"
