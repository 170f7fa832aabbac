"""Recursive feature elimination for valence-arousal regression of music audio features."""
__version__ = "0.1.0"
