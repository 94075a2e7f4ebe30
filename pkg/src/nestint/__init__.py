"""Nested-interferometry optomechanics: postselection, decoherence timescales, dynamics."""

__version__ = "0.1.0"
