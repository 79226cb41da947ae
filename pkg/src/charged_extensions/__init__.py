"""Charged extensions of minimal sphere boundary data.

Numerical construction and verification of rotationally symmetric charged
extensions: model-family geometry, quasi-local mass accounting, seed sphere
metrics and metric paths, collar extensions, profile surgery (smoothing,
bending, tail attachment), and an end-to-end assembly pipeline with a
command-line surface.
"""

__version__ = "0.1.0"
