# File Summary: Package marker and fallback version string.

"""Kernel gradient descent with a decreasing bandwidth, baselines and bound checks."""

__version__ = "0.1.0"
