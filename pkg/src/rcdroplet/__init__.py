"""Simulation laboratory for area-conditioned droplets in the planar
subcritical random cluster model: sampling, circuit geometry, regeneration
structure, Wulff profile, and the sector-resampling chain."""

__version__ = "0.1.0"

VERSION_TAG = f"rcdroplet-{__version__}"
