"""Fluid-flow simulator for multicast adaptive video streaming with bandwidth-aware bitrate allocation."""

__version__ = "0.1.0"
