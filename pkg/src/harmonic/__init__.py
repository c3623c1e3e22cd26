"""Dual-layer cognitive robotics agent for a shipboard maintenance scenario."""

__version__ = "0.1.0"
FIXTURE_VERSION = "thermostat-v1"
