"""Early warning of pedestrians and cyclists from tracked camera positions."""

__version__ = "0.1.0"
