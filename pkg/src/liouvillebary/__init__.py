"""Weighted barycenter spaces and bubble asymptotics for singular mean-field equations on the flat torus."""

__version__ = "0.1.0"
