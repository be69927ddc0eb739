"""Non-intersecting Brownian motions with several starting and ending points."""

__version__ = "0.1.0"
