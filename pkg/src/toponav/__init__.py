"""Online topological mapping, graph planning and rotate-then-forward control
on a 2D occupancy-grid simulator."""

__version__ = "0.1.0"
