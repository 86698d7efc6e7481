"""pnreach: portfolio reachability checker for generalized Petri nets."""

__version__ = "0.1.0"
