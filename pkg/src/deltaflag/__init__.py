"""deltaflag: exact rational verification of local stability-threshold
lower bounds computed from declared lattice flag data."""

__version__ = "1.0.0"
