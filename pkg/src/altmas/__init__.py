"""Active testing: estimate metrics of a black-box classifier from few labels."""

__version__ = "0.1.0"
