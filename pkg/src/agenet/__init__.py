"""Age-structured spiking networks with delayed mean-field interaction."""

__version__ = "0.1.0"
