"""Small-scale creation in a 2D capillary droplet: simulator and certification suite."""

__version__ = "0.1.0"
