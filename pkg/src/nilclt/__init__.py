"""Random walks on nilpotent covering graphs and their diffusion limits."""

__version__ = "0.1.0"
