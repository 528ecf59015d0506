"""Two-port optical cavity with dissipative optomechanical coupling."""

__version__ = "0.1.0"
