"""Multi-camera BEV semantic map prediction on a procedural synthetic world."""

__version__ = "0.1.0"
