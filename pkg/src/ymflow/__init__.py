"""Yang-Mills flow on flat tori with calibration-adapted curvature splittings."""

__version__ = "0.1.0"
