"""Smooth complete toric fans: walls, contractions, Fano tests, conic bundles."""
from .fan import Fan, load_fan, validate
from .catalog import builtin
from .conic import lefschetz_defect, search_conic_bundles

__all__ = ["Fan", "builtin", "lefschetz_defect", "load_fan", "search_conic_bundles", "validate"]
__version__ = "0.1.0"
