# Whole-Body Toolkit - Routers Package
from . import annotations
from . import poses
from . import evaluation

__all__ = ["annotations", "poses", "evaluation"]
