# Whole-Body Toolkit - Utilities Package
from . import config
from . import exceptions

__all__ = ["config", "exceptions"]
