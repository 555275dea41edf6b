# Whole-Body Toolkit - Models Package
from . import schemas

__all__ = ["schemas"]
