# Whole-Body Pose Toolkit Package
# The HTTP app lives in wholebody_kit.main, the command line in wholebody_kit.cli
from .utils.config import API_VERSION as __version__

__all__ = ["__version__"]
