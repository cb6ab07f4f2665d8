"""TK (Transformer-Kernel) neural re-ranking with a BM25 first stage.

The numeric kernels live in :mod:`tkrank.kernels`, which picks the compiled
backend when it is importable and the numpy fallback otherwise.
"""

from .config import RunConfig, TKConfig, TrainConfig, WindowConfig
from .kernels import BACKEND
from .model import TKModel

__all__ = ["BACKEND", "RunConfig", "TKConfig", "TKModel", "TrainConfig", "WindowConfig"]
__version__ = "0.1.0"
