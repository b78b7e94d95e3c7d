"""Data-adaptive RKHS regularization for learning radial kernels in operators."""

from ._dartr import *  # noqa: F401,F403
from ._dartr import DartrError, __doc__  # noqa: F401

__version__ = "0.1.0"
