"""Delay-tolerant broadcast messaging with social-trust prioritisation.

Subpackages: ``identity`` and ``psi`` (friend ids and private intersection
cardinality), ``trust`` and ``store`` (priority arithmetic and the message
store), ``exchange`` (encrypted peer sessions), ``sim`` (trace-driven
simulator) and ``analytics`` (anonymity, leakage and jamming estimators).
"""

__version__ = "0.1.0"

from ._core import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
