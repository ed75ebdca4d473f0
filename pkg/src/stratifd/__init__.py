"""Finite-domain constraint solving with constructive logical operators.

The package provides interval-set domains (:mod:`stratifd.domain`), a
propagation engine with trailed speculation (:mod:`stratifd.engine`),
arithmetic and constructive-operator propagators (:mod:`stratifd.arith`,
:mod:`stratifd.constructive`), global constraint encodings
(:mod:`stratifd.globalctr`), a small query language (:mod:`stratifd.lang`),
deterministic search (:mod:`stratifd.search`), and a CLI
(:mod:`stratifd.cli`).
"""

from .domain import EMPTY, FULL, NEG_INF, POS_INF, IntDomain
from .engine import UNBOUNDED, Env, Status, Store

__all__ = [
    "EMPTY",
    "FULL",
    "NEG_INF",
    "POS_INF",
    "IntDomain",
    "UNBOUNDED",
    "Env",
    "Status",
    "Store",
]

__version__ = "0.1.0"
