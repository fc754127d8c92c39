"""Two-dealer stochastic market models."""

from ._core import *  # noqa: F401,F403
from ._core import (
    BubbleRegimeError,
    ConfigError,
    DataError,
    DomainError,
    NumericalError,
    PositivityError,
    RangeError,
    SimParams,
    TickSeries,
    TrendRule,
    TimeoutError,
    params_for,
    run,
)

__version__ = "0.1.0"
