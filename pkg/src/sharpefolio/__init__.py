"""Sharpe-screened, liquidity-aware portfolio research engine.

Pipeline: market data -> three-layer universe screen -> weight construction
(inverse-vol/Sharpe blend or constrained mean-variance) -> drawdown-tiered
exposure control -> daily backtest loop -> risk-adjusted metrics.  A genetic
search over technical-operator expression trees lives in ``alpha``.
"""

from .kernels import HAVE_NATIVE, implementation

__version__ = "0.1.0"

__all__ = ["HAVE_NATIVE", "implementation", "__version__"]
