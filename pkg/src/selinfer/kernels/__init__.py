"""Hot loops, each with a numba and a pure-numpy implementation.

The active implementation is chosen by ``SELINFER_BACKEND`` (see
:mod:`selinfer._accel`).
"""

from .lasso import lasso_cd
from .normal import log_ndtr, truncnorm_cdf_sf
from .rng import uniform_block
from .toy import toy_reject_batch
from .winner import winner_counts

__all__ = ["lasso_cd", "log_ndtr", "truncnorm_cdf_sf", "uniform_block", "toy_reject_batch", "winner_counts"]
