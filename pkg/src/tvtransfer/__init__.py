"""Variational transfer of value functions under drifting task distributions.

Implements the time-variant transfer algorithm (T2VT), whose prior over
Q-function weights is a boundary-corrected time-variant kernel density
estimate over previously solved tasks, and its time-invariant counterpart
(MGVT) with uniform prior weights, together with the environments, the
source-task solver and the experiment harness used to compare them.
"""

from .kernels import backend as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
