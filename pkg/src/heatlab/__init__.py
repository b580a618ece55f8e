"""heatlab: numerical laboratory for heat kernels in degenerate random media.

The package builds finite-volume models of the operator (1/theta) div(a grad .)
on a periodic box, where the diagonal tensor a and the speed measure theta are
sampled from finite-range random fields with controllable heavy tails.  On top
of that it provides heat-kernel computation, the intrinsic (Riemannian) metric
of the medium, empirical verification harnesses for off-diagonal kernel
estimates, concentration experiments for ball averages, and the elliptic
Green-function scaling study in d = 3.
"""

__version__ = "0.1.0"

from .env import EnvironmentSpec, EnvironmentField, generate_environment  # noqa: F401
from .operators import DiscreteGenerator, assemble_generator  # noqa: F401
