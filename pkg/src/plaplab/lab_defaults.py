"""Tuned constants shared by the acceptance battery and example scripts."""

from .mesh import BumpZeroCoefficient

# Raw sup-norm eigen residuals for p < 2 are pinned near
# |slope|^(p-2) * macheps / h^2 at the profile peak (~5e-8 for p = 1.5 on
# 1024 cells), so solves with a singular flux use this tolerance.
EIGEN_TOL_SINGULAR = 2e-6

# Coefficient for the saturation check lambda1(alpha*b) -> lambda1(0.4, 0.6).
# The eigenvalue defect at finite alpha scales with the penetration depth
# ~ (alpha * level)^(-1/2), so reaching 2% of the hard-wall value by
# alpha = 1e4 needs a steep, high ramp; level 1e6 with ramp width 0.02
# saturates about 1.4% below the closed form on 1024 cells.
CRITERION9_BUMP = BumpZeroCoefficient(0.4, 0.6, 1e6, ramp_width=0.02)
