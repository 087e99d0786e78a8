"""1-D p-Laplacian logistic laboratory.

Solves -div(|Du|^(p-2)Du) = a*u^(p-1) - b(x)*u^q on intervals and checks
its limit regimes: the eigenvalue scale law as q -> p-1+, and the
free-boundary / variational-inequality problems as q -> infinity.
"""

from .errors import *  # noqa: F401,F403
from .mesh import (  # noqa: F401
    BumpZeroCoefficient,
    ConstantCoefficient,
    Field,
    Grid1D,
    SubdomainMask,
    build_grid,
    coefficient_field,
    detect_zero_set,
    read_field_csv,
    subdomain_mask,
    write_field_csv,
)
from .plap_core import (  # noqa: F401
    PLapParams,
    TridiagonalOperator,
    apply_p_laplacian,
    linearize,
    norm,
    p_energy,
    p_flux,
    dp_flux,
    residual_logistic,
    safe_pow,
)
from .eigensolver import (  # noqa: F401
    AlphaResult,
    EigenResult,
    lambda_curve,
    principal_eigenpair,
    solve_alpha,
)
from .logistic_solver import (  # noqa: F401
    Existence,
    LogisticResult,
    default_init,
    monotonicity_check,
    solve_logistic,
)
from .asymptotics import (  # noqa: F401
    LimitEstimate,
    SweepRecord,
    critical_constant_c,
    extrapolate_limit,
    sweep_q_high,
    sweep_q_low,
)
from .obstacle_solver import (  # noqa: F401
    FreeBoundaryExistence,
    MultistartReport,
    ObstacleResult,
    VIResult,
    compose_reference_vi,
    multistart_uniqueness,
    solve_free_boundary,
    solve_vi,
)
from .shooting import (  # noqa: F401
    lambda1_closed_form,
    pi_p,
    shooting_lambda1,
    shooting_logistic_sup,
)

__version__ = "0.1.0"
