"""q-Bessel addition and product formulas with numerical identity verification."""
from .errors import (
    BranchAmbiguity,
    CapExceeded,
    DomainError,
    DoublingCapExceeded,
    NonConvergent,
    PoleAtNonpositiveInteger,
    PoleInLowerParameter,
    QGrafError,
    ZeroParameterPrefactor,
)
from .kernels import BACKEND
from .qcore import (
    GrafInstance,
    HypergeometricSpec,
    QContext,
    SeriesValue,
    bessel_j,
    one_phi_one_shift_residual,
    phi,
    phi_prefactored,
    phi_regularized,
    phi_rs,
    qgamma,
    qpoch_finite,
    qpoch_infinite,
    qpoch_ratio,
)
from .report import IdentityCase, ResidualReport

__version__ = "0.1.0"
