"""Numerical certification of monotone planar operators.

Builds vector fields from closed-form scalar fields (with exact second
derivatives from forward-mode jets), certifies monotonicity, convexity,
convex-concavity and gradient structure on grids, and reproduces the
counterexample showing that sums of acyclic monotone operators need not
be acyclic.
"""

from .certify import (
    Certificate,
    Check,
    NotAGradientError,
    PotentialTable,
    RefutationWitness,
    SkewAffineFit,
    certify_convex,
    certify_convex_concave,
    certify_gradient,
    certify_monotone,
    classify_affinity,
    fit_skew_affine,
    reconstruct_potential,
    refute_skew_affine,
)
from .counterexample import (
    CounterexampleCertificate,
    FamilyPair,
    PipelineConfig,
    check_remark_bounds,
    make_pair,
    refute_additivity,
)
from .dynamics import SolveTrace, extragradient
from .expr import DomainError, ExprError, ParseError, parse, pretty
from .fields import (
    GridSpec,
    Mat2,
    Region,
    ScalarField2,
    VectorField2,
    add,
    asymmetry,
    gradient_field,
    jacobian,
    min_sym_eig,
    saddle_field,
    scale,
    shift,
    sym_split,
)
from .jet import Jet2, eval, eval_jet
from .kernels import BACKEND

__version__ = "0.1.0"
