"""Stein-method total variation bounds for negative binomial approximation."""
from ._accel import JIT_ENABLED, backend_name
from .bounds import (
    BoundReport,
    Scheme,
    corollary_one,
    corollary_three,
    corollary_two,
    theorem_one,
    theorem_three,
    theorem_two,
)
from .dist import Binomial, Generic, Geometric, Pmf, Poisson
from .errors import (
    DominationViolated,
    InadmissibleEta,
    InadmissibleParameters,
    InvalidParams,
    NbSteinError,
    NonDecayingSeries,
    OverdispersedRequired,
    PerturbationTooLarge,
    TruncationError,
    UnsupportedComposition,
)
from .k1k2 import K1K2Config, one_param_bound_k1k2, table1, table2, two_param_bound_k1k2
from .matching import NbParams, ThreeParamFit, match_one_param, match_three_param, match_two_param
from .moments import AggregateMoments, aggregate, eta
from .oracle import tv_distance, verify_domination

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED",
    "backend_name",
    "BoundReport",
    "Scheme",
    "corollary_one",
    "corollary_three",
    "corollary_two",
    "theorem_one",
    "theorem_three",
    "theorem_two",
    "Binomial",
    "Generic",
    "Geometric",
    "Pmf",
    "Poisson",
    "DominationViolated",
    "InadmissibleEta",
    "InadmissibleParameters",
    "InvalidParams",
    "NbSteinError",
    "NonDecayingSeries",
    "OverdispersedRequired",
    "PerturbationTooLarge",
    "TruncationError",
    "UnsupportedComposition",
    "K1K2Config",
    "one_param_bound_k1k2",
    "table1",
    "table2",
    "two_param_bound_k1k2",
    "NbParams",
    "ThreeParamFit",
    "match_one_param",
    "match_three_param",
    "match_two_param",
    "AggregateMoments",
    "aggregate",
    "eta",
    "tv_distance",
    "verify_domination",
]
