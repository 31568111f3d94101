"""Numerical laboratory for spherical maximal operators over restricted dilation sets."""

from .conditions import (CHECKS, PAPER_DEFAULTS, ConditionVerdict, Exponents, TrendPolicy, Verdict,
                         WeightSequence, check_carleson, check_Cp_inf, check_Cpq, check_logbound,
                         check_prop12, make_weights)
from .dilation_set import (DilationSet, ResolutionError, ResolvedSet, block, load_descriptor,
                           standard_sets)
from .entropy import (CertificationError, CriticalExponentEstimate, EntropyProfile, critical_exponent,
                      entropy_number, profile)
from .regularity import (ConvexityError, EquallySpacedDecomposition, EquallySpacedSet, check_R_p,
                         check_R_tilde, decompose_convex, decompose_set, is_equally_spaced)

__version__ = "0.1.0"

__all__ = [
    "CHECKS", "PAPER_DEFAULTS", "CertificationError", "ConditionVerdict", "ConvexityError",
    "CriticalExponentEstimate", "DilationSet", "EntropyProfile", "EquallySpacedDecomposition",
    "EquallySpacedSet", "Exponents", "ResolutionError", "ResolvedSet", "TrendPolicy", "Verdict",
    "WeightSequence", "block", "check_Cp_inf", "check_Cpq", "check_R_p", "check_R_tilde",
    "check_carleson", "check_logbound", "check_prop12", "critical_exponent", "decompose_convex",
    "decompose_set", "entropy_number", "is_equally_spaced", "load_descriptor", "make_weights",
    "profile", "standard_sets",
]
