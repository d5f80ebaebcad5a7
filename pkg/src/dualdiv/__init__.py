"""Minimum dual divergence estimation for parametric models.

phi-divergences between members of a parametric family are computed
through their dual (variational) representation, which needs only
density ratios inside the family -- no density estimation.  The same
representation, plugged with the empirical measure, yields minimum dual
divergence estimators; on full exponential families every
differentiable divergence in the power family produces the maximum
likelihood estimate, and the :mod:`dualdiv.verify` module checks that
numerically.
"""

from .dual import (CriterionValue, DualCriterion, cressie_read_criterion,
                   divergence_direct, empirical_criterion, h_eval,
                   population_criterion)
from .estim import (EstimationResult, PopulationFunctionals,
                    PopulationTarget, estimate, population_functionals,
                    sup_alpha)
from .generators import (DivergenceGenerator, PowerGenerator, phi_prime,
                         phi_sharp, phi_value)
from .kernels import BACKEND
from .models import (BernoulliFamily, CauchyLocation, ExponentialFamily,
                     ExponentialRate, GaussianMean, MeanOutsideRange,
                     ModelError, NonConvergence, ParametricModel,
                     PoissonFamily, Sample, SupportDescriptor, make_model)
from .numerics import (DivergentIntegral, NoFiniteValue, OptimizerSpec,
                       QuadratureSpec, integrate_wrt, maximize)
from .verify import VerificationReport, run_default_suite

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BernoulliFamily",
    "CauchyLocation",
    "CriterionValue",
    "DivergenceGenerator",
    "DivergentIntegral",
    "DualCriterion",
    "EstimationResult",
    "ExponentialFamily",
    "ExponentialRate",
    "GaussianMean",
    "MeanOutsideRange",
    "ModelError",
    "NoFiniteValue",
    "NonConvergence",
    "OptimizerSpec",
    "ParametricModel",
    "PoissonFamily",
    "PopulationFunctionals",
    "PopulationTarget",
    "PowerGenerator",
    "QuadratureSpec",
    "Sample",
    "SupportDescriptor",
    "VerificationReport",
    "cressie_read_criterion",
    "divergence_direct",
    "empirical_criterion",
    "estimate",
    "h_eval",
    "integrate_wrt",
    "make_model",
    "maximize",
    "phi_prime",
    "phi_sharp",
    "phi_value",
    "population_criterion",
    "population_functionals",
    "run_default_suite",
    "sup_alpha",
    "__version__",
]
