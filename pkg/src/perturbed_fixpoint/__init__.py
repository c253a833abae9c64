"""Fixed-point certification for Kannan and Banach maps on perturbed metric spaces."""

from .contraction import (
    ContractionCertificate,
    SelfMap,
    banach_ratio,
    estimate_coefficient,
    kannan_ratio,
)
from .dsl import evaluate, parse, unparse
from .oracle import brute_force_fixed_points, brute_force_sup_ratio
from .problem import Problem, load_problem, parse_problem
from .solver import (
    IterationTrace,
    aposteriori_bound,
    apriori_bound,
    beta,
    solve,
    verify_uniqueness,
)
from .space import (
    AxiomReport,
    Bivariate,
    Box,
    FiniteDomain,
    PerturbedSpace,
    check_floor,
    check_metric_axioms,
    exact_distance,
)

__version__ = "0.1.0"
