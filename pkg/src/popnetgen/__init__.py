"""popnetgen: seed-driven generator of attributed multiplex social networks.

A discrete Bayesian network describes agent attributes and per-type required
link counts; matching networks and transitivity rules then weave the agents
into a multiplex graph.  See the plan module for the input format and the
cli module for the end-to-end pipeline.
"""
from .bn import (
    BayesianNetwork,
    BnCycleError,
    BnError,
    BnSyntaxError,
    BnValidationError,
    Cpt,
    Variable,
    Violation,
    load_bn,
    parse_bn,
    serialize_bn,
    topological_order,
    validate,
)
from .inference import (
    Engine,
    Posterior,
    ZeroEvidenceError,
    joint_probability,
    posterior,
    probability_of_evidence,
)
from .matching import (
    CandidatePredicate,
    HomophilyRule,
    RuleReport,
    compatibility,
    conditional_candidates,
    derive_candidate_sets,
    load_matching_bn,
    run_homophily_rule,
)
from .metrics import (
    ErrorReport,
    NetworkStats,
    distribution_error,
    graph_statistics,
    matching_error,
)
from .plan import GenerationPlan, load_plan, parse_plan, validate_plan
from .population import (
    Agent,
    CandidateQuery,
    Link,
    LinkType,
    PopulationStore,
    generate_population,
    learn_marginals,
    query_candidates,
)
from .sampling import PrototypeSampler, sample_prototype, substream
from .transitivity import TransitivityRule, enumerate_open_triads, run_transitivity_rule

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
