"""tierbroker: service placement across dealer, operator and cloud tiers.

A service registry with trust-aware, multi-criteria placement
arbitration, plus a deterministic discrete-event simulator and a CLI for
comparing placement policies on scenario files.
"""

__version__ = "0.1.0"

from .arbitrator import (
    ContextSnapshot,
    ProfileVerdict,
    RescheduleAdvice,
    SchedulerWeights,
    Thresholds,
    schedule_service,
)
from .errors import (
    ConfigError,
    DuplicateService,
    IncompatibleReplacement,
    NoAdmissibleNode,
    NotBillable,
    NotFoundError,
    ParseError,
    StandardViolation,
    UncoverableGoal,
    ValidationError,
)
from .model import (
    InvocationRecord,
    PlacementDecision,
    ResourceNode,
    SecurityClass,
    ServiceDescriptor,
    Tier,
    Topology,
    TrustLevel,
    is_admissible,
    projected_response_ms,
)
from .registry import (
    CompositePlan,
    FunctionalSpec,
    Registry,
    ServiceRecord,
    ServiceState,
)
from .simulation import Simulation, build_topology, run, simulate_scenario
from .workload import Scenario, generate_workload, load_scenario

__all__ = [
    "CompositePlan",
    "ConfigError",
    "ContextSnapshot",
    "DuplicateService",
    "FunctionalSpec",
    "IncompatibleReplacement",
    "InvocationRecord",
    "NoAdmissibleNode",
    "NotBillable",
    "NotFoundError",
    "ParseError",
    "PlacementDecision",
    "ProfileVerdict",
    "Registry",
    "RescheduleAdvice",
    "ResourceNode",
    "Scenario",
    "SchedulerWeights",
    "SecurityClass",
    "ServiceDescriptor",
    "ServiceRecord",
    "ServiceState",
    "Simulation",
    "StandardViolation",
    "Thresholds",
    "Tier",
    "Topology",
    "TrustLevel",
    "UncoverableGoal",
    "ValidationError",
    "build_topology",
    "generate_workload",
    "is_admissible",
    "load_scenario",
    "projected_response_ms",
    "run",
    "schedule_service",
    "simulate_scenario",
    "__version__",
]
