"""Deployment of generative model profiles on a resource-limited edge server.

Cost model, feasibility checks, a genetic decision algorithm with an
exhaustive oracle, eviction baselines and a slot-based simulator.
"""
from .catalog import (Catalog, CostWeights, EdgeConfig, ModelProfile, Scenario, ScenarioError,
                      load_scenario, sample_catalog, write_scenario)
from .cost import SlotCostBreakdown, evicted_set, resource_cost, slot_cost, switching_cost
from .engine import SimulationRun, SummaryMetrics, compare, run
from .feasibility import FeasibilityReport, check
from .solvers import (DecisionContext, GaParams, PolicyState, baseline_decide, brute_force_decide,
                      ga_decide)
from .workload import (ActiveCycleEstimator, RequestTrace, estimate_beta, generate_trace, observe,
                       oracle_beta)

__version__ = "0.1.0"
