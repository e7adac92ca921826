"""Contextual description-logic knowledge bases.

A small engine combining: an ALC-style concept language with tableau
satisfiability and subsumption; context-annotated assertions over a finite
poset of contexts with downward saturation; an imperative update language
with fuel-bounded big-step evaluation; scripted oracle transitions with
record/replay; presheaf sections with gluing and refinement stability; and
agents whose repeated interactions are checked for exact stability.
"""

from ctxdl.concepts import (
    And,
    Atomic,
    BOT,
    Bot,
    ConceptExpr,
    Exists,
    Forall,
    Not,
    Or,
    Signature,
    TOP,
    Top,
    nnf,
    parse_concept,
    print_concept,
    subconcepts,
)
from ctxdl.contexts import ContextPoset, Covering, validate_covering
from ctxdl.errors import (
    BudgetExceededError,
    EngineError,
    EvalAborted,
    InteractionError,
    LoadError,
    OracleError,
    ParseError,
    RefinementChainError,
    ReplayMismatchError,
    ScriptLookupError,
    SearchSpaceError,
    UnknownNameError,
    UnknownOracleError,
)
from ctxdl.kb import (
    Assertion,
    AssertGuard,
    ConceptAssertion,
    Guard,
    GuardAnd,
    GuardNot,
    KnowledgeState,
    RoleAssertion,
    SubsumeGuard,
    abox_digest,
    canonical_abox,
    guard_sat,
    parse_assertion,
    render_assertion,
    saturate,
)
from ctxdl.kbfile import KBDocument, load_kb, load_state, loads, write_state
from ctxdl.oracle import (
    OracleQuery,
    OracleResponse,
    OracleSpec,
    ScriptedOracle,
    load_script,
    oracle_step,
    record_session,
    replay_session,
    run_session,
)
from ctxdl.programs import (
    Add,
    Del,
    EvalOutcome,
    FuelExhausted,
    If,
    Program,
    Seq,
    Skip,
    Terminated,
    While,
    evaluate,
    evaluate_trace,
    parse_guard,
    parse_program,
    print_program,
)
from ctxdl.reasoner import (
    FiniteModel,
    TBox,
    check_interpretation,
    enumerate_models,
    find_witness,
    is_satisfiable,
    subsumes,
)
from ctxdl.sheaf import (
    ConceptFact,
    Conflict,
    Fact,
    Glued,
    GluingResult,
    Incompatible,
    NonUnique,
    Presheaf,
    RoleFact,
    Section,
    compatible,
    global_sections,
    glue,
    restrict,
    stable_under_refinement,
)
from ctxdl.agents import (
    Agent,
    FactPattern,
    LatentStructure,
    Manifested,
    SeedPolicy,
    StabilityReport,
    interact,
    load_agent,
    stability_check,
)

__version__ = "0.1.0"
