"""Games and logics for behavioural equivalence and behavioural distance.

The package models finite systems as coalgebras for a grammar of set
functors, decides behavioural equivalence, computes behavioural
pseudometrics by fixpoint iteration of a Kantorovich-style lifting,
synthesizes distinguishing modal formulas in both a two-valued and a
real-valued logic, and plays the corresponding spoiler-defender games,
either programmatically, on the command line, or over HTTP.
"""

from .classical import (
    ClassicalSynthesis,
    Conj,
    EquivalenceResult,
    Formula,
    Modal,
    Neg,
    Step2Check,
    SynthesisIncomplete,
    TOP,
    behavioural_equivalence,
    check_transfer,
    conj,
    disj,
    eval_formula,
    formula_to_text,
    modal_depth,
    neg,
    parse_formula,
    synthesize_formula,
)
from .evaluation import (
    GammaPath,
    LambdaContext,
    LambdaMap,
    eval_gamma,
    eval_lambda,
    generate_gammas,
    generate_lambdas,
)
from .functors import (
    BIT0,
    BIT1,
    ConstLabels,
    ConstOne,
    ConstReal,
    Coproduct,
    Dist,
    DistOf,
    FunctorExpr,
    FValue,
    Identity,
    Inl,
    Inr,
    Label,
    Pair,
    Pow,
    Product,
    Real,
    SetOf,
    ShapeError,
    StateRef,
    Unit,
    enumerate_f2,
    expr_to_text,
    lifted_order_leq,
    validate_value,
    value_to_text,
)
from .games import (
    BudgetDefender,
    ClassicalFormulaSpoiler,
    ClosureDefender,
    Concede,
    Game,
    GameSolution,
    IllegalMove,
    MetricFormulaSpoiler,
    RandomClassicalDefender,
    RandomClassicalSpoiler,
    RandomMetricDefender,
    RandomMetricSpoiler,
    Step1,
    Step2,
    Step3,
    Step4,
    Transcript,
    playout,
    solve_classical_game,
)
from .metric import (
    DistanceCertificate,
    DistanceResult,
    DistTable,
    GammaSlack,
    LevelFormulas,
    LiftWitness,
    MetricStep2Check,
    MetricSynthesis,
    MMin,
    MMinusQ,
    MModal,
    MNeg,
    MTop,
    OracleInterval,
    behavioural_distance,
    check_transfer_metric,
    defender_can_reply_metric,
    distance_formula_family,
    envelope,
    eval_metric_formula,
    hausdorff,
    lift_value,
    lift_witness,
    logical_distance,
    m_const,
    m_max,
    m_min,
    m_minus,
    m_neg,
    metric_formula_to_text,
    metric_modal_depth,
    oracle_intervals,
    parse_metric_formula,
    synthesize_metric_formula,
    value_radius,
)
from .model import (
    Finding,
    RefusalError,
    System,
    ValidationReport,
    serialize_system,
    system_from_json,
    system_to_json,
    system_to_json_text,
    validate_predicate2,
    validate_predicateR,
    validate_system,
)
from .parser import ParseError, parse_fexpr, parse_fvalue, parse_rational, parse_system
from .transport import TransportProblem, TransportSolution, wasserstein1

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
