"""Live win-probability elicitation, budget-fixed quadratic scoring, and
surprise analytics for two-team games."""

from .curves import (
    BeliefUpdate,
    CurveError,
    StepCurve,
    belief_curve,
    end_surprise,
    half_surprises,
    median_curve,
    peak_window,
    total_surprise,
    window_surprise,
)
from .metrics import (
    GameRecord,
    SubjectRecord,
    SurpriseSummary,
    comeback_size,
    leader_changes,
    rubbish_time,
    summarize_game,
)
from .regression import RegressionResult, ols_fit, run_suite, t_pvalue
from .scoring import (
    Settlement,
    expected_report_score,
    quadratic_score,
    settle_rewards,
)
from .service import ElicitationEngine, ElicitationEvent, GameSession, ServiceError
from .storage import export_summaries, import_log, read_event_log

__version__ = "0.1.0"

__all__ = [
    "BeliefUpdate",
    "CurveError",
    "StepCurve",
    "belief_curve",
    "median_curve",
    "window_surprise",
    "total_surprise",
    "half_surprises",
    "end_surprise",
    "peak_window",
    "GameRecord",
    "SubjectRecord",
    "SurpriseSummary",
    "comeback_size",
    "leader_changes",
    "rubbish_time",
    "summarize_game",
    "RegressionResult",
    "ols_fit",
    "run_suite",
    "t_pvalue",
    "Settlement",
    "quadratic_score",
    "settle_rewards",
    "expected_report_score",
    "ElicitationEngine",
    "ElicitationEvent",
    "GameSession",
    "ServiceError",
    "export_summaries",
    "import_log",
    "read_event_log",
    "__version__",
]
