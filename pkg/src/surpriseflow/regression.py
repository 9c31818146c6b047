"""OLS with classical standard errors, Student-t p-values, and the fixed
regression suites relating game surprise metrics to average ratings.

The linear solve goes through a QR decomposition (no explicit inverse, no
silent pseudo-inverse: rank deficiency raises).  Two-sided p-values come
from the regularized incomplete beta function, implemented here with the
standard continued-fraction expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .metrics import SurpriseSummary

__all__ = [
    "RegressionError",
    "RegressionResult",
    "SuiteColumn",
    "SuiteResult",
    "ols_fit",
    "t_pvalue",
    "regularized_incomplete_beta",
    "run_suite",
    "SUITES",
    "suite_to_text",
    "suite_to_csv_rows",
    "SUITE_CSV_HEADER",
]

STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.10, "*"))


class RegressionError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def significance_stars(p: float) -> str:
    for level, stars in STAR_LEVELS:
        if p < level:
            return stars
    return ""


@dataclass(frozen=True)
class RegressionResult:
    """One fitted OLS column: coefficients with inference statistics."""

    names: tuple[str, ...]
    coefficients: tuple[float, ...]
    std_errors: tuple[float, ...]
    t_stats: tuple[float, ...]
    p_values: tuple[float, ...]
    stars: tuple[str, ...]
    r_squared: float
    adj_r_squared: float
    n_obs: int
    df_resid: int
    rss: float


def ols_fit(
    design: Sequence[Sequence[float]] | np.ndarray,
    response: Sequence[float] | np.ndarray,
    names: Sequence[str] | None = None,
    intercept: bool = True,
) -> RegressionResult:
    """Fit ``response = design @ beta (+ const)`` by ordinary least squares.

    Standard errors are homoskedastic: ``se_j = sqrt(s2 * [(X'X)^-1]_jj)``
    with ``s2 = RSS / (N - p)`` where p counts all fitted parameters.
    """
    X = np.atleast_2d(np.asarray(design, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1 and len(np.asarray(response)) == X.shape[1]:
        X = X.T
    y = np.asarray(response, dtype=float).ravel()
    n, k = X.shape
    if y.shape[0] != n:
        raise RegressionError("shape_mismatch", f"{n} rows in design, {y.shape[0]} responses")
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(k))
    else:
        names = tuple(names)
        if len(names) != k:
            raise RegressionError("shape_mismatch", f"{k} regressors, {len(names)} names")
    if intercept:
        X = np.column_stack([X, np.ones(n)])
        names = names + ("const",)
    p = X.shape[1]
    if n <= p:
        raise RegressionError(
            "insufficient_observations", f"{n} observations cannot identify {p} parameters"
        )

    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    tol = max(n, p) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    if np.any(diag <= tol):
        raise RegressionError("rank_deficient", "design matrix is not full column rank")
    beta = np.linalg.solve(r, q.T @ y)

    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - p
    s2 = rss / df
    r_inv = np.linalg.solve(r, np.eye(p))
    xtx_inv_diag = np.sum(r_inv * r_inv, axis=1)
    se = np.sqrt(s2 * xtx_inv_diag)

    if intercept:
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    if intercept:
        adj = 1.0 - (1.0 - r2) * (n - 1) / df
    else:
        adj = 1.0 - (1.0 - r2) * n / df

    with np.errstate(divide="ignore", invalid="ignore"):
        raw_t = beta / se
    t_stats = np.where(se > 0, raw_t, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p_values = tuple(t_pvalue(float(t), df) for t in t_stats)
    return RegressionResult(
        names=names,
        coefficients=tuple(float(b) for b in beta),
        std_errors=tuple(float(s) for s in se),
        t_stats=tuple(float(t) for t in t_stats),
        p_values=p_values,
        stars=tuple(significance_stars(pv) for pv in p_values),
        r_squared=r2,
        adj_r_squared=adj,
        n_obs=n,
        df_resid=df,
        rss=rss,
    )


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, evaluated by modified
    Lentz iteration.  Converges quickly for x < (a+1)/(a+b+2)."""
    max_iter = 500
    eps = 1e-15
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RegressionError("no_convergence", f"incomplete beta failed for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if a <= 0 or b <= 0:
        raise RegressionError("invalid_parameter", "a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise RegressionError("invalid_parameter", f"x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_pvalue(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise RegressionError("invalid_parameter", f"df must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


# --- fixed regression suites -------------------------------------------------

DEPENDENT = "avg_rating"

_HALVES = (
    ("overall", ("overall_surprise",)),
    ("first_half", ("surp_first_half",)),
    ("second_half", ("surp_second_half",)),
    ("both_halves", ("surp_first_half", "surp_second_half")),
)
_PEAKEND = (
    ("peak", ("peak_surprise",)),
    ("end", ("end_surprise",)),
    ("peak_and_end", ("peak_surprise", "end_surprise")),
)
_FACTORS = (
    ("comeback", ("comeback_size",)),
    ("leader_changes", ("leader_changes",)),
    ("rubbish_time", ("rubbish_time",)),
)

SUITES = ("halves", "peakend", "categories", "factors")
MIN_COLUMN_OBS = 3


@dataclass(frozen=True)
class SuiteColumn:
    label: str
    result: RegressionResult | None
    notice: str | None = None


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    columns: tuple[SuiteColumn, ...]


def _fit_column(
    label: str, rows: list[dict], regressors: tuple[str, ...]
) -> SuiteColumn:
    if len(rows) < MIN_COLUMN_OBS:
        return SuiteColumn(label, None, f"only {len(rows)} games, need {MIN_COLUMN_OBS}")
    X = [[row[name] for name in regressors] for row in rows]
    y = [row[DEPENDENT] for row in rows]
    try:
        return SuiteColumn(label, ols_fit(X, y, names=regressors))
    except RegressionError as exc:
        return SuiteColumn(label, None, str(exc))


def _summary_rows(summaries: Sequence["SurpriseSummary"]) -> list[dict]:
    rows = []
    for s in summaries:
        rows.append(
            {
                "avg_rating": s.avg_rating,
                "overall_surprise": s.overall_surprise,
                "surp_first_half": s.surp_first_half,
                "surp_second_half": s.surp_second_half,
                "peak_surprise": s.peak_surprise,
                "end_surprise": s.end_surprise,
                "comeback_size": s.comeback_size,
                "leader_changes": float(s.leader_changes),
                "rubbish_time": s.rubbish_time,
                "category": s.category,
            }
        )
    return rows


def run_suite(summaries: Sequence["SurpriseSummary"], suite: str) -> SuiteResult:
    """Fit one of the fixed suites over per-game summaries.

    halves: rating on overall / 1st-half / 2nd-half / both-halves surprise.
    peakend: rating on peak / end / both.
    categories: pooled fit with win & lose dummies, then per-category fits;
    columns with too few games (or a degenerate dummy) are emitted empty
    with a notice.
    factors: single-regressor fits for comeback size, leader changes, and
    rubbish time.
    """
    if suite not in SUITES:
        raise RegressionError("unknown_suite", f"suite {suite!r} not one of {SUITES}")
    rows = _summary_rows(summaries)
    columns: list[SuiteColumn] = []
    if suite == "halves":
        for label, regs in _HALVES:
            columns.append(_fit_column(label, rows, regs))
    elif suite == "peakend":
        for label, regs in _PEAKEND:
            columns.append(_fit_column(label, rows, regs))
    elif suite == "factors":
        for label, regs in _FACTORS:
            columns.append(_fit_column(label, rows, regs))
    else:
        pooled = [dict(r) for r in rows]
        for r in pooled:
            r["win"] = 1.0 if r["category"] == "win" else 0.0
            r["lose"] = 1.0 if r["category"] == "lose" else 0.0
        columns.append(_fit_column("all", pooled, ("overall_surprise", "win", "lose")))
        for cat in ("win", "lose", "neutral"):
            subset = [r for r in rows if r["category"] == cat]
            columns.append(_fit_column(cat, subset, ("overall_surprise",)))
    return SuiteResult(suite, tuple(columns))


# --- rendering ---------------------------------------------------------------

SUITE_CSV_HEADER = (
    "suite",
    "column",
    "regressor",
    "beta",
    "se",
    "t",
    "p",
    "stars",
    "r2",
    "adj_r2",
    "n",
)


def suite_to_csv_rows(result: SuiteResult) -> list[tuple[str, ...]]:
    """One row per fitted coefficient; empty columns yield a notice row."""
    rows: list[tuple[str, ...]] = []
    for col in result.columns:
        if col.result is None:
            rows.append(
                (result.suite, col.label, f"EMPTY: {col.notice}", "", "", "", "", "", "", "", "")
            )
            continue
        r = col.result
        for j, name in enumerate(r.names):
            rows.append(
                (
                    result.suite,
                    col.label,
                    name,
                    f"{r.coefficients[j]:.6g}",
                    f"{r.std_errors[j]:.6g}",
                    f"{r.t_stats[j]:.6g}",
                    f"{r.p_values[j]:.6g}",
                    r.stars[j],
                    f"{r.r_squared:.6g}",
                    f"{r.adj_r_squared:.6g}",
                    str(r.n_obs),
                )
            )
    return rows


def suite_to_text(result: SuiteResult) -> str:
    """Aligned plain-text table: coefficients with stars, SEs in parentheses."""
    regressors: list[str] = []
    for col in result.columns:
        if col.result is None:
            continue
        for name in col.result.names:
            if name not in regressors:
                regressors.append(name)
    if "const" in regressors:
        regressors.remove("const")
        regressors.append("const")

    headers = [""] + [f"({i + 1}) {c.label}" for i, c in enumerate(result.columns)]
    body: list[list[str]] = []
    for name in regressors:
        coefs = [name]
        ses = [""]
        for col in result.columns:
            if col.result is None or name not in col.result.names:
                coefs.append("")
                ses.append("")
                continue
            j = col.result.names.index(name)
            coefs.append(f"{col.result.coefficients[j]:.3f}{col.result.stars[j]}")
            ses.append(f"({col.result.std_errors[j]:.3f})")
        body.append(coefs)
        body.append(ses)
    body.append(
        ["N"] + [str(c.result.n_obs) if c.result else "--" for c in result.columns]
    )
    body.append(
        ["adj R2"]
        + [f"{c.result.adj_r_squared:.3f}" if c.result else "--" for c in result.columns]
    )

    table = [headers] + body
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = [f"suite: {result.suite}"]
    for col in result.columns:
        if col.result is None:
            lines.append(f"note: column '{col.label}' empty ({col.notice})")
    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    lines.append(rule)
    for i, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append(rule)
    lines.append(rule)
    lines.append("stars: *** p<0.01, ** p<0.05, * p<0.10")
    return "\n".join(lines) + "\n"
