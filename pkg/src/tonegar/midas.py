"""Quantile regression of quarterly growth on Almon-restricted weekly lags.

The lag weights are an unnormalized polynomial in the lag index; endpoint
restrictions pin the weight (and optionally its slope) to zero at the
longest lag, reducing the free parameter count.  Collapsing the weekly lag
vector through the polynomial design matrix turns the problem into a small
linear quantile regression, estimated by minimizing pinball loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .periods import Quarter, Week, add_weeks, last_week_ending_by, next_quarter, quarter_end

ALLOWED_LAG_QUARTERS = (2, 4, 6, 8)
DEFAULT_TAU_GRID = (0.05, 0.25, 0.50, 0.75, 0.95)


class RankDeficientDesign(ValueError):
    """Raised when design columns are collinear; names the offending columns."""


class FitNonConvergence(RuntimeError):
    """Raised when the pinball minimization fails; carries iteration diagnostics."""

    def __init__(self, message: str, trace: list[float]):
        super().__init__(f"{message} (objective trace: {trace})")
        self.trace = trace


@dataclass(frozen=True)
class MidasConfig:
    weeks_per_quarter: int = 13
    lag_quarters: int = 8
    poly_degree: int = 3
    n_restrictions: int = 2
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID
    horizon: int = 1
    max_fill_fraction: float = 0.20

    def __post_init__(self) -> None:
        if self.weeks_per_quarter < 1:
            raise ValueError("weeks_per_quarter must be >= 1")
        if self.lag_quarters not in ALLOWED_LAG_QUARTERS:
            raise ValueError(f"lag_quarters must be one of {ALLOWED_LAG_QUARTERS}")
        if self.n_restrictions not in (0, 1, 2):
            raise ValueError("n_restrictions must be 0, 1 or 2")
        if self.n_restrictions > self.poly_degree:
            raise ValueError("n_restrictions cannot exceed poly_degree")
        if self.n_lags < self.poly_degree + 1:
            raise ValueError("need at least poly_degree + 1 weekly lags")
        if not all(0.0 < tau < 1.0 for tau in self.tau_grid):
            raise ValueError("every quantile level must lie in (0, 1)")
        if tuple(sorted(self.tau_grid)) != tuple(self.tau_grid):
            raise ValueError("tau_grid must be sorted ascending")
        if self.horizon != 1:
            raise ValueError("only one-quarter-ahead forecasting is supported")

    @property
    def n_lags(self) -> int:
        return self.lag_quarters * self.weeks_per_quarter

    @property
    def n_free(self) -> int:
        return self.poly_degree - self.n_restrictions + 1


def almon_weights(theta_full: np.ndarray, n_lags: int) -> np.ndarray:
    """Evaluate the lag polynomial: w_k = sum_i theta_i * k**i for k = 0..n_lags-1."""
    theta_full = np.asarray(theta_full, dtype=float)
    k = np.arange(n_lags, dtype=float)
    return np.vander(k, len(theta_full), increasing=True) @ theta_full


def restriction_map(poly_degree: int, n_restrictions: int, n_lags: int) -> np.ndarray:
    """Linear map from free parameters to full polynomial coefficients.

    The image satisfies w(L) = 0 (one restriction) and additionally
    w'(L) = 0 (two restrictions) at the longest lag L = n_lags - 1.  The
    leading poly_degree - n_restrictions + 1 coefficients stay free; the
    trailing ones are solved from the constraints.
    """
    p, r = poly_degree, n_restrictions
    if r > p:
        raise ValueError("n_restrictions cannot exceed poly_degree")
    n_coef = p + 1
    if r == 0:
        return np.eye(n_coef)
    L = float(n_lags - 1)
    powers = np.arange(n_coef, dtype=float)
    rows = [L**powers]
    if r == 2:
        deriv = powers * np.concatenate(([0.0], L ** (powers[1:] - 1)))
        rows.append(deriv)
    constraints = np.vstack(rows)  # (r, p+1)
    lead, trail = constraints[:, : n_coef - r], constraints[:, n_coef - r :]
    if abs(np.linalg.det(trail)) < 1e-12:
        raise ValueError(f"restrictions are degenerate for n_lags={n_lags}")
    # theta_trail = -trail^{-1} @ lead @ theta_free
    mapping = np.vstack([np.eye(n_coef - r), -np.linalg.solve(trail, lead)])
    return mapping


def collapse_matrix(config: MidasConfig) -> np.ndarray:
    """Matrix turning a raw lag vector into restricted regressors: X = M @ x.

    M = R^T Q with Q the polynomial design matrix Q[i, k] = k**i, so that
    theta_free^T X equals sum_k w(k; R theta_free) x_k.
    """
    k = np.arange(config.n_lags, dtype=float)
    Q = np.vander(k, config.poly_degree + 1, increasing=True).T
    R = restriction_map(config.poly_degree, config.n_restrictions, config.n_lags)
    return R.T @ Q


@dataclass
class RegressorPanel:
    quarters: list[Quarter]
    y: np.ndarray
    X: np.ndarray
    raw_lags: np.ndarray
    fill_counts: np.ndarray
    flagged: np.ndarray
    skipped: list[tuple[Quarter, str]]
    config: MidasConfig

    @property
    def n_rows(self) -> int:
        return len(self.quarters)

    def window(self, start: int, stop: int) -> RegressorPanel:
        return RegressorPanel(
            quarters=self.quarters[start:stop],
            y=self.y[start:stop],
            X=self.X[start:stop],
            raw_lags=self.raw_lags[start:stop],
            fill_counts=self.fill_counts[start:stop],
            flagged=self.flagged[start:stop],
            skipped=[],
            config=self.config,
        )


def build_design(
    weekly: dict[Week, float],
    gdp: dict[Quarter, float],
    config: MidasConfig,
) -> RegressorPanel:
    """Assemble one panel row per quarter with full lag history and a next-quarter target.

    Lag 0 of a quarter is the last ISO week whose Sunday falls on or before
    the quarter's last calendar day.  Interior gaps in the weekly series are
    filled by carrying the last observed value forward; rows where filled
    cells exceed the configured fraction are flagged but kept.
    """
    if not weekly:
        raise ValueError("weekly series is empty")
    observed = sorted(weekly)
    first_week, last_week = observed[0], observed[-1]
    grid_weeks: list[Week] = []
    values: list[float] = []
    filled: list[bool] = []
    week = first_week
    last_value = weekly[first_week]
    while week <= last_week:
        if week in weekly:
            last_value = weekly[week]
            filled.append(False)
        else:
            filled.append(True)
        grid_weeks.append(week)
        values.append(last_value)
        week = add_weeks(week, 1)
    grid_values = np.asarray(values)
    grid_filled = np.asarray(filled)
    week_index = {w: i for i, w in enumerate(grid_weeks)}

    M = collapse_matrix(config)
    C = config.n_lags
    quarters: list[Quarter] = []
    rows_y: list[float] = []
    rows_raw: list[np.ndarray] = []
    fill_counts: list[int] = []
    skipped: list[tuple[Quarter, str]] = []
    for quarter in sorted(gdp):
        target = next_quarter(quarter)
        if target not in gdp:
            skipped.append((quarter, "missing next-quarter target"))
            continue
        lag0 = last_week_ending_by(quarter_end(quarter))
        if lag0 not in week_index:
            if lag0 < first_week:
                skipped.append((quarter, "insufficient weekly history"))
            else:
                skipped.append((quarter, "weekly series ends before quarter end"))
            continue
        end = week_index[lag0]
        start = end - (C - 1)
        if start < 0:
            skipped.append((quarter, "insufficient weekly history"))
            continue
        lags = grid_values[start : end + 1][::-1].copy()  # lag 0 first
        quarters.append(quarter)
        rows_y.append(gdp[target])
        rows_raw.append(lags)
        fill_counts.append(int(grid_filled[start : end + 1].sum()))

    raw = np.asarray(rows_raw) if rows_raw else np.empty((0, C))
    fills = np.asarray(fill_counts, dtype=int)
    return RegressorPanel(
        quarters=quarters,
        y=np.asarray(rows_y),
        X=raw @ M.T,
        raw_lags=raw,
        fill_counts=fills,
        flagged=fills > config.max_fill_fraction * C,
        skipped=skipped,
        config=config,
    )


# --- pinball loss and its minimization -----------------------------------


def pinball(y, yhat, tau: float):
    """Check loss (tau - 1{y < yhat}) * (y - yhat); nonnegative, zero at y = yhat."""
    u = np.asarray(y, dtype=float) - np.asarray(yhat, dtype=float)
    return np.where(u < 0, (tau - 1.0) * u, tau * u)


@dataclass
class MidasQrModel:
    tau: float
    intercept: float
    theta_free: np.ndarray
    theta_full: np.ndarray
    implied_weights: np.ndarray
    config: MidasConfig
    objective: float = np.nan
    trace: list[float] = field(default_factory=list)

    def predict(self, X) -> np.ndarray | float:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            if X.shape[0] != self.theta_free.shape[0]:
                raise ValueError(
                    f"regressor length {X.shape[0]} does not match model ({self.theta_free.shape[0]})"
                )
            return float(self.intercept + X @ self.theta_free)
        if X.shape[1] != self.theta_free.shape[0]:
            raise ValueError(
                f"regressor width {X.shape[1]} does not match model ({self.theta_free.shape[0]})"
            )
        return self.intercept + X @ self.theta_free

    def predict_from_lags(self, raw_lags) -> np.ndarray | float:
        """Same prediction through the weight parameterization (diagnostic)."""
        raw_lags = np.asarray(raw_lags, dtype=float)
        return self.intercept + raw_lags @ self.implied_weights


def predict(model: MidasQrModel, X) -> np.ndarray | float:
    return model.predict(X)


def _total_pinball(params: np.ndarray, A: np.ndarray, y: np.ndarray, tau: float) -> float:
    return float(np.sum(pinball(y, A @ params, tau)))


def _smoothed_objective(params: np.ndarray, A: np.ndarray, y: np.ndarray, tau: float, eps: float):
    """Pinball with the kink replaced by a quadratic on [-eps, eps]; value and gradient.

    rho(u) = tau*u + relu(-u); the relu is Huberized so the objective is C1
    and upper-bounds the true loss by at most eps/4 per observation.
    """
    u = y - A @ params
    x = -u
    quad = np.abs(x) < eps
    relu = np.where(x >= eps, x, 0.0)
    relu[quad] = (x[quad] + eps) ** 2 / (4.0 * eps)
    drelu = np.where(x >= eps, 1.0, 0.0)
    drelu[quad] = (x[quad] + eps) / (2.0 * eps)
    value = float(np.sum(tau * u + relu))
    grad = -A.T @ (tau - drelu)
    return value, grad


def _collinear_columns(A: np.ndarray) -> list[int]:
    """Columns that lie in the span of the columns before them (Gram-Schmidt sweep)."""
    cols: list[int] = []
    basis = np.empty((A.shape[0], 0))
    for j in range(A.shape[1]):
        col = A[:, j]
        if basis.shape[1]:
            col = col - basis @ (basis.T @ col)
        norm = np.linalg.norm(col)
        if norm < 1e-10 * max(1.0, np.linalg.norm(A[:, j])):
            cols.append(j)
        else:
            basis = np.hstack([basis, (col / norm)[:, None]])
    return cols


def _basis_polish(
    A: np.ndarray, y: np.ndarray, tau: float, params: np.ndarray, max_iter: int = 200
) -> tuple[np.ndarray, float]:
    """Finishing pass: move to the best interpolation vertex reachable by single swaps.

    An optimal fit interpolates as many observations as it has parameters,
    so starting from the smallest residuals of the smoothed solution we
    re-solve the interpolation system under single-index swaps until no
    swap improves the exact loss.  At that point no adjacent vertex is
    better, which for this piecewise-linear convex objective means the
    vertex is a global minimizer.
    """
    n, k = A.shape
    best_obj = _total_pinball(params, A, y, tau)
    best_params = params

    def solve_subset(subset: np.ndarray) -> tuple[np.ndarray, float] | None:
        sub = A[subset]
        try:
            candidate = np.linalg.solve(sub, y[subset])
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(candidate)):
            return None
        return candidate, _total_pinball(candidate, A, y, tau)

    subset = np.sort(np.argsort(np.abs(y - A @ params))[:k])
    solved = solve_subset(subset)
    if solved is not None and solved[1] <= best_obj:
        best_params, best_obj = solved
    tol = 1e-12 * max(1.0, best_obj)
    for _ in range(max_iter):
        improved = False
        outside = np.setdiff1d(np.arange(n), subset)
        for pos in range(k):
            for j in outside:
                trial = subset.copy()
                trial[pos] = j
                solved = solve_subset(np.sort(trial))
                if solved is not None and solved[1] < best_obj - tol:
                    best_params, best_obj = solved
                    subset = np.sort(trial)
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break
    return best_params, best_obj


def fit_quantile(panel: RegressorPanel, tau: float, config: MidasConfig | None = None) -> MidasQrModel:
    """Minimize total pinball loss of y on [1, X] at quantile level tau.

    Continuation over a shrinking smoothing width with a quasi-Newton inner
    loop, then a simplex polish on the exact loss.  With no regressors the
    known minimizer, an empirical tau-quantile, is returned directly.
    """
    config = config or panel.config
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    y = np.asarray(panel.y, dtype=float)
    X = np.asarray(panel.X, dtype=float)
    n, n_free = X.shape

    R = restriction_map(config.poly_degree, config.n_restrictions, config.n_lags)

    def finish(intercept: float, free: np.ndarray, objective: float, trace: list[float]) -> MidasQrModel:
        theta_full = R @ free if n_free else np.zeros(config.poly_degree + 1)
        return MidasQrModel(
            tau=tau,
            intercept=intercept,
            theta_free=free,
            theta_full=theta_full,
            implied_weights=almon_weights(theta_full, config.n_lags),
            config=config,
            objective=objective,
            trace=trace,
        )

    if n_free == 0:
        beta0 = float(np.quantile(y, tau, method="inverted_cdf"))
        return finish(beta0, np.zeros(0), _total_pinball(np.array([beta0]), np.ones((n, 1)), y, tau), [])

    if n <= n_free + 1:
        raise ValueError(f"panel has {n} rows but the model has {n_free + 1} parameters")

    # Standardize columns for conditioning; parameters are mapped back exactly.
    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    A = np.column_stack([np.ones(n), (X - shift) / scale])

    rank = np.linalg.matrix_rank(A)
    if rank < A.shape[1]:
        cols = _collinear_columns(A)
        names = ["intercept" if j == 0 else f"X{j - 1}" for j in cols]
        raise RankDeficientDesign(f"design is rank deficient; collinear columns: {', '.join(names)}")

    y_scale = max(float(np.std(y)), 1e-8)
    params = np.zeros(1 + n_free)
    params[0] = float(np.quantile(y, tau))
    trace: list[float] = []
    converged = False
    for eps_rel in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        eps = eps_rel * y_scale
        res = minimize(
            _smoothed_objective,
            params,
            args=(A, y, tau, eps),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": 500, "ftol": 1e-16, "gtol": 1e-12},
        )
        params = res.x
        trace.append(_total_pinball(params, A, y, tau))
        converged = converged or res.success

    params, objective = _basis_polish(A, y, tau, params)
    trace.append(objective)

    if not np.isfinite(objective) or not converged:
        raise FitNonConvergence(f"quantile fit did not converge at tau={tau}", trace)

    free = params[1:] / scale
    intercept = float(params[0] - free @ shift)
    return finish(intercept, free, objective, trace)


@dataclass
class QuantileGridFit:
    taus: tuple[float, ...]
    models: dict[float, MidasQrModel]

    def predict_raw(self, X) -> np.ndarray:
        """Per-tau predictions without non-crossing repair, shape (..., n_taus)."""
        X = np.asarray(X, dtype=float)
        preds = [self.models[tau].predict(X) for tau in self.taus]
        return np.stack([np.asarray(p) for p in preds], axis=-1)

    def predict(self, X) -> np.ndarray:
        """Predictions repaired to be nondecreasing in tau (monotone rearrangement)."""
        return np.sort(self.predict_raw(X), axis=-1)


def fit_quantile_grid(
    panel: RegressorPanel, tau_grid: tuple[float, ...] | None = None, config: MidasConfig | None = None
) -> QuantileGridFit:
    config = config or panel.config
    taus = tuple(tau_grid if tau_grid is not None else config.tau_grid)
    if tuple(sorted(taus)) != taus:
        raise ValueError("tau_grid must be sorted ascending")
    return QuantileGridFit(taus=taus, models={tau: fit_quantile(panel, tau, config) for tau in taus})


def export_models(grid: QuantileGridFit) -> str:
    """Reproducibility export: one line per quantile with all parameters."""
    lines = ["tau\tintercept\ttheta_free\timplied_weights"]
    for tau in grid.taus:
        m = grid.models[tau]
        free = ",".join(repr(v) for v in m.theta_free)
        weights = ",".join(repr(v) for v in m.implied_weights)
        lines.append(f"{tau}\t{m.intercept!r}\t{free}\t{weights}")
    return "\n".join(lines) + "\n"
