"""Monte Carlo benchmarks: estimator bias/MSE/KL and model-selection accuracy.

Every replicate draws from its own generator seeded by
``(seed, n, k, p, generator, replicate)``, so a cell's numbers do not depend
on which other cells are in the plan or on evaluation order.  Replicates of
one cell are then fitted together as a batch.

Estimator tables generate from Weibull(k, 1).  Under type I censoring the
grid value ``p`` is the probability of an *uncensored* observation and the
censoring time is ``c = (-log(1 - p))^(1/k)``.  Selection tables generate
from Weibull(1, 1) and from the lognormal with ``mu = 0, sigma = 1`` (both
with unit scale); there ``p`` is the probability of *censoring*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .divergence import weibull_complete_arrays, weibull_type1_arrays
from .estimators import (
    DEFAULT_CONFIG,
    Method,
    SolverConfig,
    mml87_weibull_batch,
    shape_root_batch,
    sirvanci_yang_correction,
    yang_xie_offset,
)
from .models import Complete, TypeI
from .selection import Criterion, selection_scores_batch, weibull_wins
from .specfun import std_normal_quantile

LOGNORMAL_MU = 0.0
LOGNORMAL_SIGMA = 1.0


class BenchTable(str, Enum):
    EST_COMPLETE = "est-complete"
    EST_TYPE1 = "est-type1"
    SELECT_COMPLETE = "select-complete"
    SELECT_TYPE1 = "select-type1"


class Metric(str, Enum):
    BIAS = "bias"
    MSE = "mse"
    KL = "kl"
    ACCURACY = "accuracy"


DEFAULT_EST_METHODS = (Method.MLE, Method.YANG_XIE, Method.MML87)
DEFAULT_CRITERIA = (Criterion.MML87, Criterion.BIC)


@dataclass(frozen=True)
class SimPlan:
    table: BenchTable
    n_grid: tuple[int, ...]
    k_grid: tuple[float, ...] = ()
    p_grid: tuple[float, ...] = ()
    replicates: int = 10_000
    seed: int = 0
    methods: tuple = ()
    solver: SolverConfig = field(default=DEFAULT_CONFIG, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "table", BenchTable(self.table))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "k_grid", tuple(float(k) for k in self.k_grid))
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.n_grid or min(self.n_grid) < 1:
            raise ValueError("n_grid must be a nonempty list of positive counts")
        censored = self.table in (BenchTable.EST_TYPE1, BenchTable.SELECT_TYPE1)
        if censored and not self.p_grid:
            raise ValueError(f"{self.table.value} needs a nonempty p grid")
        if not censored and self.p_grid:
            raise ValueError(f"{self.table.value} takes no p grid")
        if any(not 0 < p < 1 for p in self.p_grid):
            raise ValueError("p values must lie in (0, 1)")
        estimator = self.table in (BenchTable.EST_COMPLETE, BenchTable.EST_TYPE1)
        if estimator:
            if not self.k_grid or min(self.k_grid) <= 0:
                raise ValueError("estimator tables need a nonempty grid of positive shapes")
            methods = tuple(Method(m) for m in (self.methods or DEFAULT_EST_METHODS))
            bad = Method.SIRVANCI_YANG if self.table is BenchTable.EST_COMPLETE else Method.ROSS
            if bad in methods:
                raise ValueError(f"{bad.value} is not available for {self.table.value}")
        else:
            if self.k_grid:
                raise ValueError("selection tables take no k grid")
            methods = tuple(Criterion(m) for m in (self.methods or DEFAULT_CRITERIA))
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class SimRow:
    n: int
    p: float | None
    k: float | None
    generator: str | None
    method: str
    metric: Metric
    value: float
    mc_stderr: float
    n_used: int
    n_excluded: int


def _cell_key(x: float | None) -> int:
    return 0 if x is None else int(round(x * 1_000_000))


def replicate_draws(seed: int, n: int, k, p, tag: int, reps: int, normal: bool = False):
    """``(reps, n)`` block; row ``r`` comes from its own seeded generator."""
    out = np.empty((reps, n))
    base = [int(seed) & (2**64 - 1), n, _cell_key(k), _cell_key(p), tag]
    for r in range(reps):
        rng = np.random.default_rng(base + [r])
        out[r] = rng.standard_normal(n) if normal else rng.random(n)
    return out


def _weibull_log_times(u, k: float):
    # T = (-log U)^(1/k) with unit scale; U = 0 has probability zero but is guarded.
    u = np.where(u > 0, u, np.finfo(float).tiny)
    return np.log(-np.log(u)) / k


def _mean_se(x):
    x = x[np.isfinite(x)]
    m = x.size
    if m == 0:
        return math.nan, math.nan, 0
    se = float(np.std(x, ddof=1) / math.sqrt(m)) if m >= 2 else math.nan
    return float(np.mean(x)), se, m


def _fit_shapes(method: Method, log_y, delta, scheme, cfg):
    """Shape and scale estimates per replicate; NaN marks a failed fit."""
    R, n = log_y.shape
    if method in (Method.MLE, Method.ROSS):
        k, lam, ok, _, _ = shape_root_batch(log_y, delta, 0.0, cfg)
        if method is Method.ROSS:
            k = k * (n - 2) / (n - 0.68) if n > 2 else np.full(R, np.nan)
        return np.where(ok, k, np.nan), np.where(ok, lam, np.nan)
    if method is Method.YANG_XIE:
        k, lam, ok, _, _ = shape_root_batch(log_y, delta, yang_xie_offset(scheme), cfg)
        return np.where(ok, k, np.nan), np.where(ok, lam, np.nan)
    if method is Method.SIRVANCI_YANG:
        d = delta.sum(axis=1)
        k = np.full(R, np.nan)
        log_c = math.log(scheme.c)
        for r in np.flatnonzero((d > 0) & (d < n)):
            s = float(np.sum(delta[r] * (log_c - log_y[r])))
            inv_k = s / (d[r] * sirvanci_yang_correction(d[r] / n))
            if inv_k > 0:
                k[r] = 1.0 / inv_k
        return k, np.full(R, np.nan)
    res = mml87_weibull_batch(log_y, delta, scheme, cfg=cfg)
    ok = res.converged
    return np.where(ok, np.exp(res.x[:, 0]), np.nan), np.where(ok, np.exp(res.x[:, 1]), np.nan)


def run_estimator_bench(plan: SimPlan) -> list[SimRow]:
    """Bias, MSE and KL risk of each shape estimator over the plan's grid.

    Censored cells drop replicates with fewer than two failures before any
    method runs; failures of an individual method are dropped from that
    method's averages.  Both are reported in ``n_excluded``.
    """
    if plan.table not in (BenchTable.EST_COMPLETE, BenchTable.EST_TYPE1):
        raise ValueError(f"{plan.table.value} is not an estimator table")
    censored = plan.table is BenchTable.EST_TYPE1
    rows: list[SimRow] = []
    R = plan.replicates
    for n in plan.n_grid:
        for p in plan.p_grid if censored else (None,):
            for k in plan.k_grid:
                u = replicate_draws(plan.seed, n, k, p, 0, R)
                log_t = _weibull_log_times(u, k)
                if censored:
                    c = (-math.log1p(-p)) ** (1.0 / k)
                    scheme = TypeI(c)
                    delta = (log_t <= math.log(c)).astype(float)
                    log_y = np.minimum(log_t, math.log(c))
                    keep = delta.sum(axis=1) >= 2
                else:
                    c = None
                    scheme = Complete()
                    delta = np.ones_like(log_t)
                    log_y = log_t
                    keep = np.ones(R, dtype=bool)
                ly, dl = log_y[keep], delta[keep]
                for method in plan.methods:
                    if ly.shape[0]:
                        k_hat, lam_hat = _fit_shapes(method, ly, dl, scheme, plan.solver)
                    else:
                        k_hat = lam_hat = np.empty(0)
                    err = k_hat - k
                    if c is None:
                        kl = weibull_complete_arrays(k, 1.0, k_hat, lam_hat)
                    else:
                        kl = weibull_type1_arrays(k, 1.0, k_hat, lam_hat, c)
                    for metric, sample in ((Metric.BIAS, err), (Metric.MSE, err**2), (Metric.KL, kl)):
                        value, se, used = _mean_se(sample)
                        rows.append(
                            SimRow(n, p, k, None, method.value, metric, value, se, used, R - used)
                        )
                    if method is Method.SIRVANCI_YANG:
                        rows.pop()  # no scale estimate, so no KL risk
    return rows


def _selection_block(plan: SimPlan, n: int, p_cens: float | None, generator: str):
    R = plan.replicates
    if generator == "weibull":
        log_t = _weibull_log_times(replicate_draws(plan.seed, n, 1.0, p_cens, 1, R), 1.0)
        log_c = None if p_cens is None else math.log(-math.log(p_cens))
    else:
        z = replicate_draws(plan.seed, n, None, p_cens, 2, R, normal=True)
        log_t = LOGNORMAL_MU + LOGNORMAL_SIGMA * z
        log_c = None if p_cens is None else (
            LOGNORMAL_MU + LOGNORMAL_SIGMA * float(std_normal_quantile(1.0 - p_cens))
        )
    if log_c is None:
        return log_t, np.ones_like(log_t), Complete()
    delta = (log_t <= log_c).astype(float)
    return np.minimum(log_t, log_c), delta, TypeI(math.exp(log_c))


def run_selection_bench(plan: SimPlan) -> list[SimRow]:
    """Probability of selecting the generating family, per criterion and generator."""
    if plan.table not in (BenchTable.SELECT_COMPLETE, BenchTable.SELECT_TYPE1):
        raise ValueError(f"{plan.table.value} is not a selection table")
    censored = plan.table is BenchTable.SELECT_TYPE1
    R = plan.replicates
    rows: list[SimRow] = []
    for n in plan.n_grid:
        for p in plan.p_grid if censored else (None,):
            blocks = {g: _selection_block(plan, n, p, g) for g in ("weibull", "lognormal")}
            for crit in plan.methods:
                acc = {}
                for gen, (log_y, delta, scheme) in blocks.items():
                    sw, sl = selection_scores_batch(log_y, delta, scheme, crit, plan.solver)
                    wins = weibull_wins(sw, sl)
                    correct = wins if gen == "weibull" else ~wins
                    failed = int(np.sum(~(np.isfinite(sw) & np.isfinite(sl))))
                    a = float(correct.mean())
                    se = math.sqrt(a * (1 - a) / (R - 1)) if R >= 2 else math.nan
                    acc[gen] = (a, se)
                    rows.append(SimRow(n, p, None, gen, crit.value, Metric.ACCURACY, a, se, R, failed))
                avg = 0.5 * (acc["weibull"][0] + acc["lognormal"][0])
                se = 0.5 * math.hypot(acc["weibull"][1], acc["lognormal"][1])
                rows.append(SimRow(n, p, None, "average", crit.value, Metric.ACCURACY, avg, se, 2 * R, 0))
    return rows


def run_bench(plan: SimPlan) -> list[SimRow]:
    if plan.table in (BenchTable.EST_COMPLETE, BenchTable.EST_TYPE1):
        return run_estimator_bench(plan)
    return run_selection_bench(plan)
