"""Weibull versus lognormal model selection by MML87 codelength or BIC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codelength import Model
from .errors import IncompatibleScheme
from .estimators import (
    DEFAULT_CONFIG,
    SolverConfig,
    mle_lognormal_batch,
    mml87_lognormal_batch,
    mml87_weibull_batch,
    shape_root_batch,
)
from .models import Complete, Sample, TypeI, lognormal_nll_arrays, weibull_nll_arrays

TIE_TOL = 1e-12


class Criterion(str, Enum):
    MML87 = "mml87"
    BIC = "bic"


@dataclass(frozen=True)
class SelectionVerdict:
    winner: Model
    codelength_weibull: float
    codelength_lognormal: float
    criterion: Criterion
    tie: bool = False
    degenerate_weibull: bool = False
    degenerate_lognormal: bool = False
    warnings: tuple[str, ...] = field(default_factory=tuple)


def selection_scores_batch(
    log_y, delta, scheme, criterion: Criterion, cfg: SolverConfig = DEFAULT_CONFIG
):
    """Weibull and lognormal scores (nats) per replicate row; NaN where a fit fails."""
    criterion = Criterion(criterion)
    if not isinstance(scheme, (Complete, TypeI)):
        raise IncompatibleScheme(f"model selection supports complete or type I data, not {scheme!r}")
    n = log_y.shape[1]
    if criterion is Criterion.MML87:
        rw = mml87_weibull_batch(log_y, delta, scheme, cfg=cfg)
        rl = mml87_lognormal_batch(log_y, delta, scheme, cfg=cfg)
        sw = np.where(rw.converged, rw.fun, np.nan)
        sl = np.where(rl.converged, rl.fun, np.nan)
        return sw, sl
    k, lam, ok_w, _, _ = shape_root_batch(log_y, delta, 0.0, cfg)
    sw = np.full(log_y.shape[0], np.nan)
    if ok_w.any():
        sw[ok_w] = weibull_nll_arrays(log_y[ok_w], delta[ok_w], k[ok_w], lam[ok_w])
    mu, sd, ok_l = mle_lognormal_batch(log_y, delta, scheme, cfg)
    sl = np.full(log_y.shape[0], np.nan)
    if ok_l.any():
        log_c = math.log(scheme.c) if isinstance(scheme, TypeI) else None
        sl[ok_l] = lognormal_nll_arrays(log_y[ok_l], delta[ok_l], mu[ok_l], sd[ok_l], log_c)
    penalty = math.log(n)  # (p/2) log n with p = 2
    return sw + penalty, sl + penalty


def weibull_wins(score_w, score_l):
    """Boolean verdicts: smaller score wins, ties and double failures go to Weibull."""
    score_w = np.asarray(score_w)
    score_l = np.asarray(score_l)
    fw, fl = np.isfinite(score_w), np.isfinite(score_l)
    both = fw & fl
    return np.where(both, score_w <= score_l + TIE_TOL, fw | ~fl)


def select_model(
    sample: Sample, criterion: Criterion = Criterion.MML87, cfg: SolverConfig = DEFAULT_CONFIG
) -> SelectionVerdict:
    """Fit both families under ``criterion`` and return the shorter description.

    A failed fit is flagged degenerate and the other family wins.  Data with
    fewer than two distinct failure times flag both fits as degenerate even
    if the optimiser returns a value, since neither family is identified.
    """
    criterion = Criterion(criterion)
    ly = np.log(sample.y)[None, :]
    dl = sample.delta[None, :].astype(float)
    sw, sl = selection_scores_batch(ly, dl, sample.scheme, criterion, cfg)
    sw, sl = float(sw[0]), float(sl[0])
    warnings = []
    distinct = np.unique(sample.y[sample.delta == 1]).size
    deg_w, deg_l = not math.isfinite(sw), not math.isfinite(sl)
    if distinct < 2:
        deg_w = deg_l = True
        warnings.append(f"only {distinct} distinct failure time(s); verdict is not informative")
    if not math.isfinite(sw):
        warnings.append("Weibull fit failed")
    if not math.isfinite(sl):
        warnings.append("lognormal fit failed")
    tie = math.isfinite(sw) and math.isfinite(sl) and abs(sw - sl) < TIE_TOL
    if tie:
        warnings.append("codelengths tie; Weibull chosen")
    winner = Model.WEIBULL if bool(weibull_wins(sw, sl)) else Model.LOGNORMAL
    return SelectionVerdict(
        winner=winner,
        codelength_weibull=sw,
        codelength_lognormal=sl,
        criterion=criterion,
        tie=tie,
        degenerate_weibull=deg_w,
        degenerate_lognormal=deg_l,
        warnings=tuple(warnings),
    )
