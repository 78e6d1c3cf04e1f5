"""Power-law fits and summary statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats


class Summary(NamedTuple):
    mean: float
    stderr: float
    min: float
    max: float


def summarize(samples) -> Summary:
    """Mean, standard error of the mean (``ddof=1``), min and max.

    A single sample has standard error 0.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cannot summarize an empty sample")
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return Summary(float(x.mean()), se, float(x.min()), float(x.max()))


@dataclass
class ScalingFit:
    """Least-squares fit of ``log tau = log_prefactor + alpha * log N``."""

    alpha: float
    log_prefactor: float
    alpha_stderr: float
    r_squared: float
    points_used: list

    def predict(self, n) -> np.ndarray:
        return np.exp(self.log_prefactor) * np.asarray(n, dtype=float) ** self.alpha


def fit_power_law(points) -> ScalingFit:
    """Fit ``tau(N) ~ N^alpha`` by unweighted OLS in log-log space.

    ``points`` is a sequence of ``(N, tau)`` pairs.  They are sorted by N
    first, which makes the result independent of input order.
    """
    pts = sorted((int(n), float(t)) for n, t in points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    ns = [n for n, _ in pts]
    if len(set(ns)) != len(ns):
        raise ValueError("duplicate N values")
    if any(n <= 0 for n in ns):
        raise ValueError("N values must be positive")
    if any(not t > 0 or not math.isfinite(t) for _, t in pts):
        raise ValueError("tau values must be positive and finite")
    x = np.log(np.array(ns, dtype=float))
    y = np.log(np.array([t for _, t in pts]))
    res = stats.linregress(x, y)
    r2 = float(res.rvalue**2) if np.isfinite(res.rvalue) else 1.0
    return ScalingFit(
        alpha=float(res.slope),
        log_prefactor=float(res.intercept),
        alpha_stderr=float(res.stderr),
        r_squared=min(max(r2, 0.0), 1.0),
        points_used=pts,
    )


def fit_report(fit: ScalingFit, protocol: str, p: float, tau_stderr=None) -> dict:
    """JSON-ready fit report; ``tau_stderr`` maps N to the stderr of tau."""
    tau_stderr = tau_stderr or {}
    return {
        "protocol": protocol,
        "P": p,
        "alpha": fit.alpha,
        "alpha_stderr": fit.alpha_stderr,
        "log_prefactor": fit.log_prefactor,
        "r_squared": fit.r_squared,
        "points": [
            {"N": n, "tau": t, "tau_stderr": tau_stderr.get(n)} for n, t in fit.points_used
        ],
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"
