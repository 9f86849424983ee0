"""Least-squares slope fits for h-refinement studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


def log_factor(h):
    """The slowly varying factor attached to piecewise-linear rates."""
    return np.log(2.0 + 1.0 / np.asarray(h, dtype=float))


@dataclass(frozen=True)
class RateFit:
    slope: float
    band95: float           # half-width of the 95% confidence band
    residual: float         # rms misfit of log values
    model: str              # "power" or "power*log"


def fit_rate(hs, values, model: str = "power") -> RateFit:
    """Fit log(value) = a + slope*log(h), optionally removing the log factor."""
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(hs) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    if (values <= 0).any():
        return RateFit(slope=float("nan"), band95=float("nan"),
                       residual=float("nan"), model=model)
    y = np.log(values)
    if model == "power*log":
        y = y - np.log(log_factor(hs))
    elif model != "power":
        raise ValueError("model must be 'power' or 'power*log'")
    res = stats.linregress(np.log(hs), y)
    fitted = res.intercept + res.slope * np.log(hs)
    rms = float(np.sqrt(np.mean((y - fitted) ** 2)))
    tcrit = stats.t.ppf(0.975, max(len(hs) - 2, 1))
    return RateFit(slope=float(res.slope), band95=float(tcrit * res.stderr),
                   residual=rms, model=model)


def best_fit(hs, values) -> RateFit:
    """The better of the plain-power and power-times-log fits (by misfit)."""
    plain = fit_rate(hs, values, "power")
    logged = fit_rate(hs, values, "power*log")
    if np.isnan(plain.slope):
        return plain
    return plain if plain.residual <= logged.residual else logged
