"""Decay-law fitting and closed-form rate predictions for the built-in
damping families.

fit() does linear least squares in transformed coordinates for four model
shapes: exp_sigma (E ~ C exp(-c Sigma(t))), stretched (E ~ C exp(-c t^p)),
power (E ~ C (1+t)^-c) and log_power (E ~ C ln(2+t)^-c). The predictors
turn the on/off schedule parameters into expected rate envelopes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from torusdamp.grid import EnergyTrace

MODELS = ("exp_sigma", "stretched", "power", "log_power")

SIGMA_EXPONENT_TOLERANCE = 0.1


@dataclass
class RateFit:
    """Fitted decay law: model tag, prefactor C, rate c, stretched
    exponent p (1.0 unless model = stretched), RMS log residual, window."""

    model: str
    c_prefactor: float
    c: float
    p: float
    residual: float
    window: tuple
    n_samples: int

    def summary(self) -> str:
        forms = {
            "exp_sigma": "E ~ {C:.4g} exp(-{c:.4g} Sigma(t))",
            "stretched": "E ~ {C:.4g} exp(-{c:.4g} t^{p:.4g})",
            "power": "E ~ {C:.4g} (1+t)^-{c:.4g}",
            "log_power": "E ~ {C:.4g} ln(2+t)^-{c:.4g}",
        }
        line = forms[self.model].format(C=self.c_prefactor, c=self.c, p=self.p)
        return (f"{line}  [residual {self.residual:.3g}, window "
                f"({self.window[0]:.4g}, {self.window[1]:.4g}), "
                f"{self.n_samples} samples]")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "C", "c", "p", "residual",
                            "t_min", "t_max", "n_samples"])
            writer.writerow([self.model, f"{self.c_prefactor:.17g}",
                             f"{self.c:.17g}", f"{self.p:.17g}",
                             f"{self.residual:.17g}",
                             f"{self.window[0]:.17g}",
                             f"{self.window[1]:.17g}", self.n_samples])


def _lstsq_line(x: np.ndarray, y: np.ndarray):
    """Least-squares slope/intercept and RMS residual of y ~ a + b x."""
    coeffs = np.polyfit(x, y, 1)
    fitvals = np.polyval(coeffs, x)
    rms = float(np.sqrt(np.mean((y - fitvals) ** 2)))
    return float(coeffs[0]), float(coeffs[1]), rms


def fit(trace: EnergyTrace, model: str,
        window: Optional[tuple] = None) -> RateFit:
    """Fit a decay model to an energy trace over the given time window.

    The default window is [0.2 t_max, t_max], discarding the transient
    where the prefactor rather than the rate dominates. exp_sigma needs
    the trace's sigma channel; stretched normalizes by the first recorded
    energy of the whole trace.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    t_max = float(trace.times[-1])
    if window is None:
        window = (0.2 * t_max, t_max)
    t_min, t_hi = float(window[0]), float(window[1])
    if not t_min < t_hi:
        raise ValueError("window must satisfy t_min < t_max")

    mask = (trace.times >= t_min - 1e-12) & (trace.times <= t_hi + 1e-12)
    t = trace.times[mask]
    e = trace.energy[mask]
    if np.any(e <= 0):
        raise ValueError("energy must be positive on the fit window")

    if model == "exp_sigma":
        if trace.sigma is None:
            raise ValueError("exp_sigma fit needs a sigma channel on the trace")
        x = trace.sigma[mask]
        y = np.log(e)
        if len(t) < 8:
            raise ValueError("need at least 8 samples in the fit window")
        slope, intercept, rms = _lstsq_line(x, y)
        return RateFit(model=model, c_prefactor=math.exp(intercept),
                       c=max(-slope, 0.0), p=1.0, residual=rms,
                       window=(t_min, t_hi), n_samples=len(t))

    if model == "stretched":
        e0 = float(trace.energy[0])
        keep = (e < e0) & (t > 0)
        t, e = t[keep], e[keep]
        if len(t) < 8:
            raise ValueError("need at least 8 usable samples in the fit window")
        x = np.log(t)
        y = np.log(-np.log(e / e0))
        slope, intercept, rms = _lstsq_line(x, y)
        return RateFit(model=model, c_prefactor=e0,
                       c=math.exp(intercept), p=max(slope, 0.0),
                       residual=rms, window=(t_min, t_hi), n_samples=len(t))

    if len(t) < 8:
        raise ValueError("need at least 8 samples in the fit window")
    if model == "power":
        x = np.log1p(t)
    else:
        x = np.log(np.log(2.0 + t))
    y = np.log(e)
    slope, intercept, rms = _lstsq_line(x, y)
    return RateFit(model=model, c_prefactor=math.exp(intercept),
                   c=max(-slope, 0.0), p=1.0, residual=rms,
                   window=(t_min, t_hi), n_samples=len(t))


@dataclass
class BoundVerdict:
    passed: bool
    c: float
    threshold: float
    message: str


def sigma_exponent_bound_check(rate_fit: RateFit) -> BoundVerdict:
    """Check the fitted exp(-c Sigma) exponent against the ceiling c <= 2,
    with a fixed tolerance for finite-frequency and finite-time effects."""
    if rate_fit.model != "exp_sigma":
        raise ValueError("bound check applies to exp_sigma fits only")
    threshold = 2.0 + SIGMA_EXPONENT_TOLERANCE
    passed = rate_fit.c <= threshold
    msg = (f"fitted c = {rate_fit.c:.4g} vs ceiling 2 "
           f"(+{SIGMA_EXPONENT_TOLERANCE} tolerance): "
           f"{'pass' if passed else 'FAIL'}")
    return BoundVerdict(passed=passed, c=rate_fit.c,
                        threshold=threshold, message=msg)


def _increasing_inverse(fun: Callable[[float], float], target: float,
                        hi_guess: float = 1.0) -> float:
    """Invert a strictly increasing function with fun(0) <= target by
    bracket expansion and Brent root finding."""
    if target <= fun(0.0):
        return 0.0
    hi = hi_guess
    while fun(hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("inverse bracket expansion failed")
    return float(brentq(lambda x: fun(x) - target, 0.0, hi, xtol=1e-12,
                        rtol=1e-12))


@dataclass
class GrowingPrediction:
    """Rate envelopes for on/off damping with growing gaps at time t."""

    t: float
    upper_rate: float
    lower_envelope: float
    n_lower: float
    n_upper: float

    def as_dict(self) -> dict:
        return {"t": self.t, "upper_rate": self.upper_rate,
                "lower_envelope": self.lower_envelope,
                "n_lower": self.n_lower, "n_upper": self.n_upper}


def predict_growing(f: Callable[[float], float], l0: float, c1: float,
                    t: float, c: float = 1.0) -> GrowingPrediction:
    """Predicted decay envelopes for the growing-gap on/off family.

    With F(k) = integral_1^{k+1} f and B(k) = integral_0^k f (adaptive
    quadrature, inverted by bisection), the number of completed on-windows
    by time t lies in [F^-1(c1 t / (l0 + c1)) - 1, B^-1(t) + 2] and the
    energy envelopes are exp(-c F^-1(...)) above and exp(-c B^-1(t)) below.
    """
    if l0 <= 0 or c1 <= 0:
        raise ValueError("l0 and c1 must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    probe = np.linspace(0.0, max(t, 10.0), 33)
    vals = np.array([f(float(z)) for z in probe])
    if np.any(vals < c1 - 1e-9):
        raise ValueError("gap function must satisfy f >= c1")
    if np.any(np.diff(vals) < -1e-9):
        raise ValueError("gap function must be nondecreasing")

    def big_f(k):
        return quad(f, 1.0, k + 1.0, limit=200)[0] if k > 0 else 0.0

    def big_b(k):
        return quad(f, 0.0, k, limit=200)[0] if k > 0 else 0.0

    n_lower = _increasing_inverse(big_f, c1 * t / (l0 + c1)) - 1.0
    n_upper = _increasing_inverse(big_b, t) + 2.0
    return GrowingPrediction(
        t=t,
        upper_rate=math.exp(-c * max(n_lower + 1.0, 0.0)),
        lower_envelope=math.exp(-c * (n_upper - 2.0)),
        n_lower=n_lower,
        n_upper=n_upper,
    )


@dataclass
class ShrinkingPrediction:
    """Rate regime for on-windows of shrinking length f(k) ~ k^-beta."""

    beta: float
    upper_form: str
    upper_exponent: Optional[float]
    lower_form: str
    lower_exponent: Optional[float]
    lower_threshold: Optional[float]

    def as_dict(self) -> dict:
        return {"beta": self.beta, "upper_form": self.upper_form,
                "upper_exponent": self.upper_exponent,
                "lower_form": self.lower_form,
                "lower_exponent": self.lower_exponent,
                "lower_threshold": self.lower_threshold}


def predict_shrinking(beta: float, s0: float, c_m: float = 1.0,
                      c_w: float = 1.0) -> ShrinkingPrediction:
    """Predicted decay regime for shrinking on-windows with lengths
    comparable to k^-beta in period s0.

    Upper bound: stretched exponential with exponent 1 - 3 beta for
    beta < 1/3, a power law at beta = 1/3, and no decaying upper envelope
    (stall) beyond. Lower bound: stretched exponent 1 - beta while
    beta < 1; for beta >= 1 the total damping is bounded, so there is no
    uniform stabilization at all.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    if beta >= 1.0:
        return ShrinkingPrediction(beta=beta, upper_form="none",
                                   upper_exponent=None,
                                   lower_form="no_uniform_stabilization",
                                   lower_exponent=None, lower_threshold=None)
    threshold = 2.0 * c_m * c_w / ((1.0 - beta) * s0 ** (1.0 - beta))
    if beta < 1.0 / 3.0:
        upper_form, upper_exp = "stretched", 1.0 - 3.0 * beta
    elif beta == 1.0 / 3.0:
        upper_form, upper_exp = "power", None
    else:
        upper_form, upper_exp = "stall", None
    return ShrinkingPrediction(beta=beta, upper_form=upper_form,
                               upper_exponent=upper_exp,
                               lower_form="stretched",
                               lower_exponent=1.0 - beta,
                               lower_threshold=threshold)


@dataclass
class PolyPrediction:
    """Rate regime for damping with envelope (1+t)^-beta."""

    beta: float
    form: str
    exponent: Optional[float]
    lower_threshold: Optional[float]

    def as_dict(self) -> dict:
        return {"beta": self.beta, "form": self.form,
                "exponent": self.exponent,
                "lower_threshold": self.lower_threshold}


def poly_rate_check(beta: float, c_m: float = 1.0,
                    w_sup: float = 1.0) -> PolyPrediction:
    """Expected decay form for polynomially vanishing damping: stretched
    exponential with exponent 1 - beta for beta < 1 (exponential at
    beta = 0), a power law with bounded rate at beta = 1, and no uniform
    stabilization for beta > 1."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0.0:
        return PolyPrediction(beta=beta, form="exponential", exponent=1.0,
                              lower_threshold=2.0 * c_m * w_sup)
    if beta < 1.0:
        return PolyPrediction(beta=beta, form="stretched",
                              exponent=1.0 - beta,
                              lower_threshold=2.0 * c_m * w_sup / (1.0 - beta))
    if beta == 1.0:
        return PolyPrediction(beta=beta, form="power", exponent=None,
                              lower_threshold=2.0 * c_m * w_sup)
    return PolyPrediction(beta=beta, form="none", exponent=None,
                          lower_threshold=None)
