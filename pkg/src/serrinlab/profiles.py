"""Convex scalar profiles generating the quasilinear operator family.

A profile ``f`` names the operator ``L_f u = div(f'(|grad u|) grad u / |grad u|)``.
Each built-in profile ships hand-derived ``f'``, ``f''`` and the inverse slope
``g' = (f')^{-1}`` (the derivative of the convex conjugate); auditors need
1e-10-level accuracy, so derivatives are never formed numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "OperatorProfile",
    "RegularizedProfile",
    "AdmissibilityReport",
    "make_power_profile",
    "make_mean_curvature_profile",
    "regularize",
    "check_admissibility",
    "profile_from_id",
]


@dataclass(frozen=True)
class OperatorProfile:
    """Strictly convex profile with f(0) = f'(0) = 0 and its inverse slope.

    ``slope_sup`` is the supremum of ``f'``; ``g_prime`` rejects arguments at
    or beyond it (the mean-curvature slope saturates at 1).
    """

    name: str
    f: Callable
    f_prime: Callable
    f_second: Callable
    g_prime: Callable
    degeneracy_exponent: float | None = None
    slope_sup: float = math.inf

    def g_second(self, s):
        """Derivative of g', via the inverse-function rule g'' = 1/f''(g'(s))."""
        return 1.0 / self.f_second(self.g_prime(s))

    @property
    def is_laplacian(self) -> bool:
        return self.degeneracy_exponent == 2.0


@dataclass(frozen=True)
class RegularizedProfile:
    """Profile smoothed at the origin: f_eps(t) = f(sqrt(eps^2 + t^2)) - f(eps)."""

    base: OperatorProfile
    epsilon: float

    def f_eps(self, t):
        t = np.asarray(t, dtype=float)
        return self.base.f(np.hypot(self.epsilon, t)) - self.base.f(self.epsilon)

    def f_eps_prime(self, t):
        t = np.asarray(t, dtype=float)
        q = np.hypot(self.epsilon, t)
        return self.base.f_prime(q) * t / q

    def coefficient(self, t):
        """Frozen Picard coefficient a_eps(t) = f_eps'(t)/t, continuous at t=0."""
        t = np.asarray(t, dtype=float)
        q = np.hypot(self.epsilon, t)
        return self.base.f_prime(q) / q


def make_power_profile(p: float) -> OperatorProfile:
    """Power profile f(t) = t^p / p, the p-Laplacian family.

    Requires p > 1; at p <= 1 superlinearity fails and the inverse slope
    degenerates.
    """
    if not p > 1.0:
        raise ValueError(f"power profile requires p > 1, got {p}")
    p = float(p)
    q = 1.0 / (p - 1.0)

    def f(t):
        t = np.asarray(t, dtype=float)
        return t**p / p

    def f_prime(t):
        t = np.asarray(t, dtype=float)
        return t ** (p - 1.0)

    def f_second(t):
        t = np.asarray(t, dtype=float)
        return (p - 1.0) * t ** (p - 2.0)

    def g_prime(s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("g' is defined on [0, inf)")
        return s**q

    name = "laplacian" if p == 2.0 else f"p-laplacian:{p:g}"
    return OperatorProfile(
        name=name,
        f=f,
        f_prime=f_prime,
        f_second=f_second,
        g_prime=g_prime,
        degeneracy_exponent=p,
    )


def make_mean_curvature_profile() -> OperatorProfile:
    """Mean-curvature profile f(t) = sqrt(1+t^2) - 1.

    Shifted by -1 so f(0) = 0; the shift does not change the operator.  The
    slope f' is bounded by 1, so g' lives on [0, 1).
    """

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(1.0 + t * t) - 1.0

    def f_prime(t):
        t = np.asarray(t, dtype=float)
        return t / np.sqrt(1.0 + t * t)

    def f_second(t):
        t = np.asarray(t, dtype=float)
        return (1.0 + t * t) ** (-1.5)

    def g_prime(s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s >= 1.0):
            raise ValueError("mean-curvature g' requires 0 <= s < 1")
        # (1-s)(1+s) keeps precision as s -> 1
        return s / np.sqrt((1.0 - s) * (1.0 + s))

    return OperatorProfile(
        name="mean-curvature",
        f=f,
        f_prime=f_prime,
        f_second=f_second,
        g_prime=g_prime,
        degeneracy_exponent=None,
        slope_sup=1.0,
    )


def regularize(profile: OperatorProfile, epsilon: float) -> RegularizedProfile:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return RegularizedProfile(base=profile, epsilon=float(epsilon))


@dataclass
class AdmissibilityReport:
    """Per-clause worst violations for the profile hypotheses.

    Failures are warnings, not errors: rigidity needs superlinearity, but
    oracles and solvers run on any strictly convex profile.
    """

    profile: str
    clauses: dict = field(default_factory=dict)  # name -> (worst, tol, ok)

    def record(self, name: str, worst: float, tol: float):
        self.clauses[name] = (float(worst), float(tol), bool(worst <= tol))

    def ok(self, name: str) -> bool:
        return self.clauses[name][2]

    @property
    def all_pass(self) -> bool:
        return all(ok for _, _, ok in self.clauses.values())

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "clauses": {
                k: {"worst": v[0], "tolerance": v[1], "pass": v[2]}
                for k, v in self.clauses.items()
            },
            "all_pass": self.all_pass,
        }


def check_admissibility(
    profile: OperatorProfile, sample_count: int = 64, s_max: float | None = None
) -> AdmissibilityReport:
    """Evaluate the profile invariants on a logarithmic sample grid.

    Clauses: vanishing value and slope at 0, strict convexity, inverse
    round-trip at 1e-10 relative, and a superlinearity probe (f(s)/s must be
    increasing with positive log-slope over the last decade).
    """
    if sample_count < 8:
        raise ValueError("sample_count must be at least 8")
    if s_max is None:
        # bounded-slope profiles lose bits near the saturating slope
        s_max = 1e3 if math.isinf(profile.slope_sup) else 1e2
    s = np.logspace(-6, math.log10(s_max), sample_count)

    rep = AdmissibilityReport(profile=profile.name)
    origin = max(abs(float(profile.f(0.0))), abs(float(profile.f_prime(0.0))))
    rep.record("origin_values", origin, 1e-12)

    fpp = np.asarray(profile.f_second(s))
    rep.record("strict_convexity", max(0.0, float(-(fpp.min()))), 0.0)

    rt = np.abs(profile.g_prime(profile.f_prime(s)) - s) / np.maximum(1.0, s)
    rep.record("round_trip", float(rt.max()), 1e-10)

    phi = np.asarray(profile.f(s)) / s
    increments = np.diff(phi)
    rep.record("slope_ratio_increasing", max(0.0, float(-(increments.min()))), 1e-12)
    # unboundedness probe: log-slope of f(s)/s over the top decade of a wide
    # grid (f(s)/s itself stays well conditioned far beyond the round-trip cap)
    s_wide = np.logspace(-6, 6, sample_count)
    phi_wide = np.asarray(profile.f(s_wide)) / s_wide
    tail = phi_wide[s_wide >= 1e5]
    s_tail = s_wide[s_wide >= 1e5]
    log_slope = (math.log(tail[-1]) - math.log(tail[0])) / (
        math.log(s_tail[-1]) - math.log(s_tail[0])
    )
    rep.record("superlinearity", max(0.0, 0.01 - log_slope), 0.0)
    return rep


def profile_from_id(spec: str) -> OperatorProfile:
    """Resolve a profile id: 'laplacian', 'p-laplacian:<p>' or 'mean-curvature'."""
    spec = spec.strip()
    if spec == "laplacian":
        return make_power_profile(2.0)
    if spec == "mean-curvature":
        return make_mean_curvature_profile()
    if spec.startswith("p-laplacian:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad p-laplacian exponent in {spec!r}") from exc
        return make_power_profile(p)
    raise ValueError(f"unknown profile id {spec!r}")
