"""Damped-Newton minimization of certified-convex regularized models.

The certifier guarantees convexity of the model before entry, and sigma > 0
makes it coercive, so any stationary point is a global minimizer; plain
damped Newton from the origin therefore suffices and keeps the origin-descent
property m(s) <= m(0) by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .sos_certify import SosModel


class SubsolverFailure(RuntimeError):
    """Line search or factorization broke down before the tolerance was met."""


@dataclass(frozen=True, eq=False)
class SubsolveResult:
    s: np.ndarray
    model_value: float
    grad_norm: float
    iterations: int
    converged: bool


def _newton_direction(hessian: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve H d = -grad by Cholesky with an escalating scaled ridge."""
    scale = max(1.0, float(np.max(np.abs(hessian))))
    ridge = 0.0
    while True:
        try:
            shifted = hessian if ridge == 0.0 else hessian + ridge * np.eye(len(grad))
            factor = cho_factor(shifted, lower=True)
            return cho_solve(factor, -grad)
        except np.linalg.LinAlgError:
            ridge = 1e-12 * scale if ridge == 0.0 else ridge * 100.0
            if ridge > 1e-4 * scale:
                raise SubsolverFailure("model Hessian factorization failed") from None


def minimize_model(model: SosModel, theta: float = 0.5,
                   abs_tol: float | None = None,
                   max_iter: int = 100) -> SubsolveResult:
    """Minimize the model to ||grad m(s)|| <= max(theta*||s||^(p'-1), abs_tol).

    Armijo backtracking (constant 1e-4, halving, 60 halvings max) keeps every
    accepted step a strict descent step.  Once the termination inequality
    first holds, up to four polishing Newton steps sharpen the stationarity
    residual — near the minimizer they contract quadratically — and the last
    iterate still meeting the inequality is returned.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if abs_tol is None:
        abs_tol = 1e-12 * (1.0 + abs(model.f0))
    if model.sigma <= 0.0:
        raise ValueError("sigma must be positive for a coercive model")

    power = model.p_prime - 1
    s = np.zeros(model.n)
    value = model.value(s)
    grad = model.gradient(s)
    iterations = 0
    polish_remaining = 4
    best = None  # last iterate meeting the termination inequality

    while iterations < max_iter:
        grad_norm = float(np.linalg.norm(grad))
        threshold = max(theta * float(np.linalg.norm(s)) ** power, abs_tol)
        if grad_norm <= threshold:
            best = (s.copy(), value, grad_norm, iterations)
            if polish_remaining == 0 or grad_norm <= abs_tol:
                break
            polish_remaining -= 1
        elif best is not None:
            break

        direction = _newton_direction(model.hessian(s), grad)
        slope = float(grad @ direction)
        if slope >= 0.0:
            # ridge-regularized solve must give descent; treat as breakdown
            if best is not None:
                break
            raise SubsolverFailure("Newton direction is not a descent direction")
        step = 1.0
        halvings = 0
        while True:
            trial = s + step * direction
            trial_value = model.value(trial)
            if trial_value <= value + 1e-4 * step * slope:
                break
            step *= 0.5
            halvings += 1
            if halvings >= 60:
                if best is not None:
                    s_b, v_b, g_b, _ = best
                    return SubsolveResult(s=s_b, model_value=v_b, grad_norm=g_b,
                                          iterations=iterations, converged=True)
                raise SubsolverFailure("line search failed after 60 halvings")
        s = trial
        value = trial_value
        grad = model.gradient(s)
        iterations += 1

    if best is None:
        return SubsolveResult(s=s, model_value=value,
                              grad_norm=float(np.linalg.norm(grad)),
                              iterations=iterations, converged=False)
    grad_norm = float(np.linalg.norm(grad))
    threshold = max(theta * float(np.linalg.norm(s)) ** power, abs_tol)
    if grad_norm <= threshold and value <= best[1]:
        return SubsolveResult(s=s.copy(), model_value=value, grad_norm=grad_norm,
                              iterations=iterations, converged=True)
    s_b, v_b, g_b, _ = best
    return SubsolveResult(s=s_b, model_value=v_b, grad_norm=g_b,
                          iterations=iterations, converged=True)
