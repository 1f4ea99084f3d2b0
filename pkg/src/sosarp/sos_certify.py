"""SoS-convexity certification of regularized Taylor models via Gram SDPs.

A polynomial matrix M(s) is an SoS-matrix iff y^T M(s) y is a sum of squares
in the joint variables (s, y).  For the models built here that form, called
h_hat below, is quadratic in y, so its Gram factor only needs the basis
{y_i * s^beta : |beta| <= (p'-2)/2}.  Both the minimal regularization weight
(sigma linear in the coefficient-matching constraints, minimized directly)
and the fixed-sigma membership check (always-feasible phase-I formulation)
are small block-diagonal SDPs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .sdp_core import SdpProblem, SdpSolution, SdpStatus, solve_sdp
from .tensor_poly import (Exponents, Polynomial, SymmetricTensor, inf_star_norm,
                          min_eigenvalue, monomials_up_to, tensor_apply)

BasisElement = Tuple[int, Exponents]


class ConvexityCase(Enum):
    STRONGLY_CONVEX = "StronglyConvex"
    NONCONVEX = "Nonconvex"
    NEARLY_STRONGLY_CONVEX = "NearlyStronglyConvex"


class CertificationError(RuntimeError):
    """No certificate decision could be reached."""


class SosIndeterminate(CertificationError):
    """The certification SDP failed; membership is undecided, not false."""


@dataclass(frozen=True, eq=False)
class SosModel:
    """Case-dependent convexified Taylor model around a fixed point.

    m(s) = f0 + g.s + (1/2) s'H_bar s + sum_{j=3..p} (1/j!) T_j[s]^j
           + (sigma/p') ||s||^p'

    H_bar already contains any case-dependent quadratic shift, so the three
    convexity cases share one evaluation path.  p' is p+1 for odd p and p+2
    for even p, always even.
    """

    n: int
    p: int
    f0: float
    g: np.ndarray
    H_bar: np.ndarray
    higher: List[SymmetricTensor]
    delta: float
    sigma: float
    case_tag: ConvexityCase
    p_prime: int = field(init=False)

    def __post_init__(self) -> None:
        if self.p < 2:
            raise ValueError("model order p must be >= 2")
        object.__setattr__(self, "p_prime",
                           self.p + 1 if self.p % 2 == 1 else self.p + 2)
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))
        object.__setattr__(self, "H_bar", np.asarray(self.H_bar, dtype=float))
        if self.g.shape != (self.n,):
            raise ValueError("gradient shape does not match dimension")
        if self.H_bar.shape != (self.n, self.n):
            raise ValueError("H_bar shape does not match dimension")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if len(self.higher) != max(0, self.p - 2):
            raise ValueError(f"expected {max(0, self.p - 2)} higher tensors (orders 3..p)")
        for k, tensor in enumerate(self.higher):
            if tensor.order != k + 3:
                raise ValueError(f"higher[{k}] has order {tensor.order}, expected {k + 3}")
            if tensor.dim != self.n:
                raise ValueError("higher tensor dimension mismatch")
        lam, _ = min_eigenvalue(self.H_bar)
        if lam < self.delta - 1e-10:
            raise ValueError(
                f"lambda_min(H_bar) = {lam:.3e} violates the >= delta - 1e-10 contract")

    def value(self, s: Sequence[float]) -> float:
        s = np.asarray(s, dtype=float)
        norm = float(np.linalg.norm(s))
        total = self.f0 + float(self.g @ s) + 0.5 * float(s @ self.H_bar @ s)
        for j, tensor in enumerate(self.higher, start=3):
            total += tensor_apply(tensor, s, 0) / math.factorial(j)
        total += self.sigma / self.p_prime * norm ** self.p_prime
        return total

    def gradient(self, s: Sequence[float]) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        norm = float(np.linalg.norm(s))
        grad = self.g + self.H_bar @ s
        for j, tensor in enumerate(self.higher, start=3):
            grad = grad + tensor_apply(tensor, s, 1) / math.factorial(j - 1)
        grad = grad + self.sigma * norm ** (self.p_prime - 2) * s
        return grad

    def hessian(self, s: Sequence[float]) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        norm = float(np.linalg.norm(s))
        hess = self.H_bar.copy()
        for j, tensor in enumerate(self.higher, start=3):
            hess = hess + tensor_apply(tensor, s, 2) / math.factorial(j - 2)
        eye = np.eye(self.n)
        if self.p_prime == 4:
            hess = hess + self.sigma * (norm ** 2 * eye + 2.0 * np.outer(s, s))
        elif norm > 0.0:
            hess = hess + self.sigma * (norm ** (self.p_prime - 2) * eye
                                        + (self.p_prime - 2) * norm ** (self.p_prime - 4)
                                        * np.outer(s, s))
        return hess


@dataclass(frozen=True, eq=False)
class GramCertificate:
    """PSD Gram matrix reproducing h_hat over the fixed monomial basis."""

    basis: List[BasisElement]
    Q: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class CertificateReport:
    max_coeff_mismatch: float
    gram_min_eigenvalue: float
    hessian_violations: int
    samples: int
    ok: bool


def gram_basis(n: int, p_prime: int) -> List[BasisElement]:
    """Monomials y_i * s^beta with |beta| <= (p'-2)/2, i-major, graded-lex."""
    half = (p_prime - 2) // 2
    return [(i, beta) for i in range(n) for beta in monomials_up_to(n, half)]


def _regularizer_form(n: int, p_prime: int) -> Polynomial:
    """Hessian quadratic form of ||s||^p'/p' at sigma = 1, in (s, y).

    Expands ||s||^(p'-4) * (||s||^2 ||y||^2 + (p'-2)(s.y)^2) over 2n
    variables (s first, then y).
    """
    dim = 2 * n
    s_sq = Polynomial(dim, {tuple(2 if k == i else 0 for k in range(dim)): 1.0
                            for i in range(n)})
    y_sq = Polynomial(dim, {tuple(2 if k == n + i else 0 for k in range(dim)): 1.0
                            for i in range(n)})
    s_dot_y = Polynomial(dim, {tuple(1 if k in (i, n + i) else 0 for k in range(dim)): 1.0
                               for i in range(n)})
    return (s_sq ** ((p_prime - 4) // 2)) * (s_sq * y_sq
                                             + (p_prime - 2) * s_dot_y * s_dot_y)


def _base_form(model: SosModel) -> Polynomial:
    """y' (H_bar + sum_j T_j[s]^(j-2)/(j-2)!) y as a polynomial in (s, y)."""
    n = model.n
    dim = 2 * n
    terms: Dict[Exponents, float] = {}

    def bump(alpha: Sequence[int], i: int, j: int, coeff: float) -> None:
        gamma = list(alpha) + [0] * n
        gamma[n + i] += 1
        gamma[n + j] += 1
        key = tuple(gamma)
        terms[key] = terms.get(key, 0.0) + coeff

    zero_alpha = (0,) * n
    for i in range(n):
        bump(zero_alpha, i, i, float(model.H_bar[i, i]))
        for j in range(i + 1, n):
            bump(zero_alpha, i, j, 2.0 * float(model.H_bar[i, j]))

    for order, tensor in enumerate(model.higher, start=3):
        scale = 1.0 / math.factorial(order - 2)
        for key, value in tensor.entries.items():
            for a in set(key):
                partial = list(key)
                partial.remove(a)
                for b in set(partial):
                    rest = list(partial)
                    rest.remove(b)
                    alpha = [0] * n
                    for idx in rest:
                        alpha[idx] += 1
                    orderings = math.factorial(len(rest))
                    for idx in set(rest):
                        orderings //= math.factorial(rest.count(idx))
                    lo, hi = (a, b) if a <= b else (b, a)
                    bump(alpha, lo, hi, scale * value * orderings)
    return Polynomial(dim, terms)


def hessian_form(model: SosModel) -> Polynomial:
    """The quadratic-in-y form y' H_model(s) y, degree p'-2 in s."""
    return _base_form(model) + _regularizer_form(model.n, model.p_prime) * model.sigma


def _coeff_table(form: Polynomial, n: int) -> Dict[Tuple[int, int, Exponents], float]:
    """Index a (s, y) form's coefficients by (i <= i', s-exponents)."""
    table: Dict[Tuple[int, int, Exponents], float] = {}
    for gamma, coeff in form.terms.items():
        alpha = gamma[:n]
        y_idx = [i for i, e in enumerate(gamma[n:]) for _ in range(e)]
        if len(y_idx) != 2:
            raise ValueError("form is not quadratic in y")
        table[(y_idx[0], y_idx[1], alpha)] = coeff
    return table


def _constraint_monomials(n: int, p_prime: int) -> List[Tuple[int, int, Exponents]]:
    alphas = monomials_up_to(n, p_prime - 2)
    return [(i, ip, alpha)
            for i in range(n) for ip in range(i, n) for alpha in alphas]


def _pair_matrix(basis_index: Dict[BasisElement, int], half_list: List[Exponents],
                 half: int, size: int, i: int, ip: int,
                 alpha: Exponents) -> np.ndarray:
    """Matrix A with <A, Q> = coefficient of y_i y_i' s^alpha in z'Qz."""
    A = np.zeros((size, size))
    for beta in half_list:
        rem = tuple(a - b for a, b in zip(alpha, beta))
        if any(e < 0 for e in rem) or sum(rem) > half:
            continue
        A[basis_index[(i, beta)], basis_index[(ip, rem)]] += 1.0
        if i != ip:
            A[basis_index[(ip, beta)], basis_index[(i, rem)]] += 1.0
    return A


def _reconstructed_terms(basis: List[BasisElement], Q: np.ndarray,
                         n: int) -> Dict[Exponents, float]:
    terms: Dict[Exponents, float] = {}
    size = len(basis)
    for u in range(size):
        iu, bu = basis[u]
        for w in range(u, size):
            iw, bw = basis[w]
            gamma = list(bu[k] + bw[k] for k in range(n)) + [0] * n
            gamma[n + iu] += 1
            gamma[n + iw] += 1
            key = tuple(gamma)
            weight = 1.0 if u == w else 2.0
            terms[key] = terms.get(key, 0.0) + weight * float(Q[u, w])
    return terms


def _coefficient_residual(basis: List[BasisElement], Q: np.ndarray,
                          target: Polynomial, n: int) -> float:
    recon = _reconstructed_terms(basis, Q, n)
    keys = set(recon) | set(target.terms)
    return max((abs(recon.get(k, 0.0) - target.terms.get(k, 0.0)) for k in keys),
               default=0.0)


def _usable(solution: SdpSolution, needed: float) -> bool:
    """Solver output is decision-grade even when the target tol was missed."""
    if solution.status is SdpStatus.OPTIMAL:
        return True
    if solution.status in (SdpStatus.MAX_ITERATIONS, SdpStatus.NUMERICAL_FAILURE):
        return (solution.gap <= needed and solution.primal_residual <= needed
                and solution.dual_residual <= needed)
    return False


def min_sigma_sos(model: SosModel, tol: float = 1e-10) -> Tuple[float, GramCertificate]:
    """Minimal sigma >= 0 making the model's Hessian form a sum of squares.

    The model's own sigma field is ignored; sigma is the 1x1 second block of
    the SDP variable and enters each coefficient-matching row linearly.  On
    solver breakdown, falls back to bisection driven by is_sos_convex.
    """
    n = model.n
    basis = gram_basis(n, model.p_prime)
    size = len(basis)
    basis_index = {elem: k for k, elem in enumerate(basis)}
    half = (model.p_prime - 2) // 2
    half_list = monomials_up_to(n, half)

    base = _base_form(model)
    reg = _regularizer_form(n, model.p_prime)
    base_table = _coeff_table(base, n)
    reg_table = _coeff_table(reg, n)
    # rescale the matching rows to O(1); sigma and Q scale back linearly
    scale = max(1.0, max(map(abs, base_table.values()), default=0.0))

    constraints = []
    for (i, ip, alpha) in _constraint_monomials(n, model.p_prime):
        A_gram = _pair_matrix(basis_index, half_list, half, size, i, ip, alpha)
        A_sigma = np.array([[-reg_table.get((i, ip, alpha), 0.0)]])
        rhs = base_table.get((i, ip, alpha), 0.0) / scale
        constraints.append(([A_gram, A_sigma], rhs))
    objective = [np.zeros((size, size)), np.array([[1.0]])]
    problem = SdpProblem(block_sizes=[size, 1], objective=objective,
                         constraints=constraints)
    solution = solve_sdp(problem, tol=tol)

    sigma_hat = max(0.0, float(solution.X[1][0, 0]))
    accept = _usable(solution, needed=1e-8)
    if (not accept and solution.primal_residual <= 1e-8
            and solution.dual_residual <= 1e-8
            and solution.status in (SdpStatus.MAX_ITERATIONS,
                                    SdpStatus.NUMERICAL_FAILURE)):
        # The complementarity gap can stall on badly conditioned instances
        # while both residuals stay clean; the optimum then lies between the
        # dual and primal objectives.  Taking the primal side over-estimates
        # sigma_bar, which is safe because feasibility is monotone in sigma.
        width = solution.gap * (2.0 + 2.0 * sigma_hat)
        accept = width <= 1e-5 * max(1.0, sigma_hat)

    if accept:
        sigma_bar = sigma_hat * scale
        Q = solution.X[0] * scale
        target = base + reg * sigma_bar
        residual = _coefficient_residual(basis, Q, target, n)
        return sigma_bar, GramCertificate(basis=basis, Q=Q, residual=residual)

    return _bisect_sigma(model)


def _bisect_sigma(model: SosModel) -> Tuple[float, GramCertificate]:
    """Doubling bracket + bisection on sigma, membership via is_sos_convex."""
    feasible, cert = is_sos_convex(replace(model, sigma=0.0))
    if feasible:
        return 0.0, cert
    hi = 1.0
    hi_cert: Optional[GramCertificate] = None
    for _ in range(80):
        feasible, cert = is_sos_convex(replace(model, sigma=hi))
        if feasible:
            hi_cert = cert
            break
        hi *= 2.0
    if hi_cert is None:
        raise CertificationError(
            f"no feasible sigma found up to {hi:.3e}; model delta={model.delta}, "
            f"p={model.p}, n={model.n}")
    lo = 0.0
    while hi - lo > 1e-6 * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        feasible, cert = is_sos_convex(replace(model, sigma=mid))
        if feasible:
            hi, hi_cert = mid, cert
        else:
            lo = mid
    return hi, hi_cert


def is_sos_convex(model: SosModel,
                  tol: float = 1e-9) -> Tuple[bool, Optional[GramCertificate]]:
    """Membership check at the model's fixed sigma.

    Solved as the always-feasible phase-I program min t s.t. the Gram matrix
    G matches h_hat after a t-shift of the identity (G PSD, t >= 0); the form
    is a sum of squares iff the optimal t is zero up to tolerance.  Solver
    breakdown raises SosIndeterminate rather than returning false.
    """
    n = model.n
    basis = gram_basis(n, model.p_prime)
    size = len(basis)
    basis_index = {elem: k for k, elem in enumerate(basis)}
    half = (model.p_prime - 2) // 2
    half_list = monomials_up_to(n, half)

    target = hessian_form(model)
    table = _coeff_table(target, n)
    scale = max(1.0, max(map(abs, table.values()), default=0.0))

    constraints = []
    for (i, ip, alpha) in _constraint_monomials(n, model.p_prime):
        A_gram = _pair_matrix(basis_index, half_list, half, size, i, ip, alpha)
        # t shifts the Gram diagonal: z_u^2 contributes only to even monomials
        shift = 1.0 if (i == ip and all(e % 2 == 0 for e in alpha)) else 0.0
        A_t = np.array([[-shift]])
        rhs = table.get((i, ip, alpha), 0.0) / scale
        constraints.append(([A_gram, A_t], rhs))
    objective = [np.zeros((size, size)), np.array([[1.0]])]
    problem = SdpProblem(block_sizes=[size, 1], objective=objective,
                         constraints=constraints)
    solution = solve_sdp(problem, tol=tol)
    usable = _usable(solution, needed=1e-8)
    clean = (solution.primal_residual <= 1e-8 and solution.dual_residual <= 1e-8
             and solution.status in (SdpStatus.OPTIMAL, SdpStatus.MAX_ITERATIONS,
                                     SdpStatus.NUMERICAL_FAILURE))
    if not usable and not clean:
        raise SosIndeterminate(
            f"phase-I SDP ended with {solution.status.value} "
            f"(gap {solution.gap:.3e})")

    t_star = max(0.0, float(solution.X[1][0, 0])) * scale
    threshold = 1e-7 * (1.0 + inf_star_norm(target))
    if t_star > threshold:
        if usable:
            return False, None
        # stalled gap: t_star only upper-bounds the optimum; refuse unless
        # the dual side t_star - width also clears the threshold
        width = solution.gap * (2.0 + 2.0 * t_star / scale) * scale
        if t_star - width > threshold:
            return False, None
        raise SosIndeterminate(
            f"stalled too close to the membership threshold "
            f"(t={t_star:.3e}, width={width:.3e}, threshold={threshold:.3e})")
    Q = solution.X[0] * scale
    residual = _coefficient_residual(basis, Q, target, n)
    return True, GramCertificate(basis=basis, Q=Q, residual=residual)


def verify_certificate(cert: GramCertificate, model: SosModel,
                       samples: int = 100, seed: int = 0) -> CertificateReport:
    """Independent soundness report for a certificate.

    Reconstructs z'Qz against the model's Hessian form coefficient by
    coefficient, reports lambda_min(Q), and spot-checks positive
    semidefiniteness of the model Hessian at sampled steps.
    """
    target = hessian_form(model)
    mismatch = _coefficient_residual(cert.basis, cert.Q, target, model.n)
    gram_min = float(np.min(np.linalg.eigvalsh(cert.Q))) if cert.Q.size else 0.0

    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(samples):
        s = rng.standard_normal(model.n) * (10.0 ** rng.uniform(-2, 1))
        hess = model.hessian(s)
        eigenvalues = np.linalg.eigvalsh(hess)
        spectral = float(np.max(np.abs(eigenvalues)))
        if float(eigenvalues[0]) < -1e-8 * (1.0 + spectral):
            violations += 1

    q_scale = float(np.max(np.abs(cert.Q))) if cert.Q.size else 0.0
    ok = (mismatch <= 1e-7 * (1.0 + inf_star_norm(target))
          and gram_min >= -1e-9 * (1.0 + q_scale)
          and violations == 0)
    return CertificateReport(max_coeff_mismatch=mismatch,
                             gram_min_eigenvalue=gram_min,
                             hessian_violations=violations,
                             samples=samples, ok=ok)


def format_hessian_form(model: SosModel) -> str:
    """Text dump of h_hat and the Gram basis, for debugging."""
    form = hessian_form(model)
    names = [f"s{i + 1}" for i in range(model.n)] + [f"y{i + 1}" for i in range(model.n)]
    parts = []
    for gamma in sorted(form.terms, key=lambda t: (sum(t), t)):
        coeff = form.terms[gamma]
        mono = "*".join(f"{nm}^{e}" if e > 1 else nm
                        for nm, e in zip(names, gamma) if e)
        parts.append(f"{coeff:+.12g}*{mono}" if mono else f"{coeff:+.12g}")
    basis = ", ".join(
        f"y{i + 1}" + "".join(f"*s{k + 1}^{e}" if e > 1 else f"*s{k + 1}"
                              for k, e in enumerate(beta) if e)
        for i, beta in gram_basis(model.n, model.p_prime))
    return "h_hat = " + " ".join(parts) + "\nbasis = [" + basis + "]"
