# Copyright 2026 The prgd Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Executable checks: ε-second-order criticality, Monte-Carlo estimates of
the pullback regularity constants, trace level decrease/localisation
inequalities and the deterministic coupling experiment"""
from dataclasses import dataclass, field
import math
from typing import List, Optional

import numpy as np
from loguru import logger

from prgd import constants
from prgd import numerics
from prgd.algorithm import tangent_space_steps
from prgd.errors import InvalidArgumentError
from prgd.pullback import Pullback

CHECK_MANIFOLD_DECREASE = "manifold_step_decrease"
CHECK_SUFFICIENT_DECREASE = "sufficient_decrease"
CHECK_LOCALIZE = "improve_or_localize"
CHECKS = [CHECK_MANIFOLD_DECREASE, CHECK_SUFFICIENT_DECREASE, CHECK_LOCALIZE]

TANGENT_KINDS = (constants.KIND_TANGENT_STEP, constants.KIND_BOUNDARY_TRUNCATION)


@dataclass(frozen=True)
class CriticalityReport:
    grad_norm: float
    # λ_min(∇²f̂_x(0))
    min_eig_pullback: float
    # λ_min(Hess f(x)), equal to the former for second order retractions
    min_eig_hess: float
    eps: float
    rho: float
    verdict: bool
    # ambient coordinates of the eigenvector for min_eig_pullback
    eigenvector: Optional[np.ndarray] = None

    def as_dict(self):
        return {
            "grad_norm": self.grad_norm,
            "min_eig_pullback": self.min_eig_pullback,
            "min_eig_hess": self.min_eig_hess,
            "eps": self.eps,
            "rho": self.rho,
            "verdict": self.verdict,
        }


def riemannian_hessian(problem, x, h=constants.FD_HESSIAN_STEP):
    """Hess f(x) in the intrinsic basis of T_x: central differences of the
    Riemannian gradient along Retr_x(±h·e_i), projected back to T_x"""
    manifold = problem.manifold
    basis = manifold.tangent_basis(x)
    columns = []
    for i in range(basis.shape[1]):
        forward = manifold.retract(x, manifold.project(x, h * basis[:, i]))
        backward = manifold.retract(x, manifold.project(x, -h * basis[:, i]))
        difference = problem.riemannian_gradient(forward).coords - problem.riemannian_gradient(backward).coords
        columns.append(basis.T @ manifold.project(x, difference / (2 * h)).coords)
    hessian = numerics.check_finite(np.column_stack(columns), "Riemannian Hessian")
    return numerics.as_sym_matrix(0.5 * (hessian + hessian.T), tolerance=np.inf)


def check_second_order_point(problem, x, eps, rho, fd_h=constants.FD_HESSIAN_STEP) -> CriticalityReport:
    """‖grad f(x)‖ ≤ ε and λ_min(∇²f̂_x(0)) ≥ −√(ρε)"""
    if not fd_h > 0:
        raise InvalidArgumentError(f"finite difference step must be positive, got {fd_h}")
    problem.check_point(x)
    grad_norm = problem.riemannian_gradient(x).norm
    p = Pullback(problem, x)
    min_eig_pullback, eigenvector = numerics.min_eigpair(p.hessian_at_zero(fd_h))
    min_eig_hess, _ = numerics.min_eigpair(riemannian_hessian(problem, x, fd_h))
    verdict = bool(grad_norm <= eps and min_eig_pullback >= -math.sqrt(rho * eps))
    logger.debug(f"second order check: ‖grad‖={grad_norm} λ_min={min_eig_pullback} "
                 f"(Hess {min_eig_hess}) verdict={verdict}")
    return CriticalityReport(
        grad_norm=grad_norm,
        min_eig_pullback=min_eig_pullback,
        min_eig_hess=min_eig_hess,
        eps=eps,
        rho=rho,
        verdict=verdict,
        eigenvector=numerics.as_vector(p.basis @ eigenvector),
    )


def _sample_pairs(problem, ball, n_samples, rng):
    """Yield (pullback, s) with x random on the manifold and s uniform in
    B_{x,ball}(0), skipping ‖s‖ < 1e-8"""
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be >= 1, got {n_samples}")
    if not 0 < ball < math.inf:
        raise InvalidArgumentError(f"sampling ball must be finite and positive, got {ball}")
    manifold = problem.manifold
    for _ in range(n_samples):
        x, rng = manifold.random_point(rng, problem.dim)
        s, rng = manifold.sample_ball(x, ball, rng)
        if s.norm < constants.MIN_SAMPLE_NORM:
            continue
        yield Pullback(problem, x), s


def empirical_grad_lipschitz(problem, ball, n_samples, rng) -> float:
    """max ‖∇f̂_x(s) − ∇f̂_x(0)‖/‖s‖ over random (x, s)"""
    max_ratio = 0.0
    for p, s in _sample_pairs(problem, ball, n_samples, rng):
        difference = p.gradient(s).coords - p.gradient(p.zero()).coords
        max_ratio = max(max_ratio, float(np.linalg.norm(difference)) / s.norm)
    logger.debug(f"empirical gradient Lipschitz constant over {n_samples} samples: {max_ratio}")
    return max_ratio


def empirical_hess_lipschitz(problem, ball, n_samples, fd_h, rng) -> float:
    """max ‖∇²f̂_x(s) − ∇²f̂_x(0)‖/‖s‖ over random (x, s), Hessians by finite
    differences of the pullback gradient"""
    max_ratio = 0.0
    for p, s in _sample_pairs(problem, ball, n_samples, rng):
        difference = p.hessian_at(s, fd_h) - p.hessian_at(p.zero(), fd_h)
        max_ratio = max(max_ratio, numerics.operator_norm(difference) / s.norm)
    logger.debug(f"empirical Hessian Lipschitz constant over {n_samples} samples: {max_ratio}")
    return max_ratio


def check_pullback_gradient(problem, ball, n_samples, rng, fd_h=constants.FD_GRADIENT_STEP) -> float:
    """Largest error of ∇f̂_x(s) against central differences of f̂_x over
    random (x, s), relative to max(1, ‖∇f̂_x(s)‖)"""
    max_error = 0.0
    for p, s in _sample_pairs(problem, ball, n_samples, rng):
        c = p.manifold.to_intrinsic(s, p.basis)
        exact = p.intrinsic_gradient(c)
        approximate = numerics.fd_gradient(p.intrinsic_value, c, fd_h)
        error = float(np.linalg.norm(exact - approximate)) / max(1.0, float(np.linalg.norm(exact)))
        max_error = max(max_error, error)
    logger.debug(f"pullback gradient vs finite differences over {n_samples} samples: max error {max_error:.3e}")
    return max_error


def check_retraction_second_order(manifold, dim, n_samples, rng, fd_h=constants.FD_HESSIAN_STEP) -> float:
    """Largest finite difference intrinsic acceleration of t ↦ Retr_x(t·s)
    over random x and unit s"""
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be >= 1, got {n_samples}")
    max_acceleration = 0.0
    for _ in range(n_samples):
        x, rng = manifold.random_point(rng, dim)
        s, rng = manifold.sample_ball(x, 1.0, rng)
        if s.norm < constants.MIN_SAMPLE_NORM:
            continue
        direction = manifold.project(x, s.coords / s.norm)
        max_acceleration = max(max_acceleration, manifold.check_second_order(x, direction, fd_h))
    return max_acceleration


@dataclass(frozen=True)
class EllBoundReport:
    max_hessian_norm: float
    bound: float
    holds: bool


def check_ell_bound(problem, ball, n_samples, fd_h, rng) -> EllBoundReport:
    """Pullback gradients are (L + ρb)-Lipschitz on B_{x,b}(0): sample
    ‖∇²f̂_x(s)‖ there and compare"""
    c = problem.constants()
    bound = c.lip_grad + c.lip_hess * ball
    max_norm = 0.0
    for p, s in _sample_pairs(problem, ball, n_samples, rng):
        max_norm = max(max_norm, numerics.operator_norm(p.hessian_at(s, fd_h)))
    holds = max_norm <= bound + constants.LEMMA_SLACK
    logger.debug(f"max ‖∇²f̂‖ on the ball of radius {ball}: {max_norm} (L + ρb = {bound})")
    return EllBoundReport(max_hessian_norm=max_norm, bound=bound, holds=holds)


def escape_probability_bound(params) -> float:
    """1 − (ℓ√d/√(ρε))·2^{10−χ/2}, clamped to [0, 1]"""
    exponent = 10.0 - params.chi / 2
    bound = 1.0 - params.ell * math.sqrt(params.dim) / params.sqrt_rho_eps * 2.0 ** exponent
    return min(1.0, max(0.0, bound))


@dataclass(frozen=True)
class LemmaViolation:
    check: str
    t: int
    step: Optional[int]
    lhs: float
    rhs: float

    def __str__(self):
        return f"{self.check} violated at t={self.t} step={self.step}: {self.lhs} > {self.rhs}"


@dataclass
class LemmaReport:
    checked: dict = field(default_factory=lambda: {check: 0 for check in CHECKS})
    violations: List[LemmaViolation] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None

    def record(self, check, event, lhs, rhs):
        self.checked[check] += 1
        if lhs > rhs:
            self.violations.append(LemmaViolation(check, event.t, event.step, lhs, rhs))


def check_trace_lemmas(trace, params, slack=constants.LEMMA_SLACK) -> LemmaReport:
    """Check every event of `trace` against

    - manifold steps with ‖grad‖ > ε decrease f by at least αηε²/2, where
      α = 1 unless a finite b cut the step short (then the step is αη·grad
      and the sufficient decrease bound gives αη‖grad‖²/2 > αηε²/2)
    - tangent steps satisfy f̂(s_{j+1}) − f̂(s_j) ≤ −(αη/2)‖∇f̂(s_j)‖²
    - tangent phases stay localised: ‖s_j − s_0‖ ≤ √(2ηj(f̂(s_0) − f̂(s_j)))

    each with `slack` absolute. Violations are collected, not raised."""
    report = LemmaReport()
    eta = params.eta
    for event in trace.events:
        if event.kind == constants.KIND_MANIFOLD_STEP:
            if event.grad_norm is None or event.grad_norm <= params.epsilon:
                continue
            alpha = 1.0 if event.alpha is None else event.alpha
            decrease = event.f_prev - event.f
            # written as required ≤ achieved
            report.record(CHECK_MANIFOLD_DECREASE, event,
                          alpha * eta * params.epsilon ** 2 / 2 - slack, decrease)
        elif event.kind in TANGENT_KINDS:
            report.record(CHECK_SUFFICIENT_DECREASE, event,
                          event.f - event.f_prev,
                          -(event.alpha * eta / 2) * event.grad_norm ** 2 + slack)
            progress = max(0.0, event.f_start - event.f)
            report.record(CHECK_LOCALIZE, event,
                          event.displacement,
                          math.sqrt(2 * eta * event.step * progress) + slack)

    if report.ok:
        logger.debug(f"trace lemma checks passed: {report.checked}")
    else:
        logger.warning(f"{len(report.violations)} trace lemma violations, first: {report.first_violation}")
    return report


def coupling_experiment(problem, x, params, r0):
    """Run the inner loop for 𝒯 steps from s0 = +(ηr0/2)e_1 and
    s0' = −(ηr0/2)e_1 where e_1 is the bottom eigenvector of ∇²f̂_x(0).
    Returns the two decreases f̂(s_𝒯) − f̂(0); at a strict saddle the
    smaller one is at most −ℱ."""
    p = Pullback(problem, x)
    min_eigenvalue, e1 = numerics.min_eigpair(p.hessian_at_zero())
    if not min_eigenvalue <= -params.sqrt_rho_eps:
        raise InvalidArgumentError(
            f"coupling hypothesis violated: λ_min(∇²f̂_x(0)) ≤ −√(ρε) "
            f"(λ_min={min_eigenvalue}, √(ρε)={params.sqrt_rho_eps})")
    omega = 2.0 ** (2 - params.chi) * params.ell * params.locality
    if not r0 > omega:
        raise InvalidArgumentError(f"coupling hypothesis violated: r0 > ω (r0={r0}, ω={omega})")
    if not r0 <= 2 * params.radius:
        raise InvalidArgumentError(f"coupling hypothesis violated: r0 ≤ 2r (r0={r0}, r={params.radius})")

    direction = p.basis @ e1
    offset = params.eta * r0 / 2
    f0 = p.value(p.zero())
    drops = []
    for sign in (1.0, -1.0):
        s0 = p.tangent(sign * offset * direction)
        s, _ = tangent_space_steps(p, s0, params.eta, params.ball, params.horizon)
        drops.append(p.value(s) - f0)
    logger.debug(f"coupling experiment r0={r0} ω={omega}: decreases {drops[0]}, {drops[1]} (ℱ={params.score_drop})")
    return drops[0], drops[1]
