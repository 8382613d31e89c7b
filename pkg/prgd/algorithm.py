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
"""Perturbed Riemannian gradient descent.

Large gradients get a Riemannian gradient step on the manifold. Small
gradients get a perturbation in the tangent space followed by up to 𝒯
gradient steps on the pullback inside the ball B_{x,b}(0), then a single
retraction back to the manifold."""
from dataclasses import dataclass, field, asdict
import math
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from prgd import constants
from prgd.errors import CapacityError, InternalError, InvalidArgumentError, NumericalFailureError
from prgd.manifold import Point, Tangent
from prgd.pullback import Pullback


@dataclass(frozen=True)
class PrgdParams:
    epsilon: float
    delta: float
    dim: int
    ell: float
    lip_grad: float
    lip_hess: float
    ball: float
    beta: float
    gap: float
    chi: float
    eta: float
    radius: float
    horizon: int
    score_drop: float
    locality: float
    budget: int
    mode: str
    # χ before rounding 𝒯 up (log bound in theoretical mode, user χ otherwise)
    chi_floor: float = 0.0
    # T before any cap
    formula_budget: float = 0.0
    budget_capped: bool = False
    terminate: bool = False

    def __post_init__(self):
        if self.mode not in constants.MODES:
            raise InvalidArgumentError(f"unknown mode: {self.mode}")
        for name in ("epsilon", "delta", "ell", "lip_grad", "lip_hess", "ball", "gap", "eta", "radius",
                     "score_drop", "locality"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if self.beta < 0:
            raise InvalidArgumentError(f"beta must be >= 0, got {self.beta}")
        if self.chi <= constants.CHI_FLOOR:
            raise InvalidArgumentError(f"χ > 1/4 violated (χ={self.chi})")
        if not math.isclose(self.eta, 1.0 / self.ell, rel_tol=1e-12):
            raise InvalidArgumentError(f"η = 1/ℓ violated (η={self.eta}, ℓ={self.ell})")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise InvalidArgumentError(f"𝒯 must be an integer >= 1, got {self.horizon}")
        if not isinstance(self.budget, int) or self.budget < 1:
            raise InvalidArgumentError(f"T must be an integer >= 1, got {self.budget}")
        check_hypotheses(self.epsilon, self.ell, self.lip_grad, self.lip_hess, self.ball, self.gap)

    @property
    def sqrt_rho_eps(self):
        return math.sqrt(self.lip_hess * self.epsilon)

    def as_dict(self):
        """JSON friendly copy, infinities as the string "inf" """
        return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in asdict(self).items()}


def check_hypotheses(epsilon, ell, lip_grad, lip_hess, ball, gap):
    """Convergence hypotheses and the ℓ range of the ℓ-Lipschitz ball lemma"""
    if not epsilon <= ball * ball * lip_hess:
        raise InvalidArgumentError(f"convergence hypothesis violated: ε ≤ b²ρ (ε={epsilon}, b={ball}, ρ={lip_hess})")
    if not lip_grad >= math.sqrt(lip_hess * epsilon):
        raise InvalidArgumentError(f"convergence hypothesis violated: L ≥ √(ρε) (L={lip_grad}, ρ={lip_hess}, ε={epsilon})")
    if not epsilon ** 1.5 <= 3 * math.sqrt(lip_hess) * gap:
        raise InvalidArgumentError(f"convergence hypothesis violated: ε^(3/2) ≤ 3√ρ·Δf (ε={epsilon}, ρ={lip_hess}, Δf={gap})")
    if not lip_grad <= ell <= lip_grad + lip_hess * ball:
        raise InvalidArgumentError(f"ℓ ∈ [L, L+ρb] violated (ℓ={ell}, L={lip_grad}, ρ={lip_hess}, b={ball})")


def theoretical_chi(epsilon, delta, dim, ell, lip_hess, gap):
    """χ₀ = max(1/4 + margin, 4 log₂(2³¹ ℓ²√d Δf / (δ√ρ ε^{5/2})))"""
    argument = constants.CHI_LOG_CONSTANT * ell ** 2 * math.sqrt(dim) * gap \
        / (delta * math.sqrt(lip_hess) * epsilon ** 2.5)
    return max(constants.CHI_FLOOR + constants.CHI_FLOOR_MARGIN, 4 * math.log2(argument))


def integral_horizon(raw):
    """Round 𝒯 up to an integer, snapping values within floating point noise
    of an integer; returns `(horizon, snapped)`"""
    nearest = round(raw)
    if nearest >= 1 and abs(raw - nearest) <= constants.HORIZON_SNAP * raw:
        return int(nearest), True
    return max(1, math.ceil(raw)), False


def derive_params(epsilon, delta, dim, ell, lip_grad, lip_hess, ball, gap, mode,
                  chi=None, beta=0.0, budget=None, terminate=False) -> PrgdParams:
    """Balanced PRGD parameters.

    theoretical mode picks χ from the log bound; practical mode takes the
    caller's χ. Either way 𝒯 = ⌈ℓχ/√(ρε)⌉, χ is recomputed so 𝒯 is an
    integer, and η, r, ℱ, ℒ, T follow from the enlarged χ. `budget` caps T."""
    if mode not in constants.MODES:
        raise InvalidArgumentError(f"unknown mode: {mode} (expected one of {constants.MODES})")
    for name, value in (("epsilon", epsilon), ("ell", ell), ("lip_grad", lip_grad), ("lip_hess", lip_hess),
                        ("ball", ball), ("gap", gap)):
        if not value > 0:
            raise InvalidArgumentError(f"{name} must be positive, got {value}")
    if not 0 < delta < 1:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")
    if int(dim) != dim or dim < 1:
        raise InvalidArgumentError(f"dim must be an integer >= 1, got {dim}")

    if mode == constants.MODE_THEORETICAL and math.isinf(ball):
        raise InvalidArgumentError("theoretical mode requires a finite b")
    check_hypotheses(epsilon, ell, lip_grad, lip_hess, ball, gap)

    if mode == constants.MODE_THEORETICAL:
        chi_floor = theoretical_chi(epsilon, delta, dim, ell, lip_hess, gap)
    else:
        if chi is None:
            raise InvalidArgumentError("practical mode requires χ")
        if not chi > constants.CHI_FLOOR:
            raise InvalidArgumentError(f"χ > 1/4 violated (χ={chi})")
        chi_floor = chi

    sqrt_rho_eps = math.sqrt(lip_hess * epsilon)
    horizon, snapped = integral_horizon(ell * chi_floor / sqrt_rho_eps)
    chi = chi_floor if snapped else horizon * sqrt_rho_eps / ell

    eta = 1.0 / ell
    radius = epsilon / (400 * chi ** 3)
    score_drop = epsilon ** 1.5 / (50 * chi ** 3 * math.sqrt(lip_hess))
    locality = math.sqrt(epsilon / lip_hess) / (4 * chi)
    formula_budget = 8 * max(horizon / 3, gap * horizon / score_drop, gap / (eta * epsilon ** 2))

    if budget is not None:
        if int(budget) != budget or budget < 1:
            raise InvalidArgumentError(f"budget must be an integer >= 1, got {budget}")
        budget = int(budget)
    if not math.isfinite(formula_budget) or formula_budget >= constants.MAX_BUDGET:
        if budget is None:
            raise CapacityError(f"T = {formula_budget:.6e} does not fit a 64-bit counter (limit 2^63)")
        exact_budget = None
    else:
        exact_budget = math.ceil(formula_budget)

    if budget is not None and (exact_budget is None or budget < exact_budget):
        used_budget, capped = budget, True
    else:
        used_budget, capped = exact_budget, False

    params = PrgdParams(
        epsilon=epsilon,
        delta=delta,
        dim=int(dim),
        ell=ell,
        lip_grad=lip_grad,
        lip_hess=lip_hess,
        ball=ball,
        beta=beta,
        gap=gap,
        chi=chi,
        eta=eta,
        radius=radius,
        horizon=horizon,
        score_drop=score_drop,
        locality=locality,
        budget=used_budget,
        mode=mode,
        chi_floor=chi_floor,
        formula_budget=formula_budget,
        budget_capped=capped,
        terminate=terminate,
    )
    logger.debug(f"derived {mode} params: χ={chi} 𝒯={horizon} r={radius} ℱ={score_drop} T={used_budget}")
    return params


@dataclass(frozen=True)
class TraceEvent:
    t: int
    kind: str
    f: float
    grad_norm: Optional[float] = None
    tangent_norm: Optional[float] = None
    # detail for the lemma checks, not part of the CSV schema
    f_prev: Optional[float] = None
    f_start: Optional[float] = None
    alpha: Optional[float] = None
    step: Optional[int] = None
    displacement: Optional[float] = None

    def row(self):
        return [self.t, self.kind, self.f, self.grad_norm, self.tangent_norm]


@dataclass
class RunTrace:
    eta: float
    events: List[TraceEvent] = field(default_factory=list)
    # (t, x_t) for every iterate on the manifold
    iterates: List[Tuple[int, Point]] = field(default_factory=list)
    # (t, x_t) for every iterate with ‖grad f(x_t)‖ <= ε
    small_grad_points: List[Tuple[int, Point]] = field(default_factory=list)
    t: int = 0
    gradient_queries: int = 0
    final_point: Optional[Point] = None
    suspect: Optional[Point] = None

    @property
    def terminated_early(self):
        return self.suspect is not None

    def count(self, kind):
        return sum(1 for event in self.events if event.kind == kind)

    @property
    def n_manifold_steps(self):
        return self.count(constants.KIND_MANIFOLD_STEP)

    @property
    def n_perturbations(self):
        return self.count(constants.KIND_PERTURBATION)

    @property
    def last_small_grad_point(self):
        return self.small_grad_points[-1][1] if self.small_grad_points else None


def boundary_alpha(s: Tangent, g: Tangent, eta, ball) -> float:
    """α ∈ (0,1] with ‖s − αηg‖ = b: the larger root of
    α²η²‖g‖² − 2αη⟨s,g⟩ + ‖s‖² − b² = 0"""
    a2 = eta * eta * float(g.coords @ g.coords)
    a1 = -2.0 * eta * float(s.coords @ g.coords)
    a0 = float(s.coords @ s.coords) - ball * ball
    discriminant = a1 * a1 - 4.0 * a2 * a0
    if not (a2 > 0 and a0 < 0 and discriminant >= 0):
        raise InternalError(f"no boundary crossing: ‖s‖={s.norm}, η‖g‖={eta * g.norm}, b={ball}")

    # roots have opposite signs; pick the stable expression for the positive one
    root = math.sqrt(discriminant)
    if a1 >= 0:
        alpha = -2.0 * a0 / (a1 + root)
    else:
        alpha = (root - a1) / (2.0 * a2)

    if not alpha > 0 or alpha > 1.0 + 1e-9:
        raise InternalError(f"boundary step fraction α={alpha} outside (0, 1]")
    return min(alpha, 1.0)


def tangent_space_steps(p: Pullback, s0: Tangent, eta, ball, horizon, t=0, first_gradient=None):
    """Up to `horizon` gradient steps on the pullback from `s0`, stopping
    early with an α-truncated step if an iterate would leave the interior of
    B_{x,b}(0). Returns `(s_final, events)`; each event is one gradient query.

    `first_gradient` is ∇f̂_x(s0) when the caller already holds it."""
    if s0.norm > ball:
        raise InvalidArgumentError(f"start outside the ball: ‖s0‖={s0.norm} > b={ball}")
    events = []
    s = s0
    f_start = f_s = p.value(s0)
    for j in range(horizon):
        g = first_gradient if (j == 0 and first_gradient is not None) else p.gradient(s)
        grad_norm = g.norm
        if not math.isfinite(grad_norm):
            raise NumericalFailureError(f"non-finite pullback gradient at step {j}")

        candidate = s.coords - eta * g.coords
        alpha = 1.0
        kind = constants.KIND_TANGENT_STEP
        if np.linalg.norm(candidate) >= ball:
            kind = constants.KIND_BOUNDARY_TRUNCATION
            if s.norm >= ball:
                # already on the sphere of radius b and pointing outward
                alpha = 0.0
                candidate = s.coords
            else:
                alpha = boundary_alpha(s, g, eta, ball)
                candidate = s.coords - (alpha * eta) * g.coords

        s_next = p.tangent(candidate)
        f_next = p.value(s_next)
        events.append(TraceEvent(
            t=t,
            kind=kind,
            f=f_next,
            grad_norm=grad_norm,
            tangent_norm=s_next.norm,
            f_prev=f_s,
            f_start=f_start,
            alpha=alpha,
            step=j + 1,
            displacement=float(np.linalg.norm(s_next.coords - s0.coords)),
        ))
        logger.trace(f"t={t} j={j} f̂={f_next} ‖∇f̂‖={grad_norm} ‖s‖={s_next.norm}")
        s, f_s = s_next, f_next
        if kind == constants.KIND_BOUNDARY_TRUNCATION:
            logger.debug(f"t={t}: left the ball at step {j + 1}, truncated with α={alpha}")
            break
    return s, events


def _gradient_at(problem, x):
    g = problem.riemannian_gradient(x)
    if not math.isfinite(g.norm):
        raise NumericalFailureError(f"non-finite gradient at {x.coords}")
    return g


def prgd(problem, x0: Point, params: PrgdParams, rng) -> RunTrace:
    """Perturbed Riemannian gradient descent from x0. With `params.terminate` set, halts after a perturbation
    phase that fails to decrease f̂ by ℱ/2 and flags x_t as a suspected
    ε-second-order point (the final point of the trace)."""
    problem.check_point(x0)
    manifold = problem.manifold
    trace = RunTrace(eta=params.eta)
    x = x0
    t = 0
    logger.debug(f"prgd: T={params.budget} 𝒯={params.horizon} η={params.eta} r={params.radius} b={params.ball}")
    while t <= params.budget:
        trace.iterates.append((t, x))
        g = _gradient_at(problem, x)
        trace.gradient_queries += 1
        p = Pullback(problem, x)
        f_x = problem.value(x)

        if g.norm > params.epsilon:
            s, events = tangent_space_steps(p, manifold.zero(x), params.eta, params.ball, 1,
                                            t=t, first_gradient=g)
            step = events[0]
            x = manifold.retract(x, s)
            f_next = problem.value(x)
            trace.events.append(TraceEvent(
                t=t,
                kind=constants.KIND_MANIFOLD_STEP,
                f=f_next,
                grad_norm=step.grad_norm,
                tangent_norm=step.tangent_norm,
                f_prev=f_x,
                f_start=f_x,
                alpha=step.alpha,
                step=1,
                displacement=step.displacement,
            ))
            t += 1
        else:
            trace.small_grad_points.append((t, x))
            trace.events.append(TraceEvent(t=t, kind=constants.KIND_SMALL_GRAD_VISIT, f=f_x, grad_norm=g.norm))

            xi, rng = manifold.sample_ball(x, params.radius, rng)
            s0 = p.tangent(params.eta * xi.coords)
            f_s0 = p.value(s0)
            trace.events.append(TraceEvent(
                t=t,
                kind=constants.KIND_PERTURBATION,
                f=f_s0,
                tangent_norm=s0.norm,
                f_start=f_s0,
            ))
            s, events = tangent_space_steps(p, s0, params.eta, params.ball, params.horizon, t=t)
            trace.events.extend(events)
            trace.gradient_queries += len(events)

            drop = p.value(s) - p.value(p.zero())
            logger.debug(f"t={t}: perturbation phase of {len(events)} steps changed f̂ by {drop}")
            if params.terminate and drop > -params.score_drop / 2:
                logger.info(f"t={t}: decrease {drop} above -ℱ/2, returning suspected ε-second-order point")
                trace.suspect = x
                t += params.horizon
                break
            x = manifold.retract(x, s)
            t += params.horizon
    else:
        trace.iterates.append((t, x))

    trace.t = t
    trace.final_point = trace.suspect if trace.suspect is not None else x
    logger.debug(f"prgd finished: t={t} queries={trace.gradient_queries} "
                 f"perturbations={trace.n_perturbations} manifold steps={trace.n_manifold_steps}")
    return trace


def rgd(problem, x0: Point, eta, epsilon, max_iters) -> RunTrace:
    """Riemannian gradient descent x_{t+1} = Retr_{x_t}(−η grad f(x_t)) until
    ‖grad f‖ <= ε or `max_iters` steps"""
    if not eta > 0:
        raise InvalidArgumentError(f"eta must be positive, got {eta}")
    problem.check_point(x0)
    manifold = problem.manifold
    trace = RunTrace(eta=eta)
    x = x0
    t = 0
    while True:
        trace.iterates.append((t, x))
        g = _gradient_at(problem, x)
        trace.gradient_queries += 1
        f_x = problem.value(x)
        if g.norm <= epsilon:
            trace.small_grad_points.append((t, x))
            trace.events.append(TraceEvent(t=t, kind=constants.KIND_SMALL_GRAD_VISIT, f=f_x, grad_norm=g.norm))
            break
        if t >= max_iters:
            break
        step = manifold.project(x, -eta * g.coords)
        x = manifold.retract(x, step)
        trace.events.append(TraceEvent(
            t=t,
            kind=constants.KIND_MANIFOLD_STEP,
            f=problem.value(x),
            grad_norm=g.norm,
            tangent_norm=step.norm,
            f_prev=f_x,
            f_start=f_x,
            alpha=1.0,
            step=1,
            displacement=step.norm,
        ))
        t += 1
    trace.t = t
    trace.final_point = x
    logger.debug(f"rgd finished after {t} steps, ‖grad‖={g.norm}")
    return trace
