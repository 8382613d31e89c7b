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
"""The pullback f̂_x = f ∘ Retr_x, a function on the linear space T_x"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from prgd import constants
from prgd import numerics
from prgd.errors import InvalidArgumentError
from prgd.manifold import Point, Tangent
from prgd.problems import CostFunction


@dataclass(frozen=True)
class Pullback:
    problem: CostFunction
    base: Point

    def __post_init__(self):
        self.problem.check_point(self.base)

    @property
    def manifold(self):
        return self.problem.manifold

    @cached_property
    def basis(self):
        """Orthonormal basis of T_x, fixed for the lifetime of the pullback"""
        return self.manifold.tangent_basis(self.base)

    def _check(self, s):
        if not s.base.same(self.base):
            raise InvalidArgumentError("tangent vector is not based at the pullback's base point")

    def tangent(self, coords):
        """Tangent at the base from ambient `coords`, re-projected"""
        return self.manifold.project(self.base, coords)

    def zero(self):
        return self.manifold.zero(self.base)

    def value(self, s: Tangent) -> float:
        """f(Retr_x(s))"""
        self._check(s)
        return self.problem.value(self.manifold.retract(self.base, s))

    def gradient(self, s: Tangent) -> Tangent:
        """∇f̂_x(s) = T*_{x,s} grad f(Retr_x(s))"""
        self._check(s)
        y = self.manifold.retract(self.base, s)
        return self.manifold.retraction_adjoint(self.base, s, self.problem.riemannian_gradient(y))

    def intrinsic_value(self, c):
        return self.value(self.manifold.from_intrinsic(self.base, c, self.basis))

    def intrinsic_gradient(self, c):
        s = self.manifold.from_intrinsic(self.base, c, self.basis)
        return self.basis.T @ self.gradient(s).coords

    def gradient_columns(self, ss):
        """∇f̂_x at every column of `ss`, tangent vectors at the base as raw
        ambient arrays; skips the per-vector validation of `gradient`"""
        ys = self.manifold.retract_columns(self.base, ss)
        ws = self.manifold.project_columns(ys, self.problem.euclidean_gradient_columns(ys))
        return self.manifold.adjoint_columns(self.base, ss, ws)

    def hessian_at_zero(self, h=constants.FD_HESSIAN_STEP):
        """∇²f̂_x(0) in the intrinsic basis, from second differences of values"""
        return numerics.fd_hessian(self.intrinsic_value, np.zeros(self.basis.shape[1]), h)

    def hessian_at(self, s: Tangent, h=constants.FD_HESSIAN_STEP):
        """∇²f̂_x(s) in the intrinsic basis, from central differences of the
        pullback gradient"""
        self._check(s)

        def shifted_gradients(cs):
            return self.basis.T @ self.gradient_columns(s.coords[:, None] + self.basis @ cs)

        jacobian = numerics.fd_jacobian(shifted_gradients, np.zeros(self.basis.shape[1]), h)
        return numerics.as_sym_matrix(0.5 * (jacobian + jacobian.T), tolerance=np.inf)
