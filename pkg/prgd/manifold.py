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
"""Points, tangent vectors and the two shipped manifolds: ℝ^n with
Retr_x(s) = x + s and the unit sphere S^{n-1} with the metric projection
retraction Retr_x(s) = (x + s)/‖x + s‖. Both are Riemannian submanifolds of
ℝ^n so everything is stored in ambient coordinates."""
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from loguru import logger

from prgd import constants
from prgd import numerics
from prgd.errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class Point:
    manifold: str
    coords: np.ndarray

    def __post_init__(self):
        if self.manifold not in MANIFOLDS:
            raise InvalidArgumentError(f"unknown manifold: {self.manifold}")
        coords = numerics.as_vector(self.coords)
        if self.manifold == constants.SPHERE:
            drift = abs(float(np.linalg.norm(coords)) - 1.0)
            if drift > constants.SPHERE_UNIT_TOLERANCE:
                raise InvalidArgumentError(f"sphere point must have unit norm (|‖x‖ - 1| = {drift:.3e})")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self):
        return self.coords.size

    def same(self, other):
        return self is other or (
            self.manifold == other.manifold and np.array_equal(self.coords, other.coords)
        )


@dataclass(frozen=True, eq=False)
class Tangent:
    base: Point
    coords: np.ndarray

    def __post_init__(self):
        coords = numerics.as_vector(self.coords)
        if coords.size != self.base.dim:
            raise InvalidArgumentError(f"tangent has dimension {coords.size}, base point has {self.base.dim}")
        if self.base.manifold == constants.SPHERE:
            normal = abs(float(self.base.coords @ coords))
            if normal > constants.TANGENT_TOLERANCE * (1.0 + float(np.linalg.norm(coords))):
                raise InvalidArgumentError(f"not tangent to the sphere at base (|xᵀs| = {normal:.3e})")
        object.__setattr__(self, "coords", coords)

    @property
    def norm(self):
        return float(np.linalg.norm(self.coords))


class Manifold(ABC):
    """Riemannian submanifold of ℝ^n with a retraction"""
    name = None

    def point(self, coords):
        return Point(self.name, coords)

    def zero(self, x):
        return Tangent(x, np.zeros(x.dim))

    def inner(self, u, v):
        """Induced metric: the ambient dot product"""
        if not u.base.same(v.base):
            raise InvalidArgumentError("inner product of tangents at different base points")
        return float(u.coords @ v.coords)

    def norm(self, u):
        return float(np.sqrt(self.inner(u, u)))

    @abstractmethod
    def project(self, x, v):
        """Orthogonal projection of ambient `v` onto T_x"""

    @abstractmethod
    def retract(self, x, s):
        """Retr_x(s)"""

    @abstractmethod
    def retraction_adjoint(self, x, s, w):
        """T*_{x,s}[w] for w tangent at Retr_x(s), returned as a tangent at x"""

    @abstractmethod
    def project_columns(self, ys, vs):
        """Column j of ambient `vs` projected onto T_{y_j}, y_j column j of
        `ys`; raw arrays, no validation"""

    @abstractmethod
    def retract_columns(self, x, ss):
        """Retr_x applied to every column of `ss`, raw arrays"""

    @abstractmethod
    def adjoint_columns(self, x, ss, ws):
        """T*_{x,s_j}[w_j] for the columns of `ss` and `ws`, raw arrays"""

    @abstractmethod
    def tangent_basis(self, x):
        """Orthonormal basis of T_x as the columns of an n × k matrix"""

    @abstractmethod
    def random_point(self, rng, dim):
        """Random point of the manifold in ℝ^dim; returns `(point, next_rng)`"""

    def intrinsic_dim(self, x):
        return self.tangent_basis(x).shape[1]

    def from_intrinsic(self, x, c, basis=None):
        basis = self.tangent_basis(x) if basis is None else basis
        return self.project(x, basis @ np.asarray(c, dtype=np.float64))

    def to_intrinsic(self, s, basis=None):
        basis = self.tangent_basis(s.base) if basis is None else basis
        return basis.T @ s.coords

    def _check_at_retraction(self, x, s, w):
        if not s.base.same(x):
            raise InvalidArgumentError("retraction adjoint: s is not based at x")
        y = self.retract(x, s)
        if not np.allclose(w.base.coords, y.coords, rtol=0.0, atol=constants.SPHERE_UNIT_TOLERANCE):
            raise InvalidArgumentError("retraction adjoint: w is not based at Retr_x(s)")

    def retraction_differential(self, x, s, sdot, h=1e-6):
        """Finite difference T_{x,s}[sdot] = d/dt Retr_x(s + t·sdot) at t=0,
        in ambient coordinates; only the adjoint has a closed form"""
        forward = self.retract(x, Tangent(x, s.coords + h * sdot.coords))
        backward = self.retract(x, Tangent(x, s.coords - h * sdot.coords))
        return (forward.coords - backward.coords) / (2 * h)

    def sample_ball(self, x, radius, rng):
        """Uniform draw from B_{x,radius}(0) ⊂ T_x; returns `(tangent, next_rng)`"""
        if radius < 0:
            raise InvalidArgumentError(f"radius must be >= 0, got {radius}")
        basis = self.tangent_basis(x)
        if radius == 0 or basis.shape[1] == 0:
            return self.zero(x), rng
        c, rng = numerics.sample_unit_ball(basis.shape[1], rng)
        return self.from_intrinsic(x, radius * c, basis), rng

    def check_second_order(self, x, s, h=constants.FD_HESSIAN_STEP):
        """Finite difference estimate of ‖γ''(0)‖ for γ(t) = Retr_x(t·s),
        the intrinsic acceleration bounded by β"""
        if abs(s.norm - 1.0) > constants.TANGENT_TOLERANCE:
            raise InvalidArgumentError(f"direction must have unit norm, got {s.norm}")
        forward = self.retract(x, Tangent(x, h * s.coords))
        backward = self.retract(x, Tangent(x, -h * s.coords))
        centre = self.retract(x, self.zero(x))
        acceleration = (forward.coords - 2 * centre.coords + backward.coords) / (h * h)
        return self.project(centre, acceleration).norm


class Euclidean(Manifold):
    name = constants.EUCLIDEAN

    def project(self, x, v):
        return Tangent(x, v)

    def retract(self, x, s):
        return Point(self.name, x.coords + s.coords)

    def retraction_adjoint(self, x, s, w):
        self._check_at_retraction(x, s, w)
        return Tangent(x, w.coords)

    def project_columns(self, ys, vs):
        return vs

    def retract_columns(self, x, ss):
        return x.coords[:, None] + ss

    def adjoint_columns(self, x, ss, ws):
        return ws

    def tangent_basis(self, x):
        return np.eye(x.dim)

    def sample_ball(self, x, radius, rng):
        # the tangent space is ℝ^n itself, skip the basis
        if radius < 0:
            raise InvalidArgumentError(f"radius must be >= 0, got {radius}")
        if radius == 0:
            return self.zero(x), rng
        c, rng = numerics.sample_unit_ball(x.dim, rng)
        return Tangent(x, radius * c), rng

    def random_point(self, rng, dim):
        coords, rng = rng.draw(lambda g: g.standard_normal(dim))
        return self.point(coords), rng

    def check_second_order(self, x, s, h=constants.FD_HESSIAN_STEP):
        # t ↦ x + t·s is a straight line
        if abs(s.norm - 1.0) > constants.TANGENT_TOLERANCE:
            raise InvalidArgumentError(f"direction must have unit norm, got {s.norm}")
        return 0.0


class Sphere(Manifold):
    name = constants.SPHERE

    def project(self, x, v):
        v = np.asarray(v, dtype=np.float64)
        return Tangent(x, v - (x.coords @ v) * x.coords)

    def retract(self, x, s):
        v = x.coords + s.coords
        return Point(self.name, v / np.linalg.norm(v))

    def retraction_adjoint(self, x, s, w):
        # T_{x,s}[ṡ] = Proj_y(ṡ)/‖x+s‖ and projectors are symmetric
        self._check_at_retraction(x, s, w)
        scale = float(np.linalg.norm(x.coords + s.coords))
        return self.project(x, w.coords / scale)

    def project_columns(self, ys, vs):
        return vs - ys * np.sum(ys * vs, axis=0)

    def retract_columns(self, x, ss):
        vs = x.coords[:, None] + ss
        return vs / np.linalg.norm(vs, axis=0)

    def adjoint_columns(self, x, ss, ws):
        scales = np.linalg.norm(x.coords[:, None] + ss, axis=0)
        return self.project_columns(x.coords[:, None], ws / scales)

    def tangent_basis(self, x):
        # Householder QR of [x | I]: the first column is ±x, the rest span x^⊥
        q, _ = np.linalg.qr(np.column_stack([x.coords, np.eye(x.dim)]))
        return q[:, 1:x.dim]

    def random_point(self, rng, dim):
        coords, rng = rng.draw(lambda g: g.standard_normal(dim))
        norm = np.linalg.norm(coords)
        logger.trace(f"random sphere point from gaussian of norm {norm}")
        return self.point(coords / norm), rng


MANIFOLDS = {
    constants.EUCLIDEAN: Euclidean(),
    constants.SPHERE: Sphere(),
}


def get_manifold(name):
    try:
        return MANIFOLDS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown manifold: {name}")


def manifold_of(x):
    return get_manifold(x.manifold)
