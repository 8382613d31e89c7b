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
from abc import ABC, abstractmethod
from dataclasses import dataclass
import pathlib

import numpy as np
import scipy.stats
from loguru import logger

from prgd import constants
from prgd import numerics
from prgd.errors import InvalidArgumentError, InvalidInputError
from prgd.manifold import get_manifold

COMMENT = "#"


@dataclass(frozen=True)
class Constants:
    """Regularity constants of a problem's pullbacks"""
    lip_grad: float
    lip_hess: float
    ball: float


class CostFunction(ABC):
    """A smooth cost f on a manifold, minimised by every algorithm here"""
    manifold_name = None

    @property
    def manifold(self):
        return get_manifold(self.manifold_name)

    @property
    @abstractmethod
    def dim(self):
        """Ambient dimension"""

    @abstractmethod
    def value(self, x):
        """f(x)"""

    @abstractmethod
    def euclidean_gradient(self, x):
        """Ambient gradient of a smooth extension of f"""

    @abstractmethod
    def euclidean_gradient_columns(self, ys):
        """`euclidean_gradient` at every column of `ys`, points as raw arrays"""

    @abstractmethod
    def constants(self):
        """`Constants` for this instance"""

    def riemannian_gradient(self, x):
        return self.manifold.project(x, self.euclidean_gradient(x))

    def check_point(self, x):
        if x.manifold != self.manifold_name:
            raise InvalidArgumentError(f"point lives on {x.manifold}, problem is defined on {self.manifold_name}")
        if x.dim != self.dim:
            raise InvalidArgumentError(f"point has dimension {x.dim}, problem has {self.dim}")


class PcaProblem(CostFunction):
    """Dominant eigenvector of symmetric A as minimisation of f(x) = −½xᵀAx
    on the unit sphere"""
    manifold_name = constants.SPHERE

    def __init__(self, a):
        self.a = numerics.as_sym_matrix(a)
        self.norm_a = numerics.operator_norm(self.a)

    @property
    def dim(self):
        return self.a.shape[0]

    def value(self, x):
        self.check_point(x)
        return -0.5 * float(x.coords @ (self.a @ x.coords))

    def euclidean_gradient(self, x):
        self.check_point(x)
        return -(self.a @ x.coords)

    def euclidean_gradient_columns(self, ys):
        return -(self.a @ ys)

    def constants(self):
        return pca_constants(self)

    def eigenpairs(self):
        """Eigenvalues in decreasing order and matching unit eigenvectors as
        columns"""
        eigenvalues, eigenvectors = np.linalg.eigh(self.a)
        return eigenvalues[::-1], eigenvectors[:, ::-1]

    def optimal_value(self):
        """f* = −½λ_max(A)"""
        return -0.5 * float(self.eigenpairs()[0][0])


def pca_constants(problem):
    """L = 5/2‖A‖ and ρ = 9‖A‖ with both balls unbounded"""
    return Constants(
        lip_grad=2.5 * problem.norm_a,
        lip_hess=9.0 * problem.norm_a,
        ball=constants.UNBOUNDED,
    )


class Quadratic(CostFunction):
    """f(x) = ½xᵀHx on ℝ^n"""
    manifold_name = constants.EUCLIDEAN

    def __init__(self, h):
        self.h = numerics.as_sym_matrix(h)
        self.norm_h = numerics.operator_norm(self.h)

    @property
    def dim(self):
        return self.h.shape[0]

    def value(self, x):
        self.check_point(x)
        return 0.5 * float(x.coords @ (self.h @ x.coords))

    def euclidean_gradient(self, x):
        self.check_point(x)
        return self.h @ x.coords

    def euclidean_gradient_columns(self, ys):
        return self.h @ ys

    def constants(self):
        # constant Hessian: any ρ >= 0 works
        return Constants(lip_grad=self.norm_h, lip_hess=0.0, ball=constants.UNBOUNDED)

    def critical_point(self):
        return self.manifold.point(np.zeros(self.dim))


class QuadraticSaddle(Quadratic):
    """Quadratic with H indefinite: x = 0 is a strict saddle"""

    def __init__(self, h):
        super().__init__(h)
        min_eigenvalue, _ = numerics.min_eigpair(self.h)
        if min_eigenvalue >= 0:
            raise InvalidArgumentError(f"quadratic saddle needs a negative eigenvalue, smallest is {min_eigenvalue}")

    def saddle_point(self):
        return self.critical_point()


def default_saddle(dim, curvature=constants.SADDLE_CURVATURE):
    """diag(curvature, 1, ..., 1)"""
    diagonal = np.ones(dim)
    diagonal[0] = curvature
    return QuadraticSaddle(np.diag(diagonal))


@dataclass(frozen=True)
class SyntheticPca:
    problem: PcaProblem
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dominant(self):
        return self.problem.manifold.point(self.eigenvectors[:, 0])

    @property
    def saddle(self):
        return self.problem.manifold.point(self.eigenvectors[:, 1])


def synthetic_spectrum(dim):
    """λ_1 = 2, λ_2 = 1, λ_k = 1 − (k−2)/d for k >= 3"""
    eigenvalues = np.array(
        [constants.SYNTHETIC_TOP_EIGENVALUE, constants.SYNTHETIC_SECOND_EIGENVALUE]
        + [1.0 - (k - 2) / dim for k in range(3, dim + 1)]
    )
    return eigenvalues[:dim]


def synthetic_pca(dim, rng):
    """Synthetic spectrum conjugated by a seeded random rotation; returns
    `(SyntheticPca, next_rng)`"""
    if dim < 2:
        raise InvalidArgumentError(f"synthetic PCA needs dim >= 2, got {dim}")
    eigenvalues = synthetic_spectrum(dim)
    rotation, rng = rng.draw(lambda g: scipy.stats.ortho_group.rvs(dim=dim, random_state=g))
    a = rotation @ np.diag(eigenvalues) @ rotation.T
    problem = PcaProblem(0.5 * (a + a.T))
    logger.debug(f"synthetic PCA d={dim} ‖A‖={problem.norm_a}")
    return SyntheticPca(problem, eigenvalues, rotation), rng


def _data_lines(path):
    """(line number, fields) for every non-blank, non-comment line"""
    with open(path, "r") as f:
        for number, line in enumerate(f, start=1):
            content = line.split(COMMENT, 1)[0].strip()
            if content:
                yield number, content.split()


def _parse_floats(number, fields):
    try:
        values = [float(field) for field in fields]
    except ValueError as e:
        raise InvalidInputError(f"line {number}: {e}")
    if not all(np.isfinite(values)):
        raise InvalidInputError(f"line {number}: non-finite value")
    return values


def _parse_header(lines, path):
    try:
        number, fields = next(lines)
    except StopIteration:
        raise InvalidInputError(f"{path}: empty file")
    if len(fields) != 1:
        raise InvalidInputError(f"line {number}: expected the dimension on its own, got {fields}")
    try:
        n = int(fields[0])
    except ValueError:
        raise InvalidInputError(f"line {number}: dimension must be an integer, got {fields[0]}")
    if n < 1:
        raise InvalidInputError(f"line {number}: dimension must be >= 1, got {n}")
    return n


def load_matrix(path):
    """Read a symmetric matrix: first line n, then n rows of n floats.
    Asymmetry up to 1e-9 is averaged away, more is rejected."""
    lines = _data_lines(path)
    n = _parse_header(lines, path)
    rows = []
    row_lines = []
    for number, fields in lines:
        if len(rows) == n:
            raise InvalidInputError(f"line {number}: more than {n} rows")
        if len(fields) != n:
            raise InvalidInputError(f"line {number}: expected {n} values, got {len(fields)}")
        rows.append(_parse_floats(number, fields))
        row_lines.append(number)
    if len(rows) != n:
        raise InvalidInputError(f"{path}: expected {n} rows, got {len(rows)}")

    matrix = np.array(rows)
    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetric = np.abs(matrix - matrix.T) > constants.LOAD_SYMMETRY_TOLERANCE * scale
    if np.any(asymmetric):
        row = int(np.argwhere(asymmetric)[0][0])
        raise InvalidInputError(f"line {row_lines[row]}: matrix is not symmetric")

    logger.debug(f"loaded {n}x{n} matrix from {path}")
    return numerics.as_sym_matrix(0.5 * (matrix + matrix.T))


def save_matrix(path, m):
    """Write `m` in the format read by `load_matrix`; floats are written with
    repr so a round trip is exact"""
    matrix = np.asarray(m, dtype=np.float64)
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(f"{matrix.shape[0]}\n")
        for row in matrix:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_vector(path):
    """Read a vector: first line n, then n floats (on any number of lines)"""
    lines = _data_lines(path)
    n = _parse_header(lines, path)
    values = []
    for number, fields in lines:
        values.extend(_parse_floats(number, fields))
    if len(values) != n:
        raise InvalidInputError(f"{path}: expected {n} values, got {len(values)}")
    return numerics.as_vector(values)


def save_vector(path, v):
    vector = np.asarray(v, dtype=np.float64)
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(f"{vector.size}\n")
        f.write(" ".join(repr(float(x)) for x in vector) + "\n")
