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
"""Dense vector/matrix primitives, finite difference oracles and the
deterministic random number streams every other module draws from"""
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from prgd import constants
from prgd.errors import InvalidArgumentError, NumericalFailureError

# dense decompositions only, see DESIGN.md
MAX_EIGEN_DIM = 2000
UINT64_LIMIT = 2 ** 64


def as_vector(entries):
    """Copy `entries` into a read-only float64 vector, rejecting NaN/Inf"""
    vector = np.array(entries, dtype=np.float64)
    if vector.ndim != 1 or vector.size < 1:
        raise InvalidArgumentError(f"vector must be one dimensional with length >= 1, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise NumericalFailureError("vector entries must be finite")
    vector.flags.writeable = False
    return vector


def as_sym_matrix(entries, tolerance=constants.SYMMETRY_TOLERANCE):
    """Copy `entries` into a read-only symmetric float64 matrix.

    Asymmetry up to `tolerance` (relative to the largest entry) is removed by
    averaging with the transpose, anything larger is rejected."""
    matrix = np.array(entries, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise InvalidArgumentError(f"matrix must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericalFailureError("matrix entries must be finite")

    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    if asymmetry > tolerance * scale:
        raise InvalidArgumentError(f"matrix is not symmetric (max |m - mᵀ| = {asymmetry:.3e})")

    symmetric = 0.5 * (matrix + matrix.T)
    symmetric.flags.writeable = False
    return symmetric


def check_finite(value, what):
    """Raise NumericalFailureError unless every entry of `value` is finite"""
    if not np.all(np.isfinite(value)):
        raise NumericalFailureError(f"non-finite {what}: {value}")
    return value


def min_eigpair(m) -> Tuple[float, np.ndarray]:
    """Algebraically smallest eigenvalue of symmetric `m` and a unit
    eigenvector.

    The eigenvector's sign is fixed so its largest-magnitude entry is
    positive, which keeps results bit-stable across calls. The residual
    ‖mv − λv‖ is checked against the Frobenius norm of `m`."""
    matrix = as_sym_matrix(m)
    dim = matrix.shape[0]
    if dim > MAX_EIGEN_DIM:
        raise InvalidArgumentError(f"dense eigensolver supports d <= {MAX_EIGEN_DIM}, got {dim}")

    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(matrix, subset_by_index=[0, 0])
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(f"eigensolver failed: {e}")

    eigenvalue = float(eigenvalues[0])
    eigenvector = eigenvectors[:, 0]
    eigenvector = eigenvector / np.linalg.norm(eigenvector)
    if eigenvector[np.argmax(np.abs(eigenvector))] < 0:
        eigenvector = -eigenvector

    residual = float(np.linalg.norm(matrix @ eigenvector - eigenvalue * eigenvector))
    scale = float(np.linalg.norm(matrix))
    if residual > constants.EIGEN_RESIDUAL_TOLERANCE * scale:
        raise NumericalFailureError(f"eigensolver did not converge: residual {residual:.3e} (‖m‖ = {scale:.3e})")

    logger.trace(f"min eigenpair d={dim} λ={eigenvalue} residual={residual:.3e}")
    return eigenvalue, as_vector(eigenvector)


def operator_norm(m) -> float:
    """Largest absolute eigenvalue of symmetric `m`"""
    matrix = as_sym_matrix(m)
    try:
        eigenvalues = scipy.linalg.eigvalsh(matrix)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(f"eigensolver failed: {e}")
    return float(np.max(np.abs(eigenvalues)))


def _check_step(h):
    if not h > 0:
        raise InvalidArgumentError(f"finite difference step must be positive, got {h}")


def _evaluate(phi, point):
    value = float(phi(point))
    if not np.isfinite(value):
        raise NumericalFailureError(f"non-finite function value {value} at {point}")
    return value


def fd_gradient(phi: Callable, s, h=constants.FD_GRADIENT_STEP) -> np.ndarray:
    """Central difference gradient of scalar `phi` at `s`"""
    _check_step(h)
    s = as_vector(s)
    gradient = np.zeros(s.size)
    for i in range(s.size):
        step = np.zeros(s.size)
        step[i] = h
        gradient[i] = (_evaluate(phi, s + step) - _evaluate(phi, s - step)) / (2 * h)
    return as_vector(gradient)


def fd_hessian(phi: Callable, s, h=constants.FD_HESSIAN_STEP) -> np.ndarray:
    """Central second differences of scalar `phi` at `s`, symmetrised"""
    _check_step(h)
    s = as_vector(s)
    dim = s.size
    basis = np.eye(dim) * h
    centre = _evaluate(phi, s)
    hessian = np.zeros((dim, dim))
    for i in range(dim):
        hessian[i, i] = (_evaluate(phi, s + basis[i]) - 2 * centre + _evaluate(phi, s - basis[i])) / (h * h)
        for j in range(i + 1, dim):
            hessian[i, j] = (
                _evaluate(phi, s + basis[i] + basis[j])
                - _evaluate(phi, s + basis[i] - basis[j])
                - _evaluate(phi, s - basis[i] + basis[j])
                + _evaluate(phi, s - basis[i] - basis[j])
            ) / (4 * h * h)
            hessian[j, i] = hessian[i, j]
    return as_sym_matrix(0.5 * (hessian + hessian.T))


def fd_jacobian(fn: Callable, s, h=constants.FD_HESSIAN_STEP) -> np.ndarray:
    """Central difference Jacobian of vector valued `fn` at `s`; column i
    holds the derivative along coordinate i.

    `fn` is called once, on a k × 2k matrix holding the shifted points as
    columns, and returns the values as the columns of a p × 2k matrix."""
    _check_step(h)
    s = as_vector(s)
    steps = h * np.eye(s.size)
    values = np.asarray(fn(np.hstack([s[:, None] + steps, s[:, None] - steps])))
    jacobian = (values[:, :s.size] - values[:, s.size:]) / (2 * h)
    return check_finite(jacobian, "jacobian")


@dataclass(frozen=True)
class RngStream:
    """Counter based random stream.

    A stream is a value: `draw` hands a numpy Generator to a callback and
    returns the callback's result together with the advanced stream, so the
    same (seed, stream, counter) always reproduces the same draws. Streams
    with different ids never overlap (Philox keys differ)."""
    seed: int
    stream: int = 0
    counter: Tuple[int, int, int, int] = (0, 0, 0, 0)

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not 0 <= value < UINT64_LIMIT:
                raise InvalidArgumentError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def _bit_generator(self):
        return np.random.Philox(
            key=np.array([self.seed, self.stream], dtype=np.uint64),
            counter=np.array(self.counter, dtype=np.uint64),
        )

    def draw(self, fn):
        """Call `fn(generator)` and return `(result, next_stream)`"""
        bit_generator = self._bit_generator()
        result = fn(np.random.Generator(bit_generator))
        counter = tuple(int(c) for c in bit_generator.state["state"]["counter"])
        return result, RngStream(self.seed, self.stream, counter)

    def spawn(self, stream):
        """Independent stream sharing this seed"""
        return RngStream(self.seed, stream)


def sample_unit_ball(d, rng: RngStream, size=None):
    """Uniform draw(s) from the closed unit ball of ℝ^d.

    Returns `(sample, next_rng)`; `sample` is a vector, or a `(size, d)`
    array when `size` is given."""
    if d < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {d}")
    count = 1 if size is None else size

    def ball(generator):
        directions = generator.standard_normal((count, d))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        radii = generator.uniform(0.0, 1.0, count) ** (1.0 / d)
        return directions * radii[:, None]

    samples, rng = rng.draw(ball)
    if size is None:
        return as_vector(samples[0]), rng
    return samples, rng
