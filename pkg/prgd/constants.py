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
import math

RUN_VERB = "run"
STUDY_VERB = "study"
PARAMS_VERB = "params"
VERIFY_VERB = "verify"

# manifolds
EUCLIDEAN = "euclidean"
SPHERE = "sphere"

# problems
PROBLEM_PCA = "pca"
PROBLEM_QUADRATIC_SADDLE = "quadratic_saddle"
PROBLEMS = (PROBLEM_PCA, PROBLEM_QUADRATIC_SADDLE)

# parameter modes
MODE_THEORETICAL = "theoretical"
MODE_PRACTICAL = "practical"
MODES = (MODE_THEORETICAL, MODE_PRACTICAL)

# starting points
START_RANDOM = "random"
START_SADDLE = "saddle"
START_FILE = "file"
STARTS = (START_RANDOM, START_SADDLE, START_FILE)

# trace event kinds, in CSV order of appearance
KIND_MANIFOLD_STEP = "manifold_step"
KIND_PERTURBATION = "perturbation"
KIND_TANGENT_STEP = "tangent_step"
KIND_BOUNDARY_TRUNCATION = "boundary_truncation"
KIND_SMALL_GRAD_VISIT = "small_grad_visit"
KINDS = (
    KIND_MANIFOLD_STEP,
    KIND_PERTURBATION,
    KIND_TANGENT_STEP,
    KIND_BOUNDARY_TRUNCATION,
    KIND_SMALL_GRAD_VISIT,
)

TRACE_COLUMNS = ["t", "kind", "f", "grad_norm", "tangent_norm"]
TRIAL_COLUMNS = [
    "trial",
    "seed",
    "escaped",
    "final_f",
    "final_grad_norm",
    "min_eig",
    "alignment",
    "gradient_queries",
]

# the b = +inf sentinel
UNBOUNDED = math.inf

# finite difference steps
FD_GRADIENT_STEP = 1e-5
FD_HESSIAN_STEP = 1e-4

# tolerances
SYMMETRY_TOLERANCE = 1e-12
LOAD_SYMMETRY_TOLERANCE = 1e-9
SPHERE_UNIT_TOLERANCE = 1e-12
TANGENT_TOLERANCE = 1e-10
EIGEN_RESIDUAL_TOLERANCE = 1e-9
LEMMA_SLACK = 1e-9

# chi must be strictly larger than this
CHI_FLOOR = 0.25
CHI_FLOOR_MARGIN = 1e-9

# numerator constant of the theoretical χ bound
CHI_LOG_CONSTANT = 2.0 ** 31

# integers beyond this are not representable as a 64-bit counter
MAX_BUDGET = 2 ** 63

# relative distance from an integer at which horizon rounding snaps
HORIZON_SNAP = 1e-9

# CLI runs stop after this many horizons unless --budget is given
DEFAULT_BUDGET_HORIZONS = 10

# quadratic saddle built by the CLI: diag(SADDLE_CURVATURE, 1, ..., 1)
SADDLE_CURVATURE = -0.5

# synthetic PCA spectrum: lambda_1 = 2, lambda_2 = 1, lambda_k = 1 - (k-2)/d
SYNTHETIC_TOP_EIGENVALUE = 2.0
SYNTHETIC_SECOND_EIGENVALUE = 1.0

# stream ids reserved for drawing problem data, trial streams count from 0
STREAM_PROBLEM = 2 ** 32
STREAM_START = 2 ** 32 + 1
STREAM_VERIFY = 2 ** 32 + 2

# alignment with the dominant eigenvector counted as an escape in studies
ESCAPE_ALIGNMENT = 0.99

DEFAULT_OUTPUT_DIR = "out"
TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"
TRIALS_FILE = "trials.csv"
PARAMS_FILE = "params.json"
VERIFY_FILE = "verify.json"

# verification suite sizes used by `prgd verify` unless --samples is given
DEFAULT_VERIFY_SAMPLES = 1000
VERIFY_LIPSCHITZ_BALL = 5.0

# Monte-Carlo samples with ‖s‖ below this are skipped
MIN_SAMPLE_NORM = 1e-8

# experiment defaults, overridden by the YAML file and then by CLI flags
DEFAULTS = {
    "problem": PROBLEM_QUADRATIC_SADDLE,
    "dim": 2,
    "matrix": None,
    "x0": None,
    "eps": 0.01,
    "delta": 0.1,
    "mode": MODE_PRACTICAL,
    "chi": None,
    "ell": None,
    "rho": None,
    "ball": UNBOUNDED,
    "gap": None,
    "budget": None,
    "seed": 0,
    "trials": 1,
    "start": START_SADDLE,
    "out": None,
    "samples": DEFAULT_VERIFY_SAMPLES,
    "rgd": False,
    "terminate": None,
}

# the quadratic saddle has a constant Hessian and no minimum: runs use these
# unless --rho/--gap are given
NOMINAL_RHO = 1.0
NOMINAL_GAP = 1.0

CONFIG_FILE = "config.yaml"
VERIFY_REPORT_TEMPLATE = "verify_report.txt"
SYSTEM_INFO_TEMPLATE = "system_info.txt"

# verification suite thresholds
PULLBACK_CHECK_BALL = 0.5
PULLBACK_GRADIENT_TOLERANCE = 1e-6
RETRACTION_ACCELERATION_TOLERANCE = 1e-6
# relative finite difference noise allowed on Hessian Lipschitz estimates
HESSIAN_FD_TOLERANCE = 1e-4
# the lemma check trace in `prgd verify` covers this many horizons
VERIFY_TRACE_HORIZONS = 2
