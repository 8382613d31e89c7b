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
from dataclasses import dataclass, asdict, replace
import math
import os
import platform
from typing import Optional

import numpy as np
import scipy
from loguru import logger

from prgd import algorithm
from prgd import constants
from prgd import errors
from prgd import problems
from prgd import util
from prgd import verify
from prgd import version
from prgd.errors import ConfigError, InvalidArgumentError
from prgd.manifold import Point
from prgd.numerics import RngStream

debug = False

OPTION_TYPES = {
    "problem": str,
    "dim": int,
    "matrix": str,
    "x0": str,
    "eps": float,
    "delta": float,
    "mode": str,
    "chi": float,
    "ell": float,
    "rho": float,
    "ball": float,
    "gap": float,
    "budget": int,
    "seed": int,
    "trials": int,
    "start": str,
    "out": str,
    "samples": int,
    "rgd": bool,
    "terminate": bool,
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    dim: int
    matrix: Optional[str]
    x0: Optional[str]
    eps: float
    delta: float
    mode: str
    chi: Optional[float]
    ell: Optional[float]
    rho: Optional[float]
    ball: float
    gap: Optional[float]
    budget: Optional[int]
    seed: int
    trials: int
    start: str
    out: Optional[str]
    samples: int
    rgd: bool
    # None: on for studies, off otherwise
    terminate: Optional[bool]

    def __post_init__(self):
        if self.problem not in constants.PROBLEMS:
            raise ConfigError(f"unknown problem: {self.problem} (expected one of {constants.PROBLEMS})")
        if self.mode not in constants.MODES:
            raise ConfigError(f"unknown mode: {self.mode} (expected one of {constants.MODES})")
        if self.start not in constants.STARTS:
            raise ConfigError(f"unknown start: {self.start} (expected one of {constants.STARTS})")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.mode == constants.MODE_PRACTICAL and self.chi is None:
            raise ConfigError("practical mode requires --chi")
        if self.start == constants.START_FILE:
            if self.x0 is None:
                raise ConfigError("start=file requires --x0")
            if self.problem == constants.PROBLEM_PCA and self.matrix is None:
                raise ConfigError("matrix required: pca with start=file needs --matrix")

    @property
    def output_dir(self):
        return self.out or constants.DEFAULT_OUTPUT_DIR

    def terminate_for(self, verb):
        return verb == constants.STUDY_VERB if self.terminate is None else self.terminate


def _coerce(key, value):
    if value is None:
        return None
    wanted = OPTION_TYPES[key]
    try:
        if wanted is bool:
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes", "on")
            return bool(value)
        if wanted is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"not an integer: {value}")
            return int(value)
        return wanted(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for {key}: {value!r} ({e})")


def build_config(arguments=None, yaml_data=None):
    """Merge built-in defaults < YAML file < command line flags into an
    `ExperimentConfig`"""
    data = constants.DEFAULTS.copy()

    if yaml_data:
        unknown = set(yaml_data) - set(data)
        if unknown:
            raise ConfigError(f"unknown options in config file: {sorted(unknown)}")
        data.update(yaml_data)

    for key in data:
        value = (arguments or {}).get(f"--{key}")
        if value is not None and value is not False:
            data[key] = value
    if (arguments or {}).get("--no-terminate"):
        data["terminate"] = False

    config = ExperimentConfig(**{k: _coerce(k, v) for k, v in data.items()})
    logger.debug(f"experiment config: {config}")
    return config


@dataclass(frozen=True)
class ProblemSetup:
    problem: problems.CostFunction
    # designated saddle and (for PCA) the dominant eigenvector
    saddle: Optional[Point] = None
    dominant: Optional[Point] = None


def _unit(manifold, v):
    v = np.asarray(v, dtype=np.float64)
    return manifold.point(v / np.linalg.norm(v))


def make_problem(config) -> ProblemSetup:
    if config.problem == constants.PROBLEM_QUADRATIC_SADDLE:
        if config.matrix:
            problem = problems.QuadraticSaddle(problems.load_matrix(config.matrix))
        else:
            problem = problems.default_saddle(config.dim)
        setup = ProblemSetup(problem, saddle=problem.saddle_point())
    elif config.matrix:
        problem = problems.PcaProblem(problems.load_matrix(config.matrix))
        if problem.dim < 2:
            raise InvalidArgumentError("pca needs a matrix of dimension >= 2")
        _, eigenvectors = problem.eigenpairs()
        setup = ProblemSetup(
            problem,
            saddle=_unit(problem.manifold, eigenvectors[:, 1]),
            dominant=_unit(problem.manifold, eigenvectors[:, 0]),
        )
    else:
        synthetic, _ = problems.synthetic_pca(config.dim, RngStream(config.seed, constants.STREAM_PROBLEM))
        setup = ProblemSetup(synthetic.problem, saddle=synthetic.saddle, dominant=synthetic.dominant)

    if config.matrix and setup.problem.dim != config.dim:
        logger.debug(f"dimension {setup.problem.dim} taken from {config.matrix}")
    return setup


def start_point(config, setup) -> Point:
    problem = setup.problem
    manifold = problem.manifold
    if config.start == constants.START_SADDLE:
        x0 = setup.saddle
    elif config.start == constants.START_RANDOM:
        x0, _ = manifold.random_point(RngStream(config.seed, constants.STREAM_START), problem.dim)
    else:
        coords = problems.load_vector(config.x0)
        if coords.size != problem.dim:
            raise InvalidArgumentError(f"{config.x0} has dimension {coords.size}, problem has {problem.dim}")
        x0 = _unit(manifold, coords) if manifold.name == constants.SPHERE else manifold.point(coords)
    problem.check_point(x0)
    return x0


def problem_constants(config, setup, x0):
    """(ℓ, L, ρ, b, Δf) for a run from x0; flags override the problem's own
    constants"""
    problem = setup.problem
    c = problem.constants()
    lip_grad = c.lip_grad
    if config.rho is not None:
        lip_hess = config.rho
    else:
        lip_hess = c.lip_hess if c.lip_hess > 0 else constants.NOMINAL_RHO
    ball = config.ball if math.isfinite(config.ball) else c.ball
    ell = config.ell if config.ell is not None else lip_grad

    if config.gap is not None:
        gap = config.gap
    elif isinstance(problem, problems.PcaProblem):
        gap = problem.value(x0) - problem.optimal_value()
        floor = config.eps ** 1.5 / math.sqrt(lip_hess)
        if gap < floor:
            logger.warning(f"start is within {gap} of the optimum, using Δf = {floor}")
            gap = floor
    else:
        gap = constants.NOMINAL_GAP
    return ell, lip_grad, lip_hess, ball, gap


def make_params(config, setup, x0, verb, cap=True):
    """PRGD parameters for a run from x0. With `cap` and no --budget, T is
    capped at DEFAULT_BUDGET_HORIZONS horizons."""
    ell, lip_grad, lip_hess, ball, gap = problem_constants(config, setup, x0)
    manifold = setup.problem.manifold
    kwargs = dict(
        epsilon=config.eps,
        delta=config.delta,
        dim=manifold.intrinsic_dim(x0),
        ell=ell,
        lip_grad=lip_grad,
        lip_hess=lip_hess,
        ball=ball,
        gap=gap,
        mode=config.mode,
        chi=config.chi,
        terminate=config.terminate_for(verb),
    )
    if config.budget is not None or not cap:
        return algorithm.derive_params(budget=config.budget, **kwargs)

    params = algorithm.derive_params(budget=constants.MAX_BUDGET - 1, **kwargs)
    default_budget = constants.DEFAULT_BUDGET_HORIZONS * params.horizon
    if default_budget < params.budget:
        params = replace(params, budget=default_budget, budget_capped=True)
    return params


def _run(problem, x0, params, rng, rgd):
    if rgd:
        return algorithm.rgd(problem, x0, params.eta, params.epsilon, params.budget)
    return algorithm.prgd(problem, x0, params, rng)


def run_single(config):
    """One seeded run: trace.csv, summary.json and the effective config"""
    setup = make_problem(config)
    problem = setup.problem
    x0 = start_point(config, setup)
    params = make_params(config, setup, x0, constants.RUN_VERB)
    logger.info(f"running {'rgd' if config.rgd else 'prgd'} on {config.problem} d={problem.dim} "
                f"seed={config.seed} T={params.budget}")

    trace = _run(problem, x0, params, RngStream(config.seed, 0), config.rgd)

    final = trace.final_point
    small = trace.last_small_grad_point
    report = verify.check_second_order_point(problem, small, params.epsilon, params.lip_hess) if small else None
    summary = {
        "final_f": problem.value(final),
        "final_grad_norm": problem.riemannian_gradient(final).norm,
        "n_perturbations": trace.n_perturbations,
        "n_manifold_steps": trace.n_manifold_steps,
        "gradient_queries": trace.gradient_queries,
        "t": trace.t,
        "terminated_early": trace.terminated_early,
        "verdict": report.verdict if report else None,
        "criticality": report.as_dict() if report else None,
        "params": params.as_dict(),
    }

    out = config.output_dir
    util.write_csv(os.path.join(out, constants.TRACE_FILE), constants.TRACE_COLUMNS,
                   [event.row() for event in trace.events])
    util.write_json(os.path.join(out, constants.SUMMARY_FILE), summary)
    util.save_yaml_file(os.path.join(out, constants.CONFIG_FILE), asdict(config),
                        "# generated by prgd, do not edit!\n")
    logger.log("OUTPUT", f"final f={summary['final_f']} ‖grad‖={summary['final_grad_norm']} "
                         f"perturbations={trace.n_perturbations} queries={trace.gradient_queries}")
    logger.info(f"wrote {constants.TRACE_FILE} and {constants.SUMMARY_FILE} to {out}")
    return errors.EXIT_OK


def run_trial(config, setup, trial):
    """One study trial with seed `config.seed + trial` on stream `trial`"""
    problem = setup.problem
    seed = config.seed + trial
    x0 = start_point(config, setup)
    params = make_params(config, setup, x0, constants.STUDY_VERB)
    trace = _run(problem, x0, params, RngStream(seed, trial), config.rgd)
    final = trace.final_point
    report = verify.check_second_order_point(problem, final, params.epsilon, params.lip_hess)
    alignment = abs(float(final.coords @ setup.dominant.coords)) if setup.dominant is not None else None
    lemmas = verify.check_trace_lemmas(trace, params)
    logger.debug(f"trial {trial}: escaped={report.verdict} alignment={alignment} t={trace.t}")
    return {
        "trial": trial,
        "seed": seed,
        "escaped": report.verdict,
        "final_f": problem.value(final),
        "final_grad_norm": report.grad_norm,
        "min_eig": report.min_eig_pullback,
        "alignment": alignment,
        "gradient_queries": trace.gradient_queries,
        "lemma_violations": len(lemmas.violations),
    }, params


def run_escape_study(config):
    """`config.trials` seeded runs from the designated start; trials.csv and
    summary.json with the escape rate"""
    setup = make_problem(config)
    records = []
    params = None
    with util.spinner(f"running {config.trials} trials on {config.problem} d={setup.problem.dim}", debug):
        for trial in range(config.trials):
            record, params = run_trial(config, setup, trial)
            records.append(record)

    escaped = [r for r in records if r["escaped"]]
    aligned = [r for r in escaped if r["alignment"] is not None and r["alignment"] >= constants.ESCAPE_ALIGNMENT]
    summary = {
        "problem": config.problem,
        "dim": setup.problem.dim,
        "trials": config.trials,
        "rgd": config.rgd,
        "escape_rate": len(escaped) / config.trials,
        "aligned_escapes": len(aligned),
        "lemma_violations": sum(r["lemma_violations"] for r in records),
        "escape_probability_bound": verify.escape_probability_bound(params),
        "params": params.as_dict(),
        "records": records,
    }

    out = config.output_dir
    util.write_csv(os.path.join(out, constants.TRIALS_FILE), constants.TRIAL_COLUMNS,
                   [[r[column] for column in constants.TRIAL_COLUMNS] for r in records])
    util.write_json(os.path.join(out, constants.SUMMARY_FILE), summary)
    logger.log("OUTPUT", f"escape rate {summary['escape_rate']} over {config.trials} trials "
                         f"({len(aligned)} aligned escapes)")
    return errors.EXIT_OK


def params_for(config):
    """Uncapped PrgdParams for the configured problem and start"""
    setup = make_problem(config)
    x0 = start_point(config, setup)
    return make_params(config, setup, x0, constants.PARAMS_VERB, cap=False)


def derive_params_cmd(config):
    """Print PrgdParams as JSON, and save params.json when --out is given"""
    params = params_for(config)
    print(util.dump_json(params.as_dict()))
    if config.out:
        util.write_json(os.path.join(config.out, constants.PARAMS_FILE), params.as_dict())
    return errors.EXIT_OK


def _check(name, value, bound, passed, detail=None):
    if passed is None:
        status = "SKIP"
    else:
        status = "PASS" if passed else "FAIL"
    return {"name": name, "value": value, "bound": bound, "passed": passed, "status": status, "detail": detail}


def verify_checks(config, setup, x0, params):
    """Run the verification suites; one dict per check"""
    problem = setup.problem
    c = problem.constants()
    n = config.samples
    streams = [RngStream(config.seed, constants.STREAM_VERIFY + i) for i in range(4)]
    checks = []

    error = verify.check_pullback_gradient(problem, constants.PULLBACK_CHECK_BALL, n, streams[0])
    checks.append(_check("pullback gradient vs finite differences", error,
                         constants.PULLBACK_GRADIENT_TOLERANCE, error <= constants.PULLBACK_GRADIENT_TOLERANCE))

    acceleration = verify.check_retraction_second_order(problem.manifold, problem.dim, n, streams[1])
    checks.append(_check("retraction second order", acceleration, constants.RETRACTION_ACCELERATION_TOLERANCE,
                         acceleration <= constants.RETRACTION_ACCELERATION_TOLERANCE))

    ratio = verify.empirical_grad_lipschitz(problem, constants.VERIFY_LIPSCHITZ_BALL, n, streams[2])
    bound = c.lip_grad * (1 + constants.LEMMA_SLACK)
    checks.append(_check("gradient Lipschitz constant", ratio, c.lip_grad, ratio <= bound))

    ratio = verify.empirical_hess_lipschitz(problem, constants.VERIFY_LIPSCHITZ_BALL, n,
                                            constants.FD_HESSIAN_STEP, streams[3])
    bound = c.lip_hess + constants.HESSIAN_FD_TOLERANCE * c.lip_grad
    checks.append(_check("Hessian Lipschitz constant", ratio, c.lip_hess, ratio <= bound))

    # the quadratic saddle is unbounded below, keep its iterates finite
    short = replace(params, budget=min(params.budget, constants.VERIFY_TRACE_HORIZONS * params.horizon))
    trace = algorithm.prgd(problem, x0, short, RngStream(config.seed, 0))
    lemmas = verify.check_trace_lemmas(trace, params)
    checks.append(_check("trace decrease and localisation", len(lemmas.violations), 0, lemmas.ok,
                         str(lemmas.first_violation) if lemmas.first_violation else None))

    if setup.saddle is not None:
        r0 = 2 * params.radius
        try:
            drop1, drop2 = verify.coupling_experiment(problem, setup.saddle, params, r0)
            drop = min(drop1, drop2)
            checks.append(_check("coupling decrease at the saddle", drop, -params.score_drop,
                                 drop <= -params.score_drop))
        except InvalidArgumentError as e:
            checks.append(_check("coupling decrease at the saddle", None, -params.score_drop, None, str(e)))
    return checks


def run_verify(config):
    """Verification suites for the configured problem: report at OUTPUT
    level, verify.json, exit 1 on any failed check"""
    setup = make_problem(config)
    x0 = start_point(config, setup)
    params = make_params(config, setup, x0, constants.VERIFY_VERB)
    with util.spinner(f"verifying {config.problem} d={setup.problem.dim} with {config.samples} samples", debug):
        checks = verify_checks(config, setup, x0, params)

    failed = [check for check in checks if check["passed"] is False]
    skipped = [check for check in checks if check["passed"] is None]
    result = {
        "problem": config.problem,
        "dim": setup.problem.dim,
        "seed": config.seed,
        "samples": config.samples,
        "checks": checks,
        "escape_probability_bound": verify.escape_probability_bound(params),
        "passed": len(checks) - len(failed) - len(skipped),
        "failed": len(failed),
        "skipped": len(skipped),
    }
    logger.log("OUTPUT", util.process_res_template(constants.VERIFY_REPORT_TEMPLATE, **result))
    util.write_json(os.path.join(config.output_dir, constants.VERIFY_FILE), result)
    return errors.EXIT_FAILURE if failed else errors.EXIT_OK


def system_info():
    message = util.process_res_template(
        constants.SYSTEM_INFO_TEMPLATE,
        prgd_version=version.__version__,
        python_version=platform.python_version(),
        numpy_version=np.__version__,
        scipy_version=scipy.__version__,
    )

    logger.info(message)
