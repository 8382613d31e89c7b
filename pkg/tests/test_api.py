import json
import math
import os

import pytest

from conftest import data_file
from prgd import api
from prgd import constants
from prgd import errors
from prgd import util
from prgd.errors import ConfigError


def config_for(**overrides):
    arguments = {f"--{key}": value for key, value in overrides.items()}
    return api.build_config(arguments)


@pytest.fixture(autouse=True)
def no_spinner(monkeypatch):
    monkeypatch.setenv("CI", "true")


def read_json(filename):
    with open(filename) as f:
        return json.load(f)


def test_build_config_defaults():
    config = api.build_config({"--chi": "4"})
    assert config.problem == constants.PROBLEM_QUADRATIC_SADDLE
    assert config.eps == 0.01
    assert config.chi == 4.0
    assert config.ball == math.inf
    assert config.output_dir == constants.DEFAULT_OUTPUT_DIR
    assert config.terminate_for(constants.STUDY_VERB)
    assert not config.terminate_for(constants.RUN_VERB)


def test_build_config_precedence():
    """flags beat the YAML file, which beats the defaults"""
    yaml_data = {"eps": 0.05, "chi": 4, "seed": 7}
    config = api.build_config({"--eps": "0.02", "--rgd": False, "--no-terminate": True}, yaml_data)
    assert config.eps == 0.02
    assert config.chi == 4.0
    assert config.seed == 7
    assert config.rgd is False
    assert config.terminate is False
    assert not config.terminate_for(constants.STUDY_VERB)


def test_build_config_errors():
    with pytest.raises(ConfigError, match="unknown options"):
        api.build_config({}, {"chi": 4, "colour": "red"})
    with pytest.raises(ConfigError, match="requires --chi"):
        api.build_config({})
    with pytest.raises(ConfigError, match="requires --x0"):
        config_for(chi="4", start=constants.START_FILE)
    with pytest.raises(ConfigError, match="matrix required"):
        config_for(chi="4", problem=constants.PROBLEM_PCA, start=constants.START_FILE, x0=data_file("e2.txt"))
    with pytest.raises(ConfigError, match="invalid value for dim"):
        config_for(chi="4", dim="2.5")
    with pytest.raises(ConfigError, match="unknown problem"):
        config_for(chi="4", problem="rosenbrock")
    with pytest.raises(ConfigError, match="trials"):
        config_for(chi="4", trials="0")


def test_params_for_pca_matrix():
    config = config_for(chi="4", problem=constants.PROBLEM_PCA, matrix=data_file("diag31.txt"))
    params = api.params_for(config)
    assert params.lip_grad == pytest.approx(7.5)
    assert params.lip_hess == pytest.approx(27.0)
    assert params.ell == pytest.approx(7.5)
    # f(e2) − f(e1)
    assert params.gap == pytest.approx(1.0)
    assert params.dim == 1
    assert params.horizon == 58
    assert not params.budget_capped


def test_start_from_file_is_normalised_on_sphere(out_dir):
    filename = os.path.join(out_dir, "x0.txt")
    with open(filename, "w") as f:
        f.write("2\n0.0 2.0\n")
    config = config_for(chi="4", problem=constants.PROBLEM_PCA, matrix=data_file("diag31.txt"),
                        start=constants.START_FILE, x0=filename)
    setup = api.make_problem(config)
    x0 = api.start_point(config, setup)
    assert x0.coords.tolist() == [0.0, 1.0]


def test_run_budget_defaults_to_ten_horizons():
    config = config_for(chi="4")
    setup = api.make_problem(config)
    x0 = api.start_point(config, setup)
    params = api.make_params(config, setup, x0, constants.RUN_VERB)
    assert params.budget == constants.DEFAULT_BUDGET_HORIZONS * params.horizon
    assert params.budget_capped
    # nominal constants for the quadratic saddle
    assert params.lip_hess == constants.NOMINAL_RHO
    assert params.gap == constants.NOMINAL_GAP


def test_run_single_writes_outputs(out_dir):
    config = config_for(chi="4", out=out_dir)
    assert api.run_single(config) == errors.EXIT_OK

    rows = util.read_csv(os.path.join(out_dir, constants.TRACE_FILE))
    assert list(rows[0].keys()) == constants.TRACE_COLUMNS
    assert rows[0]["kind"] == constants.KIND_SMALL_GRAD_VISIT
    assert rows[1]["kind"] == constants.KIND_PERTURBATION
    assert rows[0]["tangent_norm"] == ""

    summary = read_json(os.path.join(out_dir, constants.SUMMARY_FILE))
    assert summary["n_perturbations"] >= 1
    assert summary["t"] > summary["params"]["budget"]
    # the only small gradient visit is the saddle itself
    assert summary["verdict"] is False
    assert summary["params"]["ball"] == "inf"

    saved = util.read_yaml_file(os.path.join(out_dir, constants.CONFIG_FILE))
    assert api.build_config({}, saved) == config


def test_run_single_is_reproducible(out_dir):
    first = os.path.join(out_dir, "first")
    second = os.path.join(out_dir, "second")
    for out in (first, second):
        api.run_single(config_for(chi="4", seed="3", out=out))

    for filename in (constants.TRACE_FILE, constants.SUMMARY_FILE):
        with open(os.path.join(first, filename), "rb") as a, open(os.path.join(second, filename), "rb") as b:
            assert a.read() == b.read()


def test_escape_study_single_trial(out_dir):
    config = config_for(chi="4", eps="0.001", problem=constants.PROBLEM_PCA, dim="5", out=out_dir)
    assert api.run_escape_study(config) == errors.EXIT_OK

    rows = util.read_csv(os.path.join(out_dir, constants.TRIALS_FILE))
    assert len(rows) == 1
    assert list(rows[0].keys()) == constants.TRIAL_COLUMNS
    summary = read_json(os.path.join(out_dir, constants.SUMMARY_FILE))
    assert summary["trials"] == 1
    assert summary["escape_rate"] == 1.0
    assert summary["aligned_escapes"] == 1
    assert summary["lemma_violations"] == 0


def test_escape_study_pca(out_dir):
    """PCA in d=50 from the second eigenvector: nearly every trial escapes to
    the top eigenvector"""
    config = config_for(chi="4", eps="0.001", problem=constants.PROBLEM_PCA, dim="50", trials="50", out=out_dir)
    api.run_escape_study(config)
    summary = read_json(os.path.join(out_dir, constants.SUMMARY_FILE))
    assert summary["params"]["horizon"] == 150
    assert summary["params"]["eta"] == pytest.approx(0.2)
    assert summary["escape_rate"] >= 0.9
    escaped = sum(1 for record in summary["records"] if record["escaped"])
    assert summary["aligned_escapes"] == escaped
    assert summary["lemma_violations"] == 0


def test_escape_study_rgd_baseline_stays_at_saddle(out_dir):
    config = config_for(chi="4", eps="0.001", problem=constants.PROBLEM_PCA, dim="50", trials="50", rgd=True,
                        out=out_dir)
    api.run_escape_study(config)
    summary = read_json(os.path.join(out_dir, constants.SUMMARY_FILE))
    assert summary["rgd"] is True
    assert summary["escape_rate"] == 0.0
    assert all(record["gradient_queries"] == 1 for record in summary["records"])


def test_derive_params_cmd(out_dir, capsys):
    config = config_for(chi="20", out=out_dir)
    assert api.derive_params_cmd(config) == errors.EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["horizon"] == 200
    assert read_json(os.path.join(out_dir, constants.PARAMS_FILE)) == printed


def test_run_verify_quadratic(out_dir):
    config = config_for(chi="20", samples="20", out=out_dir)
    assert api.run_verify(config) == errors.EXIT_OK
    result = read_json(os.path.join(out_dir, constants.VERIFY_FILE))
    assert result["failed"] == 0
    assert result["skipped"] == 0
    names = [check["name"] for check in result["checks"]]
    assert "coupling decrease at the saddle" in names
    assert all(check["status"] == "PASS" for check in result["checks"])


def test_verify_checks_skip_coupling_without_negative_curvature():
    config = config_for(chi="4", problem=constants.PROBLEM_PCA, matrix=data_file("diag31.txt"), samples="10")
    setup = api.make_problem(config)
    x0 = api.start_point(config, setup)
    params = api.make_params(config, setup, x0, constants.VERIFY_VERB)
    # designate the minimiser as the saddle: the coupling preconditions fail
    setup = api.ProblemSetup(setup.problem, saddle=setup.dominant, dominant=setup.dominant)
    checks = api.verify_checks(config, setup, x0, params)
    coupling = checks[-1]
    assert coupling["status"] == "SKIP"
    assert "λ_min" in coupling["detail"]
