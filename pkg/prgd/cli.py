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
"""prgd

Usage:
  prgd run [options]
  prgd study [options]
  prgd params [options]
  prgd verify [options]
  prgd --version

Options:
  -h --help          Show this screen.
  --version          Show version.
  --debug            Extra debugging messages
  --config=<file>    YAML file of option values (keys are the long option
                     names without dashes), overridden by flags given here
  --problem=<name>   pca or quadratic_saddle (default quadratic_saddle)
  --dim=<n>          Ambient dimension, ignored with --matrix (default 2)
  --matrix=<file>    Symmetric matrix: A for pca, H for quadratic_saddle.
                     pca without a matrix uses a seeded synthetic spectrum
  --start=<start>    random, saddle or file (default saddle)
  --x0=<file>        Starting point for --start=file
  --eps=<eps>        Target gradient norm ε (default 0.01)
  --delta=<delta>    Failure probability δ (default 0.1)
  --mode=<mode>      theoretical or practical (default practical)
  --chi=<chi>        χ for practical mode
  --ell=<ell>        Step size constant ℓ (default L)
  --rho=<rho>        Hessian Lipschitz constant ρ (default the problem's)
  --ball=<b>         Radius b of the pullback ball (default the problem's)
  --gap=<gap>        Δf = f(x0) − f* (default from the problem)
  --budget=<T>       Cap on the iteration counter. run, study and verify
                     stop after 10 horizons unless this is given
  --seed=<seed>      Base seed (default 0)
  --trials=<n>       Number of study trials (default 1)
  --samples=<n>      Monte-Carlo samples per verification check (default 1000)
  --rgd              Plain Riemannian gradient descent baseline
  --no-terminate     Keep going after a perturbation that fails to decrease
                     f (studies stop there by default)
  --out=<dir>        Output directory (default out)
"""
import sys

from docopt import docopt
from loguru import logger

import prgd.api as api
import prgd.constants as constants
import prgd.errors as errors
import prgd.util as util
import prgd.version as version


def setup_logging(level, logger_name=None):
    logger_name = logger_name or __name__.split(".")[0]
    log_formats = {
        "DEBUG": "{time}<level> {level} [{module}] {message}</level>",
        "INFO": "<level>[{module}] {message}</level>",
    }

    # errors go to stderr, everything else to stdout
    logger.remove()
    logger.add(sys.stdout, colorize=True, format=log_formats[level], level=level,
               filter=lambda record: record["level"].no < logger.level("ERROR").no)
    logger.add(sys.stderr, colorize=True, format=log_formats[level], level="ERROR")

    # custom level for program output so it can be nicely colourised
    try:
        logger.level("OUTPUT", no=25, color="<white><dim>")
    except (TypeError, ValueError):
        # already registered
        pass

    logger.debug(f"{logger_name} {level}")
    logger.debug("====[debug mode enabled]====")


def get_verb(arguments):
    for verb in (constants.RUN_VERB, constants.STUDY_VERB, constants.PARAMS_VERB, constants.VERIFY_VERB):
        if arguments.get(verb):
            return verb
    raise errors.ConfigError("one of (run|study|params|verify) is required")


handlers = {
    constants.RUN_VERB: api.run_single,
    constants.STUDY_VERB: api.run_escape_study,
    constants.PARAMS_VERB: api.derive_params_cmd,
    constants.VERIFY_VERB: api.run_verify,
}


def main():
    arguments = docopt(__doc__, version=version.__version__)
    setup_logging("DEBUG" if arguments['--debug'] else "INFO")
    api.debug = arguments['--debug']
    logger.debug(f"parsed arguments: {arguments}")

    try:
        verb = get_verb(arguments)
        yaml_data = util.read_yaml_file(arguments["--config"]) if arguments["--config"] else None
        config = api.build_config(arguments, yaml_data)

        # params prints JSON on stdout, keep it clean
        if verb != constants.PARAMS_VERB:
            api.system_info()
        code = handlers[verb](config)

    except Exception as e:
        logger.error(str(e))
        if arguments['--debug']:
            logger.exception(e)
        code = errors.exit_code(e)

    sys.exit(code)
