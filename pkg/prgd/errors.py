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
"""Exceptions raised by prgd and the CLI exit code each one maps to"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition"""


class InvalidInputError(ValueError):
    """A file could not be parsed"""


class ConfigError(ValueError):
    """The experiment configuration is incomplete or inconsistent"""


class NumericalFailureError(RuntimeError):
    """A computation produced a non-finite value or failed to converge"""


class CapacityError(OverflowError):
    """A derived integer does not fit the 64-bit counter"""


class InternalError(RuntimeError):
    """An internal consistency check failed"""


def exit_code(e):
    """CLI exit status for exception `e`"""
    if isinstance(e, (InvalidArgumentError, InvalidInputError, ConfigError, CapacityError)):
        code = EXIT_CONFIG
    elif isinstance(e, NumericalFailureError):
        code = EXIT_NUMERICAL
    else:
        code = EXIT_FAILURE
    return code
