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
import csv
import json
import math
import os
import pathlib
from contextlib import contextmanager, ExitStack

import numpy as np
import yaml
from halo import Halo
from jinja2 import Environment, StrictUndefined
from loguru import logger

from prgd.errors import ConfigError


def is_ci():
    """True if we are running under CI, as indicated by the well-known CI
    environment variable"""
    return "CI" in os.environ


@contextmanager
def spinner(message, debug=False):
    """Show a spinner while the block runs, or just log `message` when
    debugging or under CI"""
    with ExitStack() as stack:
        if not debug and not is_ci():
            stack.enter_context(Halo(text=message, spinner='dots'))
        else:
            logger.info(message)
        yield


def get_res_filename(filename):
    return os.path.join(
        os.path.dirname(
            os.path.realpath(__file__)
        ),
        "res",
        filename
    )


def get_res_file_content(filename):
    with open(get_res_filename(filename), "r") as f:
        return f.read()


def process_res_template(filename, **data):
    """process a template from the /res directory and return it as a string"""
    jinja_env = Environment(undefined=StrictUndefined, keep_trailing_newline=True)
    jinja_env.filters['fmt'] = format_number
    template = jinja_env.from_string(get_res_file_content(filename))
    return template.render(**data)


def format_number(value, spec=".6g"):
    """jinja2 filter: numbers with `spec`, everything else as str"""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return str(value)
    return format(value, spec)


def read_yaml_file(filename):
    """read a yaml file and return it"""
    if not os.path.exists(filename):
        raise ConfigError(f"No such file: {filename}")
    with open(filename) as f:
        try:
            yaml_data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {filename}: {e}")

    if yaml_data is None:
        raise ConfigError(f"No YAML data in file: {filename}")
    if not isinstance(yaml_data, dict):
        raise ConfigError(f"Expected a mapping of options in {filename}, got {type(yaml_data).__name__}")

    return yaml_data


def save_yaml_file(filename, data, comment=None):
    """save yaml data to file, creating any directories as needed"""
    dirname = os.path.dirname(filename)
    if dirname:
        pathlib.Path(dirname).mkdir(parents=True, exist_ok=True)
    with open(filename, "w") as f:
        if comment:
            f.write(comment)
        yaml.safe_dump(json_safe(data), f, sort_keys=True)


def json_safe(value):
    """Copy of `value` that json/yaml can write strictly: numpy scalars and
    arrays become python values, infinities become "inf"/"-inf" """
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return value


def dump_json(data):
    return json.dumps(json_safe(data), indent=2, sort_keys=True)


def write_json(filename, data):
    """write `data` as strict JSON, creating any directories as needed"""
    pathlib.Path(filename).parent.mkdir(parents=True, exist_ok=True)
    with open(filename, "w") as f:
        f.write(dump_json(data))
        f.write("\n")
    logger.debug(f"wrote {filename}")


def write_csv(filename, columns, rows):
    """write a header and `rows`; None is written as an empty field"""
    pathlib.Path(filename).parent.mkdir(parents=True, exist_ok=True)
    with open(filename, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}: {row}")
            writer.writerow(["" if v is None else v for v in row])
    logger.debug(f"wrote {len(rows)} rows to {filename}")


def read_csv(filename):
    """rows of a file written by `write_csv` as dicts of strings"""
    with open(filename, newline="") as f:
        return list(csv.DictReader(f))
