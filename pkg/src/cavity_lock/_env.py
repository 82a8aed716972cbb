# Copyright 2019-2020 The cavity-lock Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the 'License'). You
# may not use this file except in compliance with the License. A copy of
# the License is located at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# or in the 'license' file accompanying this file. This file is
# distributed on an 'AS IS' BASIS, WITHOUT WARRANTIES OR CONDITIONS OF
# ANY KIND, either express or implied. See the License for the specific
# language governing permissions and limitations under the License.
"""Configuration files and the read-only run environment."""
from __future__ import absolute_import

import hashlib
import json
import logging
import math
import multiprocessing
import os

import psutil

from cavity_lock import _errors, _logging, _mapping, _params

logger = _logging.get_logger()

T_KEY = "T"
UGF_KEY = "ugf"
SEED_KEY = "seed"
DT_KEY = "dt"
N_TRAJECTORIES_KEY = "n_trajectories"
N_SEGMENTS_KEY = "n_segments"
BARE_NOISE_KEY = "bare_noise"
WORKERS_KEY = "workers"
AXIS1_KEY = "axis1"
AXIS2_KEY = "axis2"
OUTPUTS_KEY = "outputs"

RUN_KEYS = (
    T_KEY,
    UGF_KEY,
    SEED_KEY,
    DT_KEY,
    N_TRAJECTORIES_KEY,
    N_SEGMENTS_KEY,
    BARE_NOISE_KEY,
    WORKERS_KEY,
    _params.LOG_LEVEL_PARAM,
)  # type: tuple

SWEEP_KEYS = (AXIS1_KEY, AXIS2_KEY, OUTPUTS_KEY)  # type: tuple

KNOWN_KEYS = frozenset(_params.PARAM_KEYS + (_params.UNITS_PARAM,) + RUN_KEYS + SWEEP_KEYS)

_COMMENT = "#"


def _parse_value(value):
    """Placeholder docstring"""
    try:
        return json.loads(value)
    except ValueError:
        logger.debug("value %r is not JSON, keeping the string", value)
        return value


def parse_config_lines(lines, path="<string>"):  # type: (list, str) -> dict
    """Parse ``name = value`` lines into a dictionary.

    Args:
        lines (iterable[str]): the file contents, one entry per line.
        path (str): name used in error messages.

    Returns:
        (dict[str, object]): parsed values; JSON values are decoded, others stay strings.

    Raises:
        ParseError: on a malformed line, an unknown key or a repeated key.
    """
    config = {}
    for line_number, raw in enumerate(lines, 1):
        line = raw.split(_COMMENT, 1)[0].strip()
        if not line:
            continue

        if "=" not in line:
            raise _errors.ParseError(path, line_number, None, "expected 'name = value'")

        key, value = (part.strip() for part in line.split("=", 1))
        if not key or " " in key:
            raise _errors.ParseError(path, line_number, key, "malformed key")
        if key not in KNOWN_KEYS:
            raise _errors.ParseError(
                path, line_number, key, "unknown key, expected one of %s" % sorted(KNOWN_KEYS)
            )
        if key in config:
            raise _errors.ParseError(path, line_number, key, "key set twice")
        if not value:
            raise _errors.ParseError(path, line_number, key, "missing value")

        config[key] = _parse_value(value)
    return config


def parse_config(path):  # type: (str) -> dict
    """Read a configuration file.

    Args:
        path (str): path to the file.

    Returns:
        (dict[str, object]): the parsed configuration.
    """
    with open(path, "r") as f:
        return parse_config_lines(f.readlines(), path)


def num_workers():  # type: () -> int
    """Number of physical cores, or logical ones when psutil cannot tell."""
    return psutil.cpu_count(logical=False) or multiprocessing.cpu_count()


def config_hash(config):  # type: (dict) -> str
    """sha256 of the canonical JSON form of a configuration."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunEnv(_mapping.MappingMixin):
    """Read-only snapshot of one run: the configuration file merged with CLI overrides.

    Rates are converted to rad/s at construction when the units are hz. The RunEnv
    holds no state beyond the snapshot and behaves like a dictionary.

    Attributes:
            config (dict): the merged raw configuration, before unit conversion.
    """

    def __init__(self, config=None, overrides=None):
        """Merge ``overrides`` (CLI flags, None meaning unset) over ``config``."""
        merged = dict(config or {})
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
        self.config = merged

        raw_params, options, sweep, _ = _mapping.partition(
            merged, _params.PARAM_KEYS, RUN_KEYS, SWEEP_KEYS
        )
        units = merged.get(_params.UNITS_PARAM, _params.RAD_UNITS)
        self._units = units

        angular = _params.to_angular(raw_params, units)
        self._params = _params.from_mapping(angular) if angular else None

        if UGF_KEY in options and units == _params.HZ_UNITS:
            options[UGF_KEY] = 2.0 * math.pi * float(options[UGF_KEY])
        self._options = options
        self._sweep = sweep

        env_level = int(os.environ.get(_params.LOG_LEVEL_ENV, logging.INFO))
        self._log_level = int(options.get(_params.LOG_LEVEL_PARAM, env_level))
        self._seed = int(options.get(SEED_KEY, 0))

        workers = options.get(WORKERS_KEY, os.environ.get(_params.WORKERS_ENV))
        self._num_workers = int(workers) if workers else num_workers()

    @property
    def params(self):  # type: () -> _params.SystemParams
        """The base SystemParams in rad/s, or None when the configuration sets none."""
        return self._params

    @property
    def units(self):  # type: () -> str
        """Placeholder docstring"""
        return self._units

    @property
    def num_workers(self):  # type: () -> int
        """Processes available to sweeps and trajectory ensembles."""
        return self._num_workers

    @property
    def seed(self):  # type: () -> int
        """Placeholder docstring"""
        return self._seed

    @property
    def log_level(self):  # type: () -> int
        """Run logging level.
        Returns:
            int: logging level, from the CLI, the config file or the environment.
        """
        return self._log_level

    @property
    def options(self):  # type: () -> dict
        """Run keys (T, ugf, dt, ...) with rates in rad/s."""
        return dict(self._options)

    @property
    def sweep(self):  # type: () -> dict
        """Placeholder docstring"""
        return dict(self._sweep)

    @property
    def config_hash(self):  # type: () -> str
        """sha256 of the merged configuration, written into every CSV header."""
        return config_hash(self.config)
