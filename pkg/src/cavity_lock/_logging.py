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
"""Logger helpers shared by every module of the package."""
from __future__ import absolute_import

import json
import logging

LOGGER_NAME = "cavity-lock"  # type: str


def get_logger():
    """Returns a logger with the name 'cavity-lock',
    creating it if necessary.
    """
    return logging.getLogger(LOGGER_NAME)


def configure_logger(level, log_format="%(asctime)s %(name)-12s %(levelname)-8s %(message)s"):
    # type: (int, str) -> None
    """Set logger configuration.

    Args:
        level (int): Logger level
        log_format (str): Logger format
    """
    logging.basicConfig(format=log_format, level=level)
    get_logger().setLevel(level)


def log_run_invocation(command, env, logger=None):
    """Placeholder docstring"""
    logger = logger or get_logger()

    message = """Invoking command %s

Run Env:

%s

""" % (
        command,
        json.dumps(dict(env), indent=4, sort_keys=True, default=str),
    )
    logger.info(message)
