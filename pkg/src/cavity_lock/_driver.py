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
"""Exit-code policy shared by every command line entry point."""
from __future__ import absolute_import

import sys
import traceback

from cavity_lock import _errors, _logging

logger = _logging.get_logger()

SUCCESS_CODE = 0
DEFAULT_FAILURE_CODE = 1


def _failure_code(error):
    """Exit code for an unexpected exception: its errno when it carries one, else 1."""
    code = getattr(error, "errno", None)
    if isinstance(code, int) and 0 < code < 256:
        return code
    return DEFAULT_FAILURE_CODE


def _exit_processes(exit_code):  # type: (int) -> None
    """Exit the command-line process.

    Args:
        exit_code (int): exit code
    """
    sys.exit(exit_code)


def run(command, handler, make_env):
    """Run one CLI command and exit with its status.

    A ClientError is a user-side failure and exits with 1 after logging its message.
    Any other exception logs the traceback and exits with its errno, or 1.

    Args:
        command (str): subcommand name, for the log.
        handler (callable): called with the RunEnv; raises on failure.
        make_env (callable): builds the RunEnv; configuration errors exit with 1.
    """
    exit_code = SUCCESS_CODE
    try:
        env = make_env()
        _logging.configure_logger(env.log_level)
        _logging.log_run_invocation(command, env)

        handler(env)

        logger.info("Reporting %s SUCCESS", command)
    except _errors.ClientError as e:
        logger.error("%s: %s", type(e).__name__, e)
        exit_code = DEFAULT_FAILURE_CODE
    except Exception as e:  # pylint: disable=broad-except
        logger.error("Reporting %s FAILURE", command)
        logger.error("internal error: %s\n%s", e, traceback.format_exc())

        exit_code = _failure_code(e)
    finally:
        _exit_processes(exit_code)
