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
"""Error and warning classes raised by the analysis modules."""
from __future__ import absolute_import


class ClientError(Exception):
    """Error class used to separate invalid requests from programming errors."""


class InvalidParams(ClientError):
    """Error class indicating the parameter set violates a hard invariant."""

    def __init__(self, errors):
        self.errors = list(errors)
        super(InvalidParams, self).__init__("invalid parameters: %s" % "; ".join(self.errors))


class AboveThreshold(ClientError):
    """Error class indicating the ideal model is driven above its critical flux.

    No stable steady state exists there; the dynamics oscillate persistently.
    """

    def __init__(self, alpha_in_sq, alpha_in_c_sq):
        self.alpha_in_sq = alpha_in_sq
        self.alpha_in_c_sq = alpha_in_c_sq
        super(AboveThreshold, self).__init__(
            "no stable steady state: alpha_in_sq=%g exceeds the critical flux %g"
            % (alpha_in_sq, alpha_in_c_sq)
        )


class DegenerateScale(ClientError):
    """Error class indicating gamma + gamma_p = 0 with a nonzero dephasing rate."""


class MarginalStability(ClientError):
    """Error class indicating an eigenvalue sits on the imaginary axis."""

    def __init__(self, eigenvalue, tolerance):
        self.eigenvalue = eigenvalue
        self.tolerance = tolerance
        super(MarginalStability, self).__init__(
            "marginal stability: eigenvalue %s within %g of the imaginary axis"
            % (eigenvalue, tolerance)
        )


class NoConvergence(ClientError):
    """Error class indicating the detuning continuation lost the branch."""

    def __init__(self, message, last_good_delta):
        self.last_good_delta = last_good_delta
        super(NoConvergence, self).__init__(
            "%s (last good delta0=%g rad/s)" % (message, last_good_delta)
        )


class UnstableState(ClientError):
    """Error class indicating a spectrum was requested on an unstable branch."""


class CornerNotResolved(ClientError):
    """Error class indicating a corner frequency is too close to the cavity corner."""

    def __init__(self, omega_s, omega_r, cavity_corner):
        self.omega_s = omega_s
        self.omega_r = omega_r
        self.cavity_corner = cavity_corner
        super(CornerNotResolved, self).__init__(
            "corners not resolved from kappa/2=%g: omega_S=%g, omega_R=%g"
            % (cavity_corner, omega_s, omega_r)
        )


class InfeasibleUGF(ClientError):
    """Error class indicating the requested unity-gain frequency has no headroom."""


class UnstableLoop(ClientError):
    """Error class indicating the closed feedback loop is unstable."""


class ConfigError(ClientError):
    """Error class indicating an invalid simulation or sweep configuration."""


class TooShort(ClientError):
    """Error class indicating a record is too short for the requested estimate."""


class ValidationFailed(ClientError):
    """Error class indicating the stochastic oracle disagrees with the analytic result."""


class ParseError(ClientError):
    """Error class indicating a configuration file could not be parsed.

    Attributes:
      path, line_number, key
    """

    def __init__(self, path, line_number, key, reason):
        self.path = path
        self.line_number = line_number
        self.key = key
        self.reason = reason
        super(ParseError, self).__init__()

    def __str__(self):
        if self.key:
            message = '%s:%s: key "%s": %s' % (self.path, self.line_number, self.key, self.reason)
        else:
            message = "%s:%s: %s" % (self.path, self.line_number, self.reason)
        return message


class TooShortIntegration(UserWarning):
    """Warning class indicating the integration time does not average the slowest pole."""
