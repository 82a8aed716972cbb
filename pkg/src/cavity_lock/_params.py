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
"""Physical parameter set, derived scales and their validation.

All rates are angular (rad/s). Conversion from ordinary frequency happens once,
at the configuration boundary (see ``_env``).
"""
from __future__ import absolute_import

import collections
import math

from cavity_lock import _errors, _logging

logger = _logging.get_logger()

G_PARAM = "g"  # type: str
KAPPA_PARAM = "kappa"  # type: str
GAMMA_PARAM = "gamma"  # type: str
GAMMA_D_PARAM = "gamma_d"  # type: str
GAMMA_P_PARAM = "gamma_p"  # type: str
N_ATOMS_PARAM = "n_atoms"  # type: str
ALPHA_IN_SQ_PARAM = "alpha_in_sq"  # type: str
UNITS_PARAM = "units"  # type: str
LOG_LEVEL_PARAM = "log_level"  # type: str
LOG_LEVEL_ENV = "CAVITY_LOCK_LOG_LEVEL"  # type: str
WORKERS_ENV = "CAVITY_LOCK_WORKERS"  # type: str

HZ_UNITS = "hz"  # type: str
RAD_UNITS = "rad"  # type: str

PARAM_KEYS = (
    G_PARAM,
    KAPPA_PARAM,
    GAMMA_PARAM,
    GAMMA_D_PARAM,
    GAMMA_P_PARAM,
    N_ATOMS_PARAM,
    ALPHA_IN_SQ_PARAM,
)  # type: tuple

RATE_KEYS = (G_PARAM, KAPPA_PARAM, GAMMA_PARAM, GAMMA_D_PARAM, GAMMA_P_PARAM)  # type: tuple

BAD_CAVITY_MARGIN = 10.0  # type: float
STRONG_SATURATION_RATIO = 10.0  # type: float

SystemParams = collections.namedtuple(
    "SystemParams", "g kappa gamma gamma_d gamma_p n_atoms alpha_in_sq"
)
SystemParams.__new__.__defaults__ = (0.0, 0.0, 0.0, 1, 0.0)


class DerivedParams(
    collections.namedtuple(
        "DerivedParams",
        "Gamma gamma_parallel C C_eff NC_eff alpha_in_c_sq I0 Cgamma n_atoms",
    )
):
    """Derived scales of a parameter set.

    ``C`` is ``inf`` when gamma = 0, ``C_eff``/``NC_eff`` are ``inf`` and ``I0`` is
    ``nan`` in the ideal model (Gamma = 0). ``Cgamma`` = 4 g^2 / kappa is always finite.
    """

    __slots__ = ()

    @property
    def ideal(self):  # type: () -> bool
        """True when every atomic decay channel is switched off."""
        return self.Gamma == 0.0

    @property
    def i0_defined(self):  # type: () -> bool
        """Placeholder docstring"""
        return self.Gamma > 0.0

    @property
    def NC(self):  # type: () -> float
        """N times the bare cooperativity (``inf`` when gamma = 0)."""
        return self.n_atoms * self.C

    @property
    def NCgamma(self):  # type: () -> float
        """N C gamma in rad/s, the natural scale of the ideal model."""
        return self.n_atoms * self.Cgamma


class ValidationReport(collections.namedtuple("ValidationReport", "errors warnings")):
    """Hard errors and soft warnings found by ``validate``."""

    __slots__ = ()

    @property
    def ok(self):  # type: () -> bool
        """Placeholder docstring"""
        return not self.errors

    def __bool__(self):
        return bool(self.errors or self.warnings)

    __nonzero__ = __bool__


def _is_finite(value):
    try:
        return math.isfinite(float(value))
    except (TypeError, ValueError):
        return False


def validate(params):  # type: (SystemParams) -> ValidationReport
    """Check a parameter set against its invariants.

    Negative or non-finite rates, a non-positive kappa or g, a non-integer atom number
    and a negative flux are hard errors. Leaving the bad-cavity regime
    (g sqrt(N) or Gamma above kappa/10) and driving above 10 I0 are warnings.

    Args:
        params (SystemParams): parameter set to check.

    Returns:
        (ValidationReport): the findings; empty when everything holds.
    """
    errors = []
    warnings = []

    for key in PARAM_KEYS:
        if not _is_finite(getattr(params, key)):
            errors.append("%s must be a finite number" % key)

    if errors:
        return ValidationReport(errors=errors, warnings=warnings)

    if params.kappa <= 0:
        errors.append("kappa must be positive")
    if params.g <= 0:
        errors.append("g must be positive")
    for key in (GAMMA_PARAM, GAMMA_D_PARAM, GAMMA_P_PARAM):
        if getattr(params, key) < 0:
            errors.append("%s must be non-negative" % key)
    if params.n_atoms < 1 or float(params.n_atoms) != math.floor(params.n_atoms):
        errors.append("n_atoms must be an integer >= 1")
    if params.alpha_in_sq < 0:
        errors.append("alpha_in_sq must be non-negative")

    if errors:
        return ValidationReport(errors=errors, warnings=warnings)

    gamma_total = params.gamma + params.gamma_d + params.gamma_p
    kappa_limit = params.kappa / BAD_CAVITY_MARGIN

    if params.g * math.sqrt(params.n_atoms) > kappa_limit:
        warnings.append(
            "bad-cavity approximation degraded: g*sqrt(N)=%g exceeds kappa/%g"
            % (params.g * math.sqrt(params.n_atoms), BAD_CAVITY_MARGIN)
        )
    if gamma_total > kappa_limit:
        warnings.append(
            "bad-cavity approximation degraded: Gamma=%g exceeds kappa/%g"
            % (gamma_total, BAD_CAVITY_MARGIN)
        )

    gamma_parallel = params.gamma + params.gamma_p
    if gamma_total > 0 and gamma_parallel > 0:
        i0 = _critical_flux(params) * gamma_parallel / gamma_total
        if params.alpha_in_sq > STRONG_SATURATION_RATIO * i0:
            warnings.append(
                "strong-saturation regime: alpha_in_sq=%g exceeds %g*I0=%g"
                % (params.alpha_in_sq, STRONG_SATURATION_RATIO, STRONG_SATURATION_RATIO * i0)
            )

    return ValidationReport(errors=errors, warnings=warnings)


def _critical_flux(params):  # type: (SystemParams) -> float
    return (params.g * params.n_atoms) ** 2 / (4.0 * params.kappa)


def derive(params):  # type: (SystemParams) -> DerivedParams
    """Compute every derived scale of a parameter set.

    Args:
        params (SystemParams): a valid parameter set.

    Returns:
        (DerivedParams): Gamma, C, C_eff, NC_eff, alpha_in_c^2, I0 and 4 g^2 / kappa.

    Raises:
        InvalidParams: when a hard invariant fails.
    """
    report = validate(params)
    if not report.ok:
        raise _errors.InvalidParams(report.errors)

    gamma_total = params.gamma + params.gamma_d + params.gamma_p
    gamma_parallel = params.gamma + params.gamma_p
    cgamma = 4.0 * params.g ** 2 / params.kappa
    alpha_in_c_sq = _critical_flux(params)

    c = cgamma / params.gamma if params.gamma > 0 else math.inf

    if gamma_total > 0:
        c_eff = 4.0 * params.g ** 2 / (params.kappa * gamma_total)
        nc_eff = 4.0 * params.g ** 2 * params.n_atoms / (gamma_total * params.kappa)
        i0 = alpha_in_c_sq * gamma_parallel / gamma_total
    else:
        c_eff = math.inf
        nc_eff = math.inf
        i0 = math.nan

    return DerivedParams(
        Gamma=gamma_total,
        gamma_parallel=gamma_parallel,
        C=c,
        C_eff=c_eff,
        NC_eff=nc_eff,
        alpha_in_c_sq=alpha_in_c_sq,
        I0=i0,
        Cgamma=cgamma,
        n_atoms=params.n_atoms,
    )


def _number(key, value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise _errors.ConfigError("parameter %s must be a number, got %r" % (key, value))


def to_angular(mapping, units):  # type: (dict, str) -> dict
    """Convert the rate entries of a mapping to rad/s.

    Args:
        mapping (dict[str, object]): parameter values keyed by name.
        units (str): 'hz' or 'rad'.

    Returns:
        (dict): a copy with every rate key multiplied by 2 pi when units is 'hz'.
    """
    if units not in (HZ_UNITS, RAD_UNITS):
        raise _errors.ConfigError("units must be '%s' or '%s', got %r" % (HZ_UNITS, RAD_UNITS, units))

    converted = dict(mapping)
    if units == HZ_UNITS:
        for key in RATE_KEYS:
            if key in converted:
                converted[key] = 2.0 * math.pi * _number(key, converted[key])
    return converted


def from_mapping(mapping):  # type: (dict) -> SystemParams
    """Build SystemParams from a mapping already expressed in rad/s."""
    missing = [key for key in (G_PARAM, KAPPA_PARAM, N_ATOMS_PARAM) if key not in mapping]
    if missing:
        raise _errors.ConfigError("missing required parameters: %s" % ", ".join(missing))

    values = {key: _number(key, mapping[key]) for key in PARAM_KEYS if key in mapping}
    return SystemParams(**values)


def scale_to_nc_eff(params, nc_eff):  # type: (SystemParams, float) -> SystemParams
    """Rescale g so that N C_eff equals ``nc_eff``; N, kappa and the atomic rates are kept."""
    gamma_total = params.gamma + params.gamma_d + params.gamma_p
    if gamma_total <= 0:
        raise _errors.InvalidParams(["NC_eff cannot be set in the ideal model (Gamma = 0)"])
    if nc_eff <= 0:
        raise _errors.InvalidParams(["NC_eff must be positive"])

    g = math.sqrt(nc_eff * params.kappa * gamma_total / (4.0 * params.n_atoms))
    return params._replace(g=g)


def with_drive(params, ratio=None, theta=None):  # type: (SystemParams, float, float) -> SystemParams
    """Set the input flux from alpha_in^2 / I0 or, in the ideal model, from the Bloch angle.

    Args:
        params (SystemParams): base parameter set.
        ratio (float): target alpha_in^2 / I0 (non-ideal model).
        theta (float): target Bloch angle, alpha_in^2 = alpha_in_c^2 sin^2(theta).

    Returns:
        (SystemParams): the parameter set with the new alpha_in_sq.
    """
    if (ratio is None) == (theta is None):
        raise ValueError("exactly one of ratio and theta must be given")

    derived = derive(params._replace(alpha_in_sq=0.0))

    if theta is not None:
        return params._replace(alpha_in_sq=derived.alpha_in_c_sq * math.sin(theta) ** 2)

    if not derived.i0_defined:
        raise _errors.InvalidParams(["alpha_in_sq/I0 is undefined in the ideal model"])
    return params._replace(alpha_in_sq=ratio * derived.I0)
