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
"""Linearized fluctuations around a steady state.

Transfer functions are evaluated at s = i omega. Every function takes ``omega`` as a
scalar or an array and returns the same shape.
"""
from __future__ import absolute_import

import collections
import math
import warnings

import numpy as np

from cavity_lock import _errors, _logging, _meanfield, _params

logger = _logging.get_logger()

INPUT_CHANNEL = "input_y"  # type: str
CHANNEL_PARAMS = collections.OrderedDict(
    [
        ("f_gamma", _params.GAMMA_PARAM),
        ("f_gamma_p", _params.GAMMA_P_PARAM),
        ("f_gamma_d", _params.GAMMA_D_PARAM),
    ]
)
SHOT_NOISE_RAW = 0.25  # type: float
SHORT_INTEGRATION_FACTOR = 10.0  # type: float

AsymptoticRates = collections.namedtuple("AsymptoticRates", "lp lm mm")

DecayRates = collections.namedtuple(
    "DecayRates", "lp lm mp mm ideal_lp ideal_lm asymptotic"
)

FrequencyResponse = collections.namedtuple("FrequencyResponse", "omega R noise_gains")

SpectrumSample = collections.namedtuple("SpectrumSample", "omega S_Yout forced")

EstimatorStats = collections.namedtuple("EstimatorStats", "slope variance sensitivity_sq T")

Plant = collections.namedtuple("Plant", "poles_sum poles_product zeros_sum zeros_product gain")


def plant_polynomials(params, derived, state):
    """Real polynomial coefficients of the Y-sector response.

    den(s) = s^2 + poles_sum s + poles_product and the input-noise numerator
    num(s) = s^2 - zeros_sum s + zeros_product, so that l+ l- = poles_product and
    m+ m- = zeros_product.
    """
    z = _meanfield.normalized_inversion(state, derived)
    kappa = params.kappa
    gamma = derived.Gamma
    coupling = 2.0 * params.g ** 2 * params.n_atoms * z

    return Plant(
        poles_sum=(kappa + gamma) / 2.0,
        poles_product=kappa * gamma / 4.0 - coupling,
        zeros_sum=(kappa - gamma) / 2.0,
        zeros_product=-kappa * gamma / 4.0 - coupling,
        gain=params.g * math.sqrt(kappa) * _meanfield.dipole(state),
    )


def response_denominator(plant, s):
    return s * s + plant.poles_sum * s + plant.poles_product


def input_numerator(plant, s):
    return s * s - plant.zeros_sum * s + plant.zeros_product


def _quadratic_roots(half_sum, radicand, product):
    if radicand < 0:
        spread = 1j * math.sqrt(-radicand)
        return complex(half_sum) + spread, complex(half_sum) - spread

    large = half_sum + math.sqrt(radicand)
    if large == 0.0:
        return 0j, complex(half_sum - math.sqrt(radicand))
    return complex(large), complex(product / large)


def bad_cavity(params, derived):  # type: (object, object) -> bool
    """True when g sqrt(N) and Gamma are both below kappa/10."""
    limit = params.kappa / _params.BAD_CAVITY_MARGIN
    return params.g * math.sqrt(params.n_atoms) <= limit and derived.Gamma <= limit


def decay_rates(params, derived, state):
    """Decay constants l+-, zeros m+- and, in the ideal model, lambda+-.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): the linearization point.

    Returns:
        (DecayRates): exact values, with bad-cavity asymptotics when they apply.
    """
    plant = plant_polynomials(params, derived, state)
    kappa = params.kappa
    gamma = derived.Gamma
    z = _meanfield.normalized_inversion(state, derived)
    coupling = 2.0 * params.g ** 2 * params.n_atoms * z

    lp, lm = _quadratic_roots(
        (kappa + gamma) / 4.0, ((kappa - gamma) / 4.0) ** 2 + coupling, plant.poles_product
    )
    mp, mm = _quadratic_roots(
        (kappa - gamma) / 4.0, ((kappa + gamma) / 4.0) ** 2 + coupling, plant.zeros_product
    )

    asymptotic = None
    if bad_cavity(params, derived):
        asymptotic = AsymptoticRates(
            lp=kappa / 2.0,
            lm=gamma / 2.0 - 2.0 * coupling / kappa,
            mm=-gamma / 2.0 - 2.0 * coupling / kappa,
        )

    ideal = _meanfield.is_ideal(state)
    return DecayRates(
        lp=lp,
        lm=lm,
        mp=mp,
        mm=mm,
        ideal_lp=lp if ideal else None,
        ideal_lm=lm if ideal else None,
        asymptotic=asymptotic,
    )


def frequency_response(params, derived, state, omega):
    """Signal transfer R and every noise gain on a frequency grid.

    Returns:
        (FrequencyResponse): R in output quadrature per rad/s of detuning, and complex
            gains keyed by 'input_y', 'f_gamma', 'f_gamma_p' and 'f_gamma_d'.
    """
    plant = plant_polynomials(params, derived, state)
    omega = np.asarray(omega, dtype=float)
    s = 1j * omega
    denominator = response_denominator(plant, s)

    noise_gains = collections.OrderedDict()
    noise_gains[INPUT_CHANNEL] = input_numerator(plant, s) / denominator
    for channel, key in CHANNEL_PARAMS.items():
        rate = getattr(params, key)
        noise_gains[channel] = (
            params.g * math.sqrt(params.n_atoms * params.kappa * rate) / denominator
        )

    return FrequencyResponse(omega=omega, R=plant.gain / denominator, noise_gains=noise_gains)


def response_R(params, derived, state, omega):
    """Signal transfer R(omega) = g sqrt(kappa) (iJ) / ((i omega + l+)(i omega + l-)).

    R(0) is positive: a positive detuning raises the mean output Y quadrature.
    """
    plant = plant_polynomials(params, derived, state)
    s = 1j * np.asarray(omega, dtype=float)
    return plant.gain / response_denominator(plant, s)


def check_stable(state, force):
    if state.stability is _meanfield.Stability.Stable:
        return False
    if not force:
        raise _errors.UnstableState(
            "spectrum undefined on a %s steady state" % state.stability.value.lower()
        )
    logger.debug("evaluating spectrum on a %s state for diagnostics", state.stability.value)
    return True


def spectrum_S_Yout(params, derived, state, omega, force=False, raw=False):
    """Power spectral density of the output Y quadrature.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): a stable steady state.
        omega (float or np.array): Fourier frequencies in rad/s.
        force (bool): evaluate on unstable branches too, flagging the sample.
        raw (bool): return the quadrature PSD itself (shot noise = 1/4) instead of
            the shot-noise normalized value.

    Returns:
        (SpectrumSample): the PSD on the grid.

    Raises:
        UnstableState: when the state is not stable and force is False.
    """
    forced = check_stable(state, force)
    plant = plant_polynomials(params, derived, state)
    omega = np.asarray(omega, dtype=float)
    s = 1j * omega

    denominator_sq = np.abs(response_denominator(plant, s)) ** 2
    atomic = params.g ** 2 * params.n_atoms * params.kappa * derived.Gamma
    psd = (np.abs(input_numerator(plant, s)) ** 2 + atomic) / denominator_sq

    if raw:
        psd = psd * SHOT_NOISE_RAW
    return SpectrumSample(omega=omega, S_Yout=psd, forced=forced)


def spectrum_dc_closed_form(derived, z):  # type: (object, float) -> float
    """Zero-frequency output PSD, [(1 + 2 NC_eff z)^2 + 4 NC_eff] / (1 - 2 NC_eff z)^2."""
    if derived.ideal:
        return 1.0
    two_nc_z = 2.0 * derived.NC_eff * z
    return ((1.0 + two_nc_z) ** 2 + 4.0 * derived.NC_eff) / (1.0 - two_nc_z) ** 2


def default_omega_grid(params, derived, state, n=1000):
    """Log grid from 1e-3 Re(l-) to 1e3 kappa."""
    slowest = decay_rates(params, derived, state).lm.real
    if slowest <= 0:
        slowest = derived.Gamma if derived.Gamma > 0 else 1e-6 * params.kappa
    return np.geomspace(1e-3 * slowest, 1e3 * params.kappa, n)


def estimator_stats(params, derived, state, T):
    """Statistics of the integrated Y_out frequency estimator.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): a stable steady state.
        T (float): integration time in s.

    Returns:
        (EstimatorStats): slope |R(0)|, variance S_Yout(0)/(4T) and the squared
            detuning sensitivity variance/slope^2.
    """
    slowest = decay_rates(params, derived, state).lm.real
    if slowest > 0 and T < SHORT_INTEGRATION_FACTOR / slowest:
        message = "integration time %g s is shorter than %g/Re(l-) = %g s" % (
            T,
            SHORT_INTEGRATION_FACTOR,
            SHORT_INTEGRATION_FACTOR / slowest,
        )
        logger.warning(message)
        warnings.warn(message, _errors.TooShortIntegration)

    s_yout = float(spectrum_S_Yout(params, derived, state, 0.0).S_Yout)
    slope = float(abs(response_R(params, derived, state, 0.0)))
    variance = s_yout / (4.0 * T)

    return EstimatorStats(
        slope=slope, variance=variance, sensitivity_sq=variance / slope ** 2, T=T
    )
