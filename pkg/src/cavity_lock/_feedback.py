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
"""Frequency feedback: residual noise, effective linewidth, corner frequencies and the servo loop."""
from __future__ import absolute_import

import collections
import enum
import math

import numpy as np
from scipy import optimize

from cavity_lock import _errors, _linear_response, _logging, _meanfield, _params

logger = _logging.get_logger()

DARK_POINT_TOLERANCE = 1e-9  # type: float
CORNER_SEPARATION = 2.0  # type: float
INTEGRATOR_RATIO = 10.0  # type: float
LOW_FREQUENCY_RATIO = 20.0  # type: float
MIN_LOW_FREQUENCY_GAIN = 10.0  # type: float


class Regime(enum.Enum):
    """Operating regime of a steady state."""

    Ideal = "Ideal"
    StrongField = "StrongField"
    DarkPoint = "DarkPoint"
    General = "General"


class FilterKind(enum.Enum):
    """Placeholder docstring"""

    PI = "PI"


CornerFrequencies = collections.namedtuple(
    "CornerFrequencies", "omega_S omega_R omega_S_asymptotic omega_R_asymptotic resolved"
)

LinewidthReport = collections.namedtuple(
    "LinewidthReport",
    "delta_f omega_S omega_R regime linear_range two_pi_delta_f strong_field_delta_f corners",
)

LoopFilter = collections.namedtuple("LoopFilter", "kind gain corner ugf")

LoopStability = collections.namedtuple(
    "LoopStability", "stable encirclements closed_loop_poles phase_margin"
)

OptimalLinewidth = collections.namedtuple(
    "OptimalLinewidth", "z alpha_in_sq delta_f dark_point_delta_f"
)


def residual_noise_spectrum(params, derived, state, omega, force=False):
    """High-gain residual frequency noise S_Delta = S_N / |R|^2 in rad^2/s^2 per rad/s.

    S_N is the output-quadrature noise PSD (shot noise = 1/4).
    """
    noise = _linear_response.spectrum_S_Yout(params, derived, state, omega, force=force, raw=True)
    response = _linear_response.response_R(params, derived, state, omega)
    with np.errstate(divide="ignore"):
        return noise.S_Yout / np.abs(response) ** 2


def _dephasing_factor(derived):
    return derived.Gamma / derived.gamma_parallel


def linewidth_closed_form(params, derived, state):
    """2 pi Delta f from the closed form of the branch (ideal or non-ideal), in rad/s."""
    if _meanfield.is_ideal(state):
        sin_theta = math.sin(state.theta)
        if sin_theta == 0.0:
            return math.inf
        return derived.Cgamma * (math.cos(state.theta) / sin_theta) ** 2 / 4.0

    q = derived.NC_eff
    two_qz = 2.0 * q * state.z
    numerator = (1.0 + two_qz) ** 2 + 4.0 * q
    denominator = 2.0 * (q + two_qz) * (-two_qz)
    with np.errstate(divide="ignore"):
        return derived.Cgamma / 4.0 * _dephasing_factor(derived) * numerator / denominator


def strong_field_linewidth(params, derived):
    """Strong-drive approximation of 2 pi Delta f, in rad/s."""
    return (
        derived.Cgamma
        / 4.0
        * _dephasing_factor(derived)
        * params.alpha_in_sq
        / (4.0 * derived.I0)
        * (1.0 + 4.0 * derived.NC_eff)
    )


def dark_point_linewidth(derived):
    """2 pi Delta f at the dark point, in rad/s; None when NC_eff <= 1."""
    q = derived.NC_eff
    if not q > 1.0:
        return None
    return derived.Cgamma / 2.0 * _dephasing_factor(derived) * q / (q - 1.0)


def reference_linewidth(derived):
    """Linewidth unit Delta f_0 = (Cgamma/4)(Gamma/(gamma + gamma_p)) / (4 pi), in Hz."""
    return derived.Cgamma / 4.0 * _dephasing_factor(derived) / (4.0 * math.pi)


def _solve_log_crossing(ratio, upper):
    """Frequency where ``ratio`` (1 at omega = 0) reaches 2, bracketed in log frequency."""

    def crossing(log_omega):
        return math.log(ratio(math.exp(log_omega))) - math.log(2.0)

    low = math.log(upper) - 50.0
    high = math.log(upper) + 15.0
    return math.exp(optimize.brentq(crossing, low, high, xtol=1e-14, rtol=1e-14))


def corner_frequencies(params, derived, state, strict=False):
    """Corners of the residual noise (S_Delta doubles) and of the response (|R|^2 halves).

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): the steady state.
        strict (bool): raise when a corner is not resolved from the kappa/2 corner.

    Returns:
        (CornerFrequencies): numeric corners, asymptotic forms in the bad-cavity regime and
            a flag telling whether both corners sit a factor 2 below kappa/2.

    Raises:
        CornerNotResolved: only when strict is True.
    """
    plant = _linear_response.plant_polynomials(params, derived, state)
    atomic = params.g ** 2 * params.n_atoms * params.kappa * derived.Gamma
    noise_dc = plant.zeros_product ** 2 + atomic

    def noise_ratio(omega):
        value = _linear_response.input_numerator(plant, 1j * omega)
        return (abs(value) ** 2 + atomic) / noise_dc

    def response_ratio(omega):
        value = _linear_response.response_denominator(plant, 1j * omega)
        return abs(value) ** 2 / plant.poles_product ** 2

    omega_s = _solve_log_crossing(noise_ratio, params.kappa)
    omega_r = _solve_log_crossing(response_ratio, params.kappa)

    omega_s_asymptotic = omega_r_asymptotic = None
    rates = _linear_response.decay_rates(params, derived, state)
    if rates.asymptotic is not None:
        atomic_corner_sq = 4.0 * params.g ** 2 * params.n_atoms * derived.Gamma / params.kappa
        omega_s_asymptotic = math.sqrt(rates.asymptotic.mm ** 2 + atomic_corner_sq)
        omega_r_asymptotic = rates.asymptotic.lm

    cavity_corner = params.kappa / 2.0
    resolved = max(omega_s, omega_r) * CORNER_SEPARATION < cavity_corner

    if not resolved:
        if strict:
            raise _errors.CornerNotResolved(omega_s, omega_r, cavity_corner)
        logger.warning(
            "corner frequencies omega_S=%g, omega_R=%g are not resolved from kappa/2=%g",
            omega_s,
            omega_r,
            cavity_corner,
        )

    return CornerFrequencies(
        omega_S=omega_s,
        omega_R=omega_r,
        omega_S_asymptotic=omega_s_asymptotic,
        omega_R_asymptotic=omega_r_asymptotic,
        resolved=resolved,
    )


def _regime(params, derived, state):
    if _meanfield.is_ideal(state):
        return Regime.Ideal
    if abs(state.z + 1.0 / (2.0 * derived.NC_eff)) < DARK_POINT_TOLERANCE:
        return Regime.DarkPoint
    if params.alpha_in_sq > _params.STRONG_SATURATION_RATIO * derived.I0:
        return Regime.StrongField
    return Regime.General


def _linear_range(params, derived, state, regime):
    if regime in (Regime.Ideal, Regime.DarkPoint):
        return derived.NCgamma
    if regime is Regime.StrongField:
        return derived.NCgamma * math.sqrt(params.alpha_in_sq / (8.0 * derived.I0))
    try:
        return _meanfield.dispersive_extremum(params, derived, state).delta0
    except _errors.NoConvergence as e:
        logger.warning("linear range unavailable: %s", e)
        return math.nan


def effective_linewidth(params, derived, state, force=False):
    """Effective linewidth and operating regime of a steady state.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): a stable steady state.
        force (bool): evaluate unstable branches too (their corners are skipped).

    Returns:
        (LinewidthReport): Delta f in Hz with S_Delta(0) = 2 pi Delta f, the corner
            frequencies, the regime tag and the linear detuning range.
    """
    forced = _linear_response.check_stable(state, force)

    two_pi_delta_f = linewidth_closed_form(params, derived, state)
    regime = _regime(params, derived, state)

    strong_field = None
    if regime is Regime.StrongField:
        strong_field = strong_field_linewidth(params, derived) / (2.0 * math.pi)

    corners = None
    omega_s = omega_r = math.nan
    if not forced:
        corners = corner_frequencies(params, derived, state)
        omega_s, omega_r = corners.omega_S, corners.omega_R

    return LinewidthReport(
        delta_f=two_pi_delta_f / (2.0 * math.pi),
        omega_S=omega_s,
        omega_R=omega_r,
        regime=regime,
        linear_range=_linear_range(params, derived, state, regime) if not forced else math.nan,
        two_pi_delta_f=two_pi_delta_f,
        strong_field_delta_f=strong_field,
        corners=corners,
    )


def optimal_linewidth(params, derived):
    """Drive minimizing the closed-form linewidth over the inversion z.

    Returns:
        (OptimalLinewidth): optimal z, alpha_in^2, Delta f (Hz) and, when it exists,
            the dark-point Delta f for comparison.
    """
    q = derived.NC_eff
    a = 1.0 / (2.0 * q)

    def linewidth(z):
        two_qz = 2.0 * q * z
        return ((1.0 + two_qz) ** 2 + 4.0 * q) / (2.0 * (q + two_qz) * (-two_qz))

    result = optimize.minimize_scalar(
        linewidth, bounds=(-0.5 + 1e-12, -1e-12), method="bounded", options={"xatol": 1e-12}
    )
    z = result.x
    alpha_in_sq = -8.0 * derived.I0 * (z + 0.5) * (z - a) ** 2 / z
    unit = derived.Cgamma / 4.0 * _dephasing_factor(derived) / (2.0 * math.pi)

    dark = dark_point_linewidth(derived)
    return OptimalLinewidth(
        z=z,
        alpha_in_sq=alpha_in_sq,
        delta_f=unit * result.fun,
        dark_point_delta_f=dark / (2.0 * math.pi) if dark is not None else None,
    )


def beta(loop_filter, omega):
    """Filter transfer K (1 + omega_I / (i omega)); infinite at omega = 0."""
    s = 1j * np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return loop_filter.gain * (1.0 + loop_filter.corner / s)


def _loop_transfer(plant, loop_filter, s):
    denominator = _linear_response.response_denominator(plant, s)
    return loop_filter.gain * (1.0 + loop_filter.corner / s) * plant.gain / denominator


def loop_gain(params, derived, state, loop_filter, omega):
    """Open-loop transfer beta(omega) R(omega)."""
    return beta(loop_filter, omega) * _linear_response.response_R(params, derived, state, omega)


def design_loop_filter(params, derived, state, ugf):
    """PI filter with unity loop gain at ``ugf`` and its integrator corner at ugf/10.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): the lock point.
        ugf (float): unity-gain frequency in rad/s.

    Returns:
        (LoopFilter): the filter.

    Raises:
        InfeasibleUGF: unless 0 < ugf < Re(l+)/2 and ugf < kappa/4.
    """
    rates = _linear_response.decay_rates(params, derived, state)
    if not 0 < ugf < rates.lp.real / 2.0 or not ugf < params.kappa / 4.0:
        raise _errors.InfeasibleUGF(
            "unity-gain frequency %g rad/s needs 0 < ugf < min(Re(l+)/2=%g, kappa/4=%g)"
            % (ugf, rates.lp.real / 2.0, params.kappa / 4.0)
        )

    corner = ugf / INTEGRATOR_RATIO
    shape = LoopFilter(kind=FilterKind.PI, gain=1.0, corner=corner, ugf=ugf)
    gain = 1.0 / abs(loop_gain(params, derived, state, shape, ugf))
    loop_filter = shape._replace(gain=gain)

    low_gain = abs(loop_gain(params, derived, state, loop_filter, ugf / LOW_FREQUENCY_RATIO))
    if low_gain < MIN_LOW_FREQUENCY_GAIN:
        logger.warning(
            "loop gain %g at ugf/%g is below %g: the plant is flat up to the unity-gain frequency",
            low_gain,
            LOW_FREQUENCY_RATIO,
            MIN_LOW_FREQUENCY_GAIN,
        )
    return loop_filter


def phase_margin(params, derived, state, loop_filter):
    """Phase margin in degrees at the filter's unity-gain frequency."""
    value = loop_gain(params, derived, state, loop_filter, loop_filter.ugf)
    return 180.0 + math.degrees(np.angle(value))


def _nyquist_encirclements(plant, loop_filter, low, high, points):
    axis = np.geomspace(low, high, points)
    arc = points // 4
    contour = np.concatenate(
        [
            -1j * axis[::-1],
            low * np.exp(1j * np.linspace(-np.pi / 2.0, np.pi / 2.0, arc)),
            1j * axis,
            high * np.exp(1j * np.linspace(np.pi / 2.0, -np.pi / 2.0, arc)),
        ]
    )
    values = 1.0 + _loop_transfer(plant, loop_filter, contour)
    phase = np.unwrap(np.angle(values))
    # the contour runs clockwise around the right half plane
    return int(round(-(phase[-1] - phase[0]) / (2.0 * np.pi)))


def _open_loop_rhp_poles(plant):
    """Right-half-plane poles of the plant; poles_sum = (kappa + Gamma)/2 is never negative.

    The product is (kappa Gamma/4)(1 - 2 NC_eff z), positive on every physical branch.
    """
    return 1 if plant.poles_product < 0 else 0


def loop_stability(params, derived, state, loop_filter, points=8000):
    """Nyquist test of the closed loop, cross-checked by its characteristic polynomial.

    Returns:
        (LoopStability): stable flag, number of closed-loop right-half-plane poles from
            the Nyquist winding, the polynomial's roots and the phase margin.
    """
    plant = _linear_response.plant_polynomials(params, derived, state)
    loop = loop_filter.gain * plant.gain

    characteristic = [1.0, plant.poles_sum, plant.poles_product + loop, loop * loop_filter.corner]
    poles = np.roots(characteristic)

    scales = [params.kappa, loop_filter.corner, loop_filter.ugf, math.sqrt(abs(loop))]
    rates = _linear_response.decay_rates(params, derived, state)
    slow = [value for value in (loop_filter.corner, abs(rates.lm), loop_filter.ugf) if value > 0]
    low = 1e-6 * min(slow)
    high = 1e4 * max(scales)

    # clockwise encirclements of -1 count closed-loop minus open-loop unstable poles
    encirclements = _nyquist_encirclements(plant, loop_filter, low, high, points) + (
        _open_loop_rhp_poles(plant)
    )
    stable = encirclements == 0

    if stable != bool(np.all(poles.real < 0)):
        logger.warning(
            "Nyquist count %d disagrees with closed-loop poles %s", encirclements, poles
        )

    return LoopStability(
        stable=stable,
        encirclements=encirclements,
        closed_loop_poles=poles,
        phase_margin=phase_margin(params, derived, state, loop_filter),
    )


def bare_suppression(params, derived, state, loop_filter, omega):
    """Power suppression 1/|1 + beta R|^2 of the free-running detuning noise."""
    inverse = _inverse_beta(loop_filter, omega)
    response = _linear_response.response_R(params, derived, state, omega)
    return np.abs(inverse) ** 2 / np.abs(inverse + response) ** 2


def _inverse_beta(loop_filter, omega):
    s = 1j * np.asarray(omega, dtype=float)
    return s / (loop_filter.gain * (s + loop_filter.corner))


def closed_loop_spectrum(params, derived, state, loop_filter, bare_spectrum, omega):
    """Finite-gain residual detuning PSD.

    S_cl = (S_bare + |beta|^2 S_N) / |1 + beta R|^2, evaluated as
    (S_bare / |beta|^2 + S_N) / |1/beta + R|^2 so that omega = 0 is regular.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): the lock point.
        loop_filter (LoopFilter): the servo filter.
        bare_spectrum (callable or float or np.array): free-running detuning PSD.
        omega (float or np.array): Fourier frequencies in rad/s.

    Returns:
        (np.array): the closed-loop PSD.

    Raises:
        UnstableLoop: when 1 + beta R has right-half-plane zeros.
    """
    stability = loop_stability(params, derived, state, loop_filter)
    if not stability.stable:
        raise _errors.UnstableLoop(
            "closed loop has %d right-half-plane poles (phase margin %.1f deg)"
            % (stability.encirclements, stability.phase_margin)
        )

    omega = np.asarray(omega, dtype=float)
    bare = bare_spectrum(omega) if callable(bare_spectrum) else bare_spectrum
    bare = np.broadcast_to(np.asarray(bare, dtype=float), omega.shape)

    noise = _linear_response.spectrum_S_Yout(params, derived, state, omega, raw=True).S_Yout
    inverse = _inverse_beta(loop_filter, omega)
    response = _linear_response.response_R(params, derived, state, omega)

    return (np.abs(inverse) ** 2 * bare + noise) / np.abs(inverse + response) ** 2
