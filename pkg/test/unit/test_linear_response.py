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
from __future__ import absolute_import

import math

import numpy as np
import pytest

from cavity_lock import _errors, _linear_response, _meanfield
from test.systems import make_ideal, make_params, only_state, strontium, TWO_PI

OMEGA = np.geomspace(1e-3, 1e7, 500)


def test_ideal_spectrum_is_shot_noise_limited(ideal_system):
    params, derived = ideal_system
    state = only_state(params, derived)

    sample = _linear_response.spectrum_S_Yout(params, derived, state, OMEGA)

    np.testing.assert_allclose(sample.S_Yout, 1.0, rtol=0, atol=1e-12)
    assert not sample.forced


def test_raw_spectrum_uses_quarter_shot_noise(ideal_system):
    params, derived = ideal_system
    state = only_state(params, derived)

    sample = _linear_response.spectrum_S_Yout(params, derived, state, 1.0, raw=True)

    assert float(sample.S_Yout) == pytest.approx(0.25)


def test_spectrum_returns_to_shot_noise_far_above_kappa(dark_point_system):
    params, derived = dark_point_system
    state = only_state(params, derived)

    sample = _linear_response.spectrum_S_Yout(params, derived, state, 100.0 * params.kappa)

    assert float(sample.S_Yout) == pytest.approx(1.0, abs=1e-3)


def test_dark_point_spectrum_equals_cooperativity(dark_point_system):
    params, derived = dark_point_system
    state = only_state(params, derived)

    sample = _linear_response.spectrum_S_Yout(params, derived, state, 0.0)

    assert float(sample.S_Yout) == pytest.approx(4.0, rel=1e-9)


@pytest.mark.parametrize("ratio", [0.1, 1.5, 5.0, 20.0])
@pytest.mark.parametrize("nc_eff", [2.0, 4.0, 50.0])
def test_dc_spectrum_matches_closed_form(nc_eff, ratio):
    params, derived = make_params(nc_eff=nc_eff, ratio=ratio)

    for state in _meanfield.steady_states(params, derived):
        if state.stability is not _meanfield.Stability.Stable:
            continue
        sample = _linear_response.spectrum_S_Yout(params, derived, state, 0.0)
        expected = _linear_response.spectrum_dc_closed_form(derived, state.z)
        assert float(sample.S_Yout) == pytest.approx(expected, rel=1e-9)


def test_strong_field_spectrum_limit():
    params, derived = make_params(nc_eff=4.0, ratio=1e4)
    state = only_state(params, derived)

    sample = _linear_response.spectrum_S_Yout(params, derived, state, 0.0)

    assert float(sample.S_Yout) == pytest.approx(1.0 + 4.0 * 4.0, rel=1e-3)


def test_spectrum_refuses_unstable_branch(bistable_system):
    params, derived = bistable_system
    middle = _meanfield.steady_states(params, derived)[1]

    with pytest.raises(_errors.UnstableState):
        _linear_response.spectrum_S_Yout(params, derived, middle, OMEGA)

    sample = _linear_response.spectrum_S_Yout(params, derived, middle, OMEGA, force=True)
    assert sample.forced
    assert sample.S_Yout.shape == OMEGA.shape


def test_response_is_positive_at_dc(dark_point_system, ideal_system):
    for params, derived in (dark_point_system, ideal_system):
        state = only_state(params, derived)
        assert complex(_linear_response.response_R(params, derived, state, 0.0)).real > 0


def test_ideal_dc_response(ideal_system):
    params, derived = ideal_system
    state = only_state(params, derived)

    response = complex(_linear_response.response_R(params, derived, state, 0.0))

    assert response.imag == 0.0
    assert response.real == pytest.approx(
        math.sqrt(params.kappa) * math.tan(state.theta) / (2.0 * params.g)
    )


def test_frequency_response_channels(dark_point_system):
    params, derived = dark_point_system
    state = only_state(params, derived)

    response = _linear_response.frequency_response(params, derived, state, OMEGA)

    assert list(response.noise_gains) == ["input_y", "f_gamma", "f_gamma_p", "f_gamma_d"]
    np.testing.assert_array_equal(
        response.R, _linear_response.response_R(params, derived, state, OMEGA)
    )
    # gamma_d and gamma_p are zero in the fixture
    assert np.all(response.noise_gains["f_gamma_d"] == 0)


@pytest.mark.parametrize(
    "system",
    [make_params(nc_eff=4.0, ratio=1.5, gamma_d=0.5, gamma_p=0.25), make_ideal()],
    ids=["dark_point", "ideal"],
)
def test_responses_are_conjugate_symmetric(system):
    params, derived = system
    state = only_state(params, derived)
    omega = np.random.RandomState(5).uniform(0.0, 10.0 * params.kappa, 64)

    positive = _linear_response.frequency_response(params, derived, state, omega)
    negative = _linear_response.frequency_response(params, derived, state, -omega)

    np.testing.assert_allclose(negative.R, np.conj(positive.R), rtol=1e-12)
    np.testing.assert_allclose(
        _linear_response.response_R(params, derived, state, -omega),
        np.conj(_linear_response.response_R(params, derived, state, omega)),
        rtol=1e-12,
    )
    for channel, gain in positive.noise_gains.items():
        np.testing.assert_allclose(negative.noise_gains[channel], np.conj(gain), rtol=1e-12)



def test_noise_gains_rebuild_the_spectrum():
    params, derived = make_params(nc_eff=4.0, ratio=1.5, gamma_d=0.5, gamma_p=0.25)
    state = only_state(params, derived)

    response = _linear_response.frequency_response(params, derived, state, OMEGA)
    sample = _linear_response.spectrum_S_Yout(params, derived, state, OMEGA)

    total = sum(np.abs(gain) ** 2 for gain in response.noise_gains.values())
    np.testing.assert_allclose(total, sample.S_Yout, rtol=1e-10)


def test_decay_rates_match_plant(dark_point_system):
    params, derived = dark_point_system
    state = only_state(params, derived)

    rates = _linear_response.decay_rates(params, derived, state)
    plant = _linear_response.plant_polynomials(params, derived, state)

    assert (rates.lp * rates.lm).real == pytest.approx(plant.poles_product, rel=1e-12)
    assert (rates.lp + rates.lm).real == pytest.approx(plant.poles_sum, rel=1e-12)
    assert (rates.mp * rates.mm).real == pytest.approx(plant.zeros_product, rel=1e-12)
    assert rates.ideal_lp is None
    assert rates.asymptotic.lp == pytest.approx(rates.lp.real, rel=1e-3)
    assert rates.asymptotic.lm == pytest.approx(rates.lm.real, rel=1e-2)


def test_product_identities_over_random_draws():
    rng = np.random.RandomState(17)

    for _ in range(100):
        params, derived = make_params(
            nc_eff=10 ** rng.uniform(-1.0, 3.0),
            ratio=10 ** rng.uniform(-2.0, 1.0),
            kappa=10 ** rng.uniform(2.0, 4.0),
            gamma_d=rng.uniform(0.0, 1.0),
            gamma_p=rng.uniform(0.0, 2.0),
        )
        scale = params.kappa * derived.Gamma / 4.0

        for state in _meanfield.steady_states(params, derived):
            rates = _linear_response.decay_rates(params, derived, state)
            two_nc_z = 2.0 * derived.NC_eff * state.z
            tolerance = 1e-12 * scale * (1.0 + abs(two_nc_z))

            assert (rates.lp * rates.lm).real == pytest.approx(
                scale * (1.0 - two_nc_z), rel=1e-12
            )
            assert (rates.mp * rates.mm).real == pytest.approx(
                -scale * (1.0 + two_nc_z), rel=1e-12, abs=tolerance
            )



def test_decay_rates_ideal(ideal_system):
    params, derived = ideal_system
    state = only_state(params, derived)

    rates = _linear_response.decay_rates(params, derived, state)

    assert rates.ideal_lm == rates.lm
    assert rates.lm.real == pytest.approx(derived.NCgamma * math.cos(state.theta) / 2.0, rel=1e-3)


def test_no_asymptotics_outside_bad_cavity():
    params, derived = make_params(nc_eff=4.0, ratio=1.5, kappa=10.0)
    state = only_state(params, derived)

    assert not _linear_response.bad_cavity(params, derived)
    assert _linear_response.decay_rates(params, derived, state).asymptotic is None


def test_default_omega_grid(dark_point_system):
    params, derived = dark_point_system
    state = only_state(params, derived)

    grid = _linear_response.default_omega_grid(params, derived, state, n=50)

    lm = _linear_response.decay_rates(params, derived, state).lm.real
    assert len(grid) == 50
    assert grid[0] == pytest.approx(1e-3 * lm)
    assert grid[-1] == pytest.approx(1e3 * params.kappa)


def test_estimator_strontium_ideal():
    params, derived = strontium(ideal=True)
    state = only_state(params, derived)

    stats = _linear_response.estimator_stats(params, derived, state, T=1.0)

    assert stats.variance == pytest.approx(0.25)
    assert math.sqrt(stats.sensitivity_sq) == pytest.approx(0.02507, rel=2e-3)

    fractional = math.sqrt(stats.sensitivity_sq) / (TWO_PI * 4.292e14)
    assert 0.5e-17 < fractional < 2e-17


def test_estimator_warns_on_short_integration(dark_point_system):
    params, derived = dark_point_system
    state = only_state(params, derived)
    lm = _linear_response.decay_rates(params, derived, state).lm.real

    with pytest.warns(_errors.TooShortIntegration):
        stats = _linear_response.estimator_stats(params, derived, state, T=1.0 / lm)

    assert stats.T == pytest.approx(1.0 / lm)
