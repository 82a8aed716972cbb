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

import pytest

from cavity_lock import _errors, _params
from test.systems import make_params, strontium

TWO_PI = 2.0 * math.pi


def test_derive_strontium():
    params, derived = strontium()

    assert derived.Gamma == pytest.approx(TWO_PI * 6.0)
    assert derived.gamma_parallel == pytest.approx(TWO_PI * 3.0)
    assert derived.NC_eff == pytest.approx(6.67, abs=0.1)
    assert derived.Cgamma == pytest.approx(4.0 * params.g ** 2 / params.kappa)
    assert derived.C == math.inf
    assert not derived.ideal


def test_derive_ideal():
    derived = _params.derive(_params.SystemParams(g=1.0, kappa=100.0, n_atoms=10))

    assert derived.ideal
    assert derived.NC_eff == math.inf
    assert math.isnan(derived.I0)
    assert derived.alpha_in_c_sq == pytest.approx(100.0 / 400.0)
    assert derived.NCgamma == pytest.approx(10 * 4.0 / 100.0)


def test_critical_flux_and_saturation_intensity():
    params = _params.SystemParams(g=2.0, kappa=8.0, gamma=1.0, gamma_p=1.0, gamma_d=2.0, n_atoms=3)
    derived = _params.derive(params)

    assert derived.alpha_in_c_sq == pytest.approx((2.0 * 3) ** 2 / (4.0 * 8.0))
    assert derived.I0 == pytest.approx(derived.alpha_in_c_sq * 2.0 / 4.0)
    assert derived.C_eff == pytest.approx(4.0 * 4.0 / (8.0 * 4.0))


@pytest.mark.parametrize(
    "changes, message",
    [
        ({"kappa": 0.0}, "kappa must be positive"),
        ({"g": -1.0}, "g must be positive"),
        ({"gamma_d": -1.0}, "gamma_d must be non-negative"),
        ({"n_atoms": 2.5}, "n_atoms must be an integer >= 1"),
        ({"n_atoms": 0}, "n_atoms must be an integer >= 1"),
        ({"alpha_in_sq": -1.0}, "alpha_in_sq must be non-negative"),
        ({"kappa": float("nan")}, "kappa must be a finite number"),
    ],
)
def test_validate_hard_errors(changes, message):
    params = _params.SystemParams(g=1.0, kappa=1e4, gamma=1.0, n_atoms=100)._replace(**changes)

    report = _params.validate(params)

    assert not report.ok
    assert message in report.errors

    with pytest.raises(_errors.InvalidParams) as e:
        _params.derive(params)
    assert message in str(e.value)


def test_validate_warns_outside_bad_cavity():
    params = _params.SystemParams(g=10.0, kappa=100.0, gamma=20.0, n_atoms=100)

    report = _params.validate(params)

    assert report.ok
    assert len(report.warnings) == 2
    assert all(w.startswith("bad-cavity approximation degraded") for w in report.warnings)


def test_validate_warns_strong_saturation():
    params, derived = make_params(nc_eff=4.0, ratio=20.0)

    report = _params.validate(params)

    assert report.ok
    assert [w for w in report.warnings if w.startswith("strong-saturation regime")]


def test_validate_clean_report_is_falsy():
    params, _ = make_params(nc_eff=4.0, ratio=1.0)

    report = _params.validate(params)

    assert report.ok
    assert not report


def test_to_angular():
    converted = _params.to_angular({"g": 4.0, "kappa": 1.0, "alpha_in_sq": 5.0, "n_atoms": 10}, "hz")

    assert converted["g"] == pytest.approx(TWO_PI * 4.0)
    assert converted["kappa"] == pytest.approx(TWO_PI)
    assert converted["alpha_in_sq"] == 5.0
    assert converted["n_atoms"] == 10

    assert _params.to_angular({"g": 4.0}, "rad") == {"g": 4.0}


def test_to_angular_rejects_unknown_units():
    with pytest.raises(_errors.ConfigError):
        _params.to_angular({"g": 1.0}, "khz")


def test_from_mapping():
    params = _params.from_mapping({"g": 1.0, "kappa": 2.0, "n_atoms": 3, "gamma": 0.5})

    assert params == _params.SystemParams(g=1.0, kappa=2.0, gamma=0.5, n_atoms=3.0)


def test_from_mapping_requires_core_keys():
    with pytest.raises(_errors.ConfigError) as e:
        _params.from_mapping({"g": 1.0})

    assert "kappa" in str(e.value)
    assert "n_atoms" in str(e.value)


@pytest.mark.parametrize("value", ["fast", None, [1.0, 2.0]])
def test_from_mapping_rejects_non_numeric_values(value):
    with pytest.raises(_errors.ConfigError) as e:
        _params.from_mapping({"g": 1.0, "kappa": value, "n_atoms": 3})

    assert "kappa" in str(e.value)


def test_to_angular_rejects_non_numeric_rates():
    with pytest.raises(_errors.ConfigError) as e:
        _params.to_angular({"g": 1.0, "gamma_p": "slow"}, "hz")

    assert "gamma_p" in str(e.value)



@pytest.mark.parametrize("nc_eff", [0.5, 4.0, 100.0, 1e4])
def test_scale_to_nc_eff(nc_eff):
    params, derived = make_params(nc_eff=nc_eff, gamma_p=2.0, gamma_d=0.5)

    assert derived.NC_eff == pytest.approx(nc_eff, rel=1e-12)
    assert params.kappa == 1e4
    assert params.gamma_p == 2.0


def test_scale_to_nc_eff_rejects_ideal():
    with pytest.raises(_errors.InvalidParams):
        _params.scale_to_nc_eff(_params.SystemParams(g=1.0, kappa=1.0, n_atoms=1), 4.0)


def test_with_drive_ratio():
    params, derived = make_params(nc_eff=10.0, ratio=0.75)

    assert params.alpha_in_sq / derived.I0 == pytest.approx(0.75, rel=1e-12)


def test_with_drive_theta():
    base = _params.SystemParams(g=1.0, kappa=100.0, n_atoms=10)
    params = _params.with_drive(base, theta=math.pi / 6.0)

    critical = _params.derive(base).alpha_in_c_sq
    assert params.alpha_in_sq == pytest.approx(critical / 4.0)


def test_with_drive_needs_exactly_one_target():
    base = _params.SystemParams(g=1.0, kappa=100.0, gamma=1.0, n_atoms=10)

    with pytest.raises(ValueError):
        _params.with_drive(base)
    with pytest.raises(ValueError):
        _params.with_drive(base, ratio=1.0, theta=1.0)


def test_with_drive_ratio_undefined_in_ideal_model():
    with pytest.raises(_errors.InvalidParams):
        _params.with_drive(_params.SystemParams(g=1.0, kappa=100.0, n_atoms=10), ratio=1.0)
