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

from cavity_lock import _encoders
from cavity_lock.cli import main


def _point(tmpdir, preset, command="point"):
    out = str(tmpdir.join("%s.csv" % preset))
    main.main([command, "--preset", preset, "--out", out, "--workers", "1"])
    (row,) = _encoders.read_csv(out).rows
    return dict(zip(_encoders.read_csv(out).columns, row))


def test_strontium_dark_point(tmpdir):
    values = _point(tmpdir, "sr")

    assert values["NC_eff"] == pytest.approx(6.667, rel=1e-3)
    assert values["delta_f_hz"] == pytest.approx(0.4706e-3, rel=1e-2)
    assert values["alpha_out_over_alpha_in"] == pytest.approx(0.0, abs=1e-9)
    assert values["dark_point_ratio"] == pytest.approx(values["alpha_in_sq_over_I0"])


def test_strontium_ideal(tmpdir):
    values = _point(tmpdir, "sr-ideal")

    assert values["theta"] == pytest.approx(math.pi / 4.0)
    assert values["S_Yout_0"] == pytest.approx(1.0, abs=1e-12)
    assert values["regime"] == "Ideal"


def test_strontium_linewidth_command(tmpdir):
    values = _point(tmpdir, "sr", command="linewidth")

    assert values["regime"] == "DarkPoint"
    assert values["omega_S"] > values["omega_R"] > 0
