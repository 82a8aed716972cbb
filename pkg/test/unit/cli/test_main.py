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

import pytest

from cavity_lock import _encoders, _sweep
from cavity_lock.cli import main

DARK_POINT_CONFIG = """
g = 0.0447213595499958
kappa = 20
gamma = 1
n_atoms = 10000
alpha_in_sq = 3750
n_segments = 32
n_trajectories = 2
"""


@pytest.fixture
def config(tmpdir):
    path = tmpdir.join("run.cfg")
    path.write(DARK_POINT_CONFIG)
    return str(path)


def _run(tmpdir, *argv):
    out = str(tmpdir.join("out.csv"))
    main.main(list(argv) + ["--out", out, "--workers", "1"])
    return _encoders.read_csv(out)


def test_point_preset(tmpdir):
    dataset = _run(tmpdir, "point", "--preset", "sr")

    (row,) = dataset.rows
    values = dict(zip(dataset.columns, row))
    assert values["regime"] == "DarkPoint"
    assert values["S_Yout_0"] == pytest.approx(20.0 / 3.0, rel=1e-3)
    assert values["delta_f_hz"] == pytest.approx(0.4706e-3, rel=1e-2)
    assert dataset.metadata["preset"] == "sr"


def test_point_config(tmpdir, config):
    dataset = _run(tmpdir, "point", "--config", config)

    assert dataset.column("S_Yout_0") == [pytest.approx(4.0, rel=1e-6)]
    assert dataset.column("error") == [None]
    assert len(dataset.metadata["config_sha256"]) == 64


def test_point_to_stdout(config, capsys):
    main.main(["point", "--config", config])

    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# version: ")
    assert lines[2] == ",".join(_sweep.COLUMNS)


def test_point_without_parameters_fails(tmpdir):
    with pytest.raises(ValueError) as e:
        _run(tmpdir, "point")

    assert e.value.args[0] == 1


def test_point_with_bad_config_fails(tmpdir):
    path = tmpdir.join("bad.cfg")
    path.write("kapa = 1\n")

    with pytest.raises(ValueError):
        _run(tmpdir, "point", "--config", str(path))


def test_linewidth_preset(tmpdir):
    dataset = _run(tmpdir, "linewidth", "--preset", "sr")

    assert dataset.column("regime") == ["DarkPoint"]
    assert dataset.column("omega_S")[0] > 0


def test_spectrum_preset(tmpdir):
    dataset = _run(tmpdir, "spectrum", "--preset", "sr")

    assert dataset.columns == list(_sweep.SPECTRUM_COLUMNS)
    assert len(dataset.rows) == 1000
    assert set(dataset.column("forced")) == {0}


def test_sweep_config(tmpdir):
    path = tmpdir.join("sweep.cfg")
    path.write(
        DARK_POINT_CONFIG + "axis1 = NC_eff lin 2 6 3\noutputs = steady_state, spectrum\n"
    )

    dataset = _run(tmpdir, "sweep", "--config", str(path))

    assert dataset.as_array("NC_eff") == pytest.approx([2.0, 4.0, 6.0])
    assert all(value > 1 for value in dataset.column("S_Yout_0"))


def test_sweep_without_axis_fails(tmpdir, config):
    with pytest.raises(ValueError):
        _run(tmpdir, "sweep", "--config", config)


def test_validate_config(tmpdir, config):
    dataset = _run(tmpdir, "validate", "--config", config, "--seed", "5")

    assert dataset.columns == ["omega_rad_s", "psd", "stderr", "analytic", "z"]
    assert dataset.rows[0][0] == 0.0
    assert dataset.rows[0][3] == pytest.approx(4.0, rel=1e-6)


def test_unknown_command():
    with pytest.raises(SystemExit):
        main.main(["lock"])
