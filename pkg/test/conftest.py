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

from mock import patch
import pytest

from test.systems import make_ideal, make_params


@pytest.fixture
def dark_point_system():
    return make_params(nc_eff=4.0, ratio=1.5)


@pytest.fixture
def strong_field_system():
    return make_params(nc_eff=4.0, ratio=20.0)


@pytest.fixture
def ideal_system():
    return make_ideal()


@pytest.fixture
def bistable_system():
    return make_params(nc_eff=100.0, ratio=0.25)


@pytest.fixture(autouse=True)
def patch_exit_process():
    def _exit(error_code):
        if error_code:
            raise ValueError(error_code)

    with patch("cavity_lock._driver._exit_processes", _exit):
        yield _exit
