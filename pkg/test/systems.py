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
"""Parameter sets shared by the unit and functional tests."""
from __future__ import absolute_import

import math

from cavity_lock import _meanfield, _params

TWO_PI = 2.0 * math.pi


def make_params(nc_eff=4.0, ratio=None, theta=None, kappa=1e4, gamma=1.0, n_atoms=1e4, **rates):
    """Non-ideal parameters scaled to ``nc_eff``, driven at ``ratio`` = alpha_in^2 / I0."""
    base = _params.SystemParams(g=1.0, kappa=kappa, gamma=gamma, n_atoms=n_atoms, **rates)
    params = _params.scale_to_nc_eff(base, nc_eff)
    if ratio is not None or theta is not None:
        params = _params.with_drive(params, ratio=ratio, theta=theta)
    return params, _params.derive(params)


def make_ideal(theta=math.pi / 4.0, nc_gamma=1.0, kappa=1e4, n_atoms=1e4):
    """Ideal parameters with N C gamma = ``nc_gamma``, driven at Bloch angle ``theta``."""
    g = math.sqrt(nc_gamma * kappa / (4.0 * n_atoms))
    base = _params.SystemParams(g=g, kappa=kappa, n_atoms=n_atoms)
    params = _params.with_drive(base, theta=theta)
    return params, _params.derive(params)


def only_state(params, derived):
    states = _meanfield.steady_states(params, derived)
    assert len(states) == 1
    return states[0]


def strontium(ideal=False):
    if ideal:
        params = _params.SystemParams(g=TWO_PI * 4.0, kappa=TWO_PI * 1.6e5, n_atoms=1e5)
        params = _params.with_drive(params, theta=math.pi / 4.0)
    else:
        params = _params.SystemParams(
            g=TWO_PI * 4.0,
            kappa=TWO_PI * 1.6e5,
            gamma=0.0,
            gamma_d=TWO_PI * 3.0,
            gamma_p=TWO_PI * 3.0,
            n_atoms=1e5,
        )
        dark = _meanfield.dark_point(_params.derive(params))
        params = params._replace(alpha_in_sq=dark.alpha_in_sq)
    return params, _params.derive(params)


