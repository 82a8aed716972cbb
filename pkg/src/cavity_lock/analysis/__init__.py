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
"""Public namespace over the analysis modules."""
from __future__ import absolute_import

# flake8: noqa ignore=F401 imported but unused
from cavity_lock import _encoders as encoders
from cavity_lock import _env as env
from cavity_lock import _errors as errors
from cavity_lock import _feedback as feedback
from cavity_lock import _linear_response as linear_response
from cavity_lock import _logging as logging
from cavity_lock import _meanfield as meanfield
from cavity_lock import _oracle as stochastic_oracle
from cavity_lock import _params as params
from cavity_lock import _sweep as sweep


def system(g, kappa, gamma=0.0, gamma_d=0.0, gamma_p=0.0, n_atoms=1, alpha_in_sq=0.0):
    """SystemParams in rad/s together with their derived scales."""

    system_params = params.SystemParams(
        g=g,
        kappa=kappa,
        gamma=gamma,
        gamma_d=gamma_d,
        gamma_p=gamma_p,
        n_atoms=n_atoms,
        alpha_in_sq=alpha_in_sq,
    )
    return system_params, params.derive(system_params)
