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
"""Steady states, noise spectra and feedback linewidths of a coherently driven atom-cavity system."""
from __future__ import absolute_import


def analyze(params, outputs=None, options=None):  # type: (object, set, dict) -> object
    """Run every analytic output on one parameter set.

    Returns:
        PointReport: an instance of PointReport, one record per steady-state branch.
    """

    from cavity_lock import _sweep

    return _sweep.run_point(params, outputs or _sweep.POINT_OUTPUTS, options)
