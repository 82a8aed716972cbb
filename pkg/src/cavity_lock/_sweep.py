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
"""Single-point reports and 1D/2D parameter sweeps emitted as CSV datasets."""
from __future__ import absolute_import

import collections
import concurrent.futures
import itertools
import math

import numpy as np
import six

from cavity_lock import (
    _encoders,
    _errors,
    _feedback,
    _linear_response,
    _logging,
    _meanfield,
    _oracle,
    _params,
)

logger = _logging.get_logger()

ALPHA_AXIS = "alpha_in_sq_over_I0"
NC_AXIS = "NC_eff"
GAMMA_P_AXIS = "gamma_p"
THETA_AXIS = "theta"
AXIS_NAMES = (ALPHA_AXIS, NC_AXIS, GAMMA_P_AXIS, THETA_AXIS)  # type: tuple

LIN_SCALE = "lin"
LOG_SCALE = "log"

STEADY_STATE_OUTPUT = "steady_state"
SPECTRUM_OUTPUT = "spectrum"
LINEWIDTH_OUTPUT = "linewidth"
CORNERS_OUTPUT = "corners"
VALIDATE_OUTPUT = "validate"
OUTPUTS = (
    STEADY_STATE_OUTPUT,
    SPECTRUM_OUTPUT,
    LINEWIDTH_OUTPUT,
    CORNERS_OUTPUT,
    VALIDATE_OUTPUT,
)  # type: tuple
POINT_OUTPUTS = frozenset(OUTPUTS) - {VALIDATE_OUTPUT}

COLUMNS = (
    NC_AXIS,
    ALPHA_AXIS,
    THETA_AXIS,
    GAMMA_P_AXIS,
    "branch_id",
    "stability",
    "z",
    "alpha_out_over_alpha_in",
    "residual",
    "window_lower",
    "window_upper",
    "fold_lower",
    "fold_upper",
    "dark_point_ratio",
    "S_Yout_0",
    "delta_f_hz",
    "delta_f_over_delta_f0",
    "regime",
    "omega_S",
    "omega_R",
    "oracle_max_z",
    "oracle_passed",
    "error",
)  # type: tuple

SPECTRUM_COLUMNS = ("omega_rad_s", "branch_id", "stability", "S_Yout", "forced")  # type: tuple


class Axis(collections.namedtuple("Axis", "name scale min max n values")):
    """One sweep axis; explicit ``values`` take precedence over the (min, max, n) grid."""

    __slots__ = ()

    def grid(self):  # type: () -> np.array
        """Placeholder docstring"""
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.scale == LOG_SCALE:
            return np.geomspace(self.min, self.max, self.n)
        return np.linspace(self.min, self.max, self.n)


Axis.__new__.__defaults__ = (None,)

SweepConfig = collections.namedtuple("SweepConfig", "base axis1 axis2 outputs preset")
SweepConfig.__new__.__defaults__ = (None, frozenset([STEADY_STATE_OUTPUT]), None)

BranchRecord = collections.namedtuple(
    "BranchRecord", "state residual S_Yout_0 linewidth estimator oracle error"
)

PointReport = collections.namedtuple(
    "PointReport", "params derived validation window folds dark_point branches error"
)


def make_axis(name, scale, minimum, maximum, n, values=None, units=_params.RAD_UNITS):
    """Validated Axis; gamma_p bounds are converted to rad/s when ``units`` is hz.

    Raises:
        ConfigError: on an unknown name or scale, n < 2 or a non-positive log bound.
    """
    if name not in AXIS_NAMES:
        raise _errors.ConfigError(
            "unknown axis %r, allowed axes are %s" % (name, ", ".join(AXIS_NAMES))
        )
    if scale not in (LIN_SCALE, LOG_SCALE):
        raise _errors.ConfigError("axis scale must be '%s' or '%s'" % (LIN_SCALE, LOG_SCALE))

    if values is not None:
        values = tuple(float(v) for v in values)
        n = len(values)
    if int(n) < 2:
        raise _errors.ConfigError("axis %s needs n >= 2 points, got %s" % (name, n))
    if scale == LOG_SCALE and values is None and not (minimum > 0 and maximum > 0):
        raise _errors.ConfigError("log axis %s needs positive bounds" % name)

    factor = 2.0 * math.pi if name == GAMMA_P_AXIS and units == _params.HZ_UNITS else 1.0
    if values is not None:
        values = tuple(factor * v for v in values)
    return Axis(
        name=name,
        scale=scale,
        min=factor * float(minimum),
        max=factor * float(maximum),
        n=int(n),
        values=values,
    )


def parse_axis(spec, units=_params.RAD_UNITS):
    """Axis from a config value ``"name scale min max n"`` (string or list)."""
    fields = spec.split() if isinstance(spec, six.string_types) else list(spec)
    if len(fields) != 5:
        raise _errors.ConfigError(
            "axis %r must read 'name scale min max n', allowed axes are %s"
            % (spec, ", ".join(AXIS_NAMES))
        )
    name, scale, minimum, maximum, n = fields
    try:
        return make_axis(name, scale, float(minimum), float(maximum), int(n), units=units)
    except ValueError:
        raise _errors.ConfigError("axis %r has non-numeric bounds or count" % (spec,))


def parse_outputs(value):  # type: (object) -> frozenset
    """Placeholder docstring"""
    names = value.replace(",", " ").split() if isinstance(value, six.string_types) else value
    unknown = sorted(set(names) - set(OUTPUTS))
    if unknown:
        raise _errors.ConfigError(
            "unknown outputs %s, allowed outputs are %s" % (unknown, ", ".join(OUTPUTS))
        )
    return frozenset(names)


def apply_axes(base, values):  # type: (_params.SystemParams, dict) -> _params.SystemParams
    """Parameters at one sweep point.

    gamma_p is set first, NC_eff then rescales g, and the drive (alpha_in^2/I0 or theta)
    is set last because I0 depends on both.
    """
    params = base
    if GAMMA_P_AXIS in values:
        params = params._replace(gamma_p=float(values[GAMMA_P_AXIS]))
    if NC_AXIS in values:
        params = _params.scale_to_nc_eff(params, float(values[NC_AXIS]))
    if ALPHA_AXIS in values:
        params = _params.with_drive(params, ratio=float(values[ALPHA_AXIS]))
    elif THETA_AXIS in values:
        params = _params.with_drive(params, theta=float(values[THETA_AXIS]))
    return params


def _branch_record(params, derived, state, outputs, options):
    stable = state.stability is _meanfield.Stability.Stable
    residual = 0.0
    if not derived.ideal:
        residual = _meanfield.inversion_residual(derived, params.alpha_in_sq, state.z)

    s_yout_0 = linewidth = estimator = oracle = error = None
    try:
        if SPECTRUM_OUTPUT in outputs:
            s_yout_0 = float(
                _linear_response.spectrum_S_Yout(
                    params, derived, state, 0.0, force=not stable
                ).S_Yout
            )
        if LINEWIDTH_OUTPUT in outputs or CORNERS_OUTPUT in outputs:
            linewidth = _feedback.effective_linewidth(params, derived, state, force=not stable)
        if stable and options.get("T"):
            estimator = _linear_response.estimator_stats(
                params, derived, state, float(options["T"])
            )
        if stable and VALIDATE_OUTPUT in outputs:
            sim = _oracle.default_sim_config(
                params, derived, state, seed=int(options.get("seed", 0))
            )
            oracle = _oracle.validate_spectrum(
                params, derived, state, sim, workers=int(options.get("workers", 1))
            )
    except _errors.ClientError as e:
        logger.warning("branch %s: %s", getattr(state, "branch_id", 0), e)
        error = e

    return BranchRecord(
        state=state,
        residual=residual,
        S_Yout_0=s_yout_0,
        linewidth=linewidth,
        estimator=estimator,
        oracle=oracle,
        error=error,
    )


def run_point(params, outputs=POINT_OUTPUTS, options=None):
    """Full report of one parameter set, one record per steady-state branch.

    Hard failures (invalid parameters, a drive above threshold) are recorded in the
    report instead of being raised, so that sweeps can carry them row by row.

    Args:
        params (SystemParams): parameter set in rad/s.
        outputs (set[str]): which quantities to evaluate on each branch.
        options (dict): run options; ``T`` adds estimator statistics, ``seed`` and
            ``workers`` drive the oracle when 'validate' is requested.

    Returns:
        (PointReport): validation findings, window, folds, dark point and branches.
    """
    options = options or {}
    validation = _params.validate(params)
    for warning in validation.warnings:
        logger.warning(warning)

    empty = PointReport(
        params=params,
        derived=None,
        validation=validation,
        window=None,
        folds=[],
        dark_point=None,
        branches=[],
        error=None,
    )
    try:
        derived = _params.derive(params)
    except _errors.ClientError as e:
        return empty._replace(error=e)

    report = empty._replace(derived=derived)
    if not derived.ideal:
        report = report._replace(
            window=_meanfield.bistability_window(derived),
            folds=_meanfield.fold_points(derived),
            dark_point=_meanfield.dark_point(derived),
        )

    try:
        states = _meanfield.steady_states(params, derived)
    except _errors.ClientError as e:
        logger.warning("no steady state: %s", e)
        return report._replace(error=e)

    branches = [_branch_record(params, derived, state, outputs, options) for state in states]
    return report._replace(branches=branches)


def _ratio(params, derived):
    if derived is None or not derived.i0_defined:
        return math.nan
    return params.alpha_in_sq / derived.I0


def _point_columns(report):
    params, derived = report.params, report.derived
    nc_eff = derived.NC_eff if derived is not None else math.nan
    window = report.window
    folds = sorted(fold.drive for fold in report.folds)
    dark = report.dark_point

    return {
        NC_AXIS: nc_eff,
        ALPHA_AXIS: _ratio(params, derived),
        GAMMA_P_AXIS: params.gamma_p,
        "window_lower": window.lower if window else math.nan,
        "window_upper": window.upper if window else math.nan,
        "fold_lower": folds[0] if len(folds) == 2 else math.nan,
        "fold_upper": folds[1] if len(folds) == 2 else math.nan,
        "dark_point_ratio": dark.alpha_in_sq / derived.I0 if dark else math.nan,
    }


def _branch_columns(report, branch):
    params, derived, state = report.params, report.derived, branch.state
    alpha_in = math.sqrt(params.alpha_in_sq)

    columns = {
        THETA_AXIS: state.theta if _meanfield.is_ideal(state) else math.nan,
        "branch_id": getattr(state, "branch_id", 0),
        "stability": state.stability.value,
        "z": _meanfield.normalized_inversion(state, derived),
        "alpha_out_over_alpha_in": complex(state.alpha_out).real / alpha_in
        if alpha_in > 0
        else math.nan,
        "residual": branch.residual,
        "S_Yout_0": branch.S_Yout_0,
        "error": type(branch.error).__name__ if branch.error else "",
    }

    linewidth = branch.linewidth
    if linewidth is not None:
        reference = _feedback.reference_linewidth(derived) if derived.i0_defined else math.nan
        columns.update(
            {
                "delta_f_hz": linewidth.delta_f,
                "delta_f_over_delta_f0": linewidth.delta_f / reference,
                "regime": linewidth.regime.value,
                "omega_S": linewidth.omega_S,
                "omega_R": linewidth.omega_R,
            }
        )
    if branch.oracle is not None:
        columns["oracle_max_z"] = branch.oracle.max_z
        columns["oracle_passed"] = int(branch.oracle.passed)
    return columns


def point_rows(report):  # type: (PointReport) -> list
    """Rows over COLUMNS, one per branch, or a single error row; unset cells are None."""
    point = _point_columns(report)

    if report.error is not None or not report.branches:
        point["error"] = type(report.error).__name__ if report.error else "NoSteadyState"
        return [[point.get(name) for name in COLUMNS]]

    rows = []
    for branch in report.branches:
        values = dict(point)
        values.update(_branch_columns(report, branch))
        rows.append([values.get(name) for name in COLUMNS])
    return rows


def _evaluate_point(job):
    """Worker entry point: rows of one sweep point."""
    base, values, outputs, options = job
    try:
        params = apply_axes(base, values)
    except _errors.ClientError as e:
        logger.warning("sweep point %s: %s", values, e)
        row = dict(values)
        row["error"] = type(e).__name__
        return [[row.get(name) for name in COLUMNS]]
    return point_rows(run_point(params, outputs, options))


def sweep_points(sweep):  # type: (SweepConfig) -> list
    """Axis assignments in deterministic order, axis1 outermost."""
    axes = [axis for axis in (sweep.axis1, sweep.axis2) if axis is not None]
    grids = [axis.grid() for axis in axes]
    return [
        collections.OrderedDict(zip([axis.name for axis in axes], (float(v) for v in combo)))
        for combo in itertools.product(*grids)
    ]


def run_sweep(sweep, workers=1, options=None, config_hash=""):
    """Evaluate every sweep point, in parallel when ``workers`` > 1.

    Rows are assembled in axis order whatever the completion order. Per-point
    ClientErrors land in the ``error`` column instead of aborting the sweep.

    Args:
        sweep (SweepConfig): base parameters, axes and outputs.
        workers (int): number of processes.
        options (dict): run options forwarded to run_point.
        config_hash (str): sha256 of the configuration, stored in the metadata.

    Returns:
        (CsvDataset): one row per branch per point.
    """
    if sweep.axis1 is None:
        raise _errors.ConfigError("a sweep needs at least axis1")
    if sweep.axis2 is not None and sweep.axis2.name == sweep.axis1.name:
        raise _errors.ConfigError("axis1 and axis2 must differ, both are %s" % sweep.axis1.name)
    if {sweep.axis1.name, getattr(sweep.axis2, "name", None)} >= {ALPHA_AXIS, THETA_AXIS}:
        raise _errors.ConfigError("%s and %s cannot be swept together" % (ALPHA_AXIS, THETA_AXIS))
    parse_outputs(sweep.outputs)

    options = dict(options or {})
    # oracle trajectories stay serial inside pool workers
    options["workers"] = 1 if workers > 1 else options.get("workers", 1)

    points = sweep_points(sweep)
    jobs = [(sweep.base, values, frozenset(sweep.outputs), options) for values in points]
    logger.info("sweeping %d points on %d workers", len(jobs), workers)

    if workers > 1 and len(jobs) > 1:
        chunksize = max(1, len(jobs) // (4 * workers))
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_evaluate_point, jobs, chunksize=chunksize))
    else:
        results = [_evaluate_point(job) for job in jobs]

    rows = [row for point in results for row in point]
    failures = sum(1 for row in rows if row[-1])
    if failures:
        logger.warning("%d of %d rows carry an error", failures, len(rows))

    return _encoders.CsvDataset(
        columns=list(COLUMNS),
        rows=rows,
        metadata=_encoders.dataset_metadata(config_hash, sweep.preset),
    )


def failed_rows(dataset):  # type: (_encoders.CsvDataset) -> list
    """Placeholder docstring"""
    index = dataset.columns.index("error")
    return [row for row in dataset.rows if row[index]]


def spectrum_rows(params, derived, omega=None):
    """S_Yout over a frequency grid for every branch, unstable ones flagged as forced."""
    rows = []
    for state in _meanfield.steady_states(params, derived):
        grid = omega
        if grid is None:
            grid = _linear_response.default_omega_grid(params, derived, state)
        stable = state.stability is _meanfield.Stability.Stable
        sample = _linear_response.spectrum_S_Yout(params, derived, state, grid, force=not stable)
        branch_id = getattr(state, "branch_id", 0)
        rows.extend(
            [float(w), branch_id, state.stability.value, float(s), int(sample.forced)]
            for w, s in zip(sample.omega, sample.S_Yout)
        )
    return rows


def _fig_base():
    return _params.SystemParams(
        g=1.0, kappa=1e4, gamma=1.0, gamma_d=0.0, gamma_p=0.0, n_atoms=1e4, alpha_in_sq=0.0
    )


def _strontium(ideal=False):
    two_pi = 2.0 * math.pi
    if ideal:
        return _params.SystemParams(g=two_pi * 4.0, kappa=two_pi * 1.6e5, n_atoms=1e5)
    return _params.SystemParams(
        g=two_pi * 4.0,
        kappa=two_pi * 1.6e5,
        gamma=0.0,
        gamma_d=two_pi * 3.0,
        gamma_p=two_pi * 3.0,
        n_atoms=1e5,
    )


def _nc_axis(values):
    return make_axis(NC_AXIS, LIN_SCALE, min(values), max(values), len(values), values=values)


def preset_sweep(name):  # type: (str) -> SweepConfig
    """Sweeps reproducing the inversion, output-noise and linewidth curves.

    fig2d: Z/N against alpha_in^2/I0 for NC_eff in {4, 10, 100}.
    fig3a: S_Yout(0) against alpha_in^2/I0 for NC_eff in {0.5, 4, 10, 100}.
    fig3b: Delta f / Delta f_0 against alpha_in^2/I0 (log axis), same NC_eff values.
    """
    drive_lin = make_axis(ALPHA_AXIS, LIN_SCALE, 0.0, 3.0, 301)
    if name == "fig2d":
        return SweepConfig(
            base=_fig_base(),
            axis1=_nc_axis((4.0, 10.0, 100.0)),
            axis2=drive_lin,
            outputs=frozenset([STEADY_STATE_OUTPUT]),
            preset=name,
        )
    if name == "fig3a":
        return SweepConfig(
            base=_fig_base(),
            axis1=_nc_axis((0.5, 4.0, 10.0, 100.0)),
            axis2=drive_lin,
            outputs=frozenset([STEADY_STATE_OUTPUT, SPECTRUM_OUTPUT]),
            preset=name,
        )
    if name == "fig3b":
        return SweepConfig(
            base=_fig_base(),
            axis1=_nc_axis((0.5, 4.0, 10.0, 100.0)),
            axis2=make_axis(ALPHA_AXIS, LOG_SCALE, 1e-2, 3.0, 301),
            outputs=frozenset([STEADY_STATE_OUTPUT, LINEWIDTH_OUTPUT]),
            preset=name,
        )
    raise _errors.ConfigError(
        "unknown sweep preset %r, expected one of %s" % (name, ", ".join(SWEEP_PRESETS))
    )


def preset_point(name):  # type: (str) -> tuple
    """Strontium clock parameters: 'sr' at its dark point, 'sr-ideal' at theta = pi/4.

    Returns:
        (tuple): SystemParams in rad/s and the run options of the preset.
    """
    if name == "sr":
        params = _strontium()
        dark = _meanfield.dark_point(_params.derive(params))
        return params._replace(alpha_in_sq=dark.alpha_in_sq), {}
    if name == "sr-ideal":
        return _params.with_drive(_strontium(ideal=True), theta=math.pi / 4.0), {"T": 1.0}
    raise _errors.ConfigError(
        "unknown point preset %r, expected one of %s" % (name, ", ".join(POINT_PRESETS))
    )


SWEEP_PRESETS = ("fig2d", "fig3a", "fig3b")  # type: tuple
POINT_PRESETS = ("sr", "sr-ideal")  # type: tuple
