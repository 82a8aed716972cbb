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
"""Command-line entry point: ``cavity-lock <command> [--config PATH] [--out PATH] ...``"""
from __future__ import absolute_import

import argparse
import functools
import logging
import sys

import numpy as np

from cavity_lock import (
    _driver,
    _encoders,
    _env,
    _errors,
    _feedback,
    _linear_response,
    _logging,
    _meanfield,
    _oracle,
    _params,
    _sweep,
)

logger = _logging.get_logger()

COMMANDS = ("point", "sweep", "spectrum", "linewidth", "validate", "loop-sim")  # type: tuple
STDOUT = "-"


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'name = value' configuration file")
    common.add_argument("--out", default=STDOUT, help="output CSV path, '-' for stdout")
    common.add_argument("--preset", help="named parameter set or sweep")
    common.add_argument("--units", choices=(_params.HZ_UNITS, _params.RAD_UNITS))
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--log-level", dest="log_level", type=int)

    parser = argparse.ArgumentParser(
        prog="cavity-lock",
        description="Steady states, noise spectra and feedback linewidths of a coherently "
        "driven atom-cavity system.",
    )
    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common])
    return parser


def _make_env(args):
    config = _env.parse_config(args.config) if args.config else {}
    overrides = {
        _params.UNITS_PARAM: args.units,
        _env.SEED_KEY: args.seed,
        _env.WORKERS_KEY: args.workers,
        _params.LOG_LEVEL_PARAM: args.log_level,
    }
    return _env.RunEnv(config, overrides)


def _write(dataset, out):
    if out == STDOUT:
        _encoders.write_csv(dataset, sys.stdout)
    else:
        _encoders.emit_csv(dataset, out)
        logger.info("wrote %d rows to %s", len(dataset.rows), out)


def _point_params(env, preset):
    """Parameters and options of a point command, from a preset or the configuration."""
    options = env.options
    if preset:
        params, preset_options = _sweep.preset_point(preset)
        preset_options.update(options)
        return params, preset_options
    if env.params is None:
        raise _errors.ConfigError("no parameters: pass --config or --preset")
    return env.params, options


def _metadata(env, preset):
    return _encoders.dataset_metadata(env.config_hash, preset)


def _stable_state(params, derived):
    for state in _meanfield.steady_states(params, derived):
        if state.stability is _meanfield.Stability.Stable:
            return state
    raise _errors.UnstableState("no stable steady state at this drive")


def _report_dataset(env, preset, outputs):
    params, options = _point_params(env, preset)
    report = _sweep.run_point(params, outputs, options)

    for branch in report.branches:
        if branch.linewidth is not None:
            logger.info(
                "branch %s (%s): NC_eff=%.6g, delta_f=%.6g Hz, regime %s",
                getattr(branch.state, "branch_id", 0),
                branch.state.stability.value,
                report.derived.NC_eff,
                branch.linewidth.delta_f,
                branch.linewidth.regime.value,
            )
        if branch.estimator is not None:
            logger.info(
                "estimator over T=%g s: slope %.6g, detuning resolution %.6g rad/s",
                branch.estimator.T,
                branch.estimator.slope,
                np.sqrt(branch.estimator.sensitivity_sq),
            )

    dataset = _encoders.CsvDataset(
        columns=list(_sweep.COLUMNS), rows=_sweep.point_rows(report), metadata=_metadata(env, preset)
    )
    return dataset, report


def _raise_first_error(report):
    if report.error is not None:
        raise report.error
    errors = [branch.error for branch in report.branches if branch.error is not None]
    if errors:
        raise errors[0]


def point(env, args):
    """Placeholder docstring"""
    dataset, report = _report_dataset(env, args.preset, _sweep.POINT_OUTPUTS)
    _write(dataset, args.out)
    _raise_first_error(report)


def linewidth(env, args):
    """Placeholder docstring"""
    outputs = frozenset(
        [_sweep.STEADY_STATE_OUTPUT, _sweep.LINEWIDTH_OUTPUT, _sweep.CORNERS_OUTPUT]
    )
    dataset, report = _report_dataset(env, args.preset, outputs)
    _write(dataset, args.out)
    _raise_first_error(report)

    derived = report.derived
    if derived.i0_defined and derived.NC_eff < 8.0:
        optimum = _feedback.optimal_linewidth(report.params, derived)
        logger.info(
            "optimal drive alpha_in^2/I0=%.6g gives delta_f=%.6g Hz (dark point: %s Hz)",
            optimum.alpha_in_sq / derived.I0,
            optimum.delta_f,
            optimum.dark_point_delta_f,
        )


def _sweep_config(env, preset):
    if preset:
        if env.params is not None:
            logger.warning("preset %s ignores the parameters of the configuration", preset)
        return _sweep.preset_sweep(preset)

    if env.params is None:
        raise _errors.ConfigError("no base parameters: pass --config or --preset")
    options = env.sweep
    if _env.AXIS1_KEY not in options:
        raise _errors.ConfigError("a sweep configuration needs axis1")

    axis2 = options.get(_env.AXIS2_KEY)
    return _sweep.SweepConfig(
        base=env.params,
        axis1=_sweep.parse_axis(options[_env.AXIS1_KEY], env.units),
        axis2=_sweep.parse_axis(axis2, env.units) if axis2 else None,
        outputs=_sweep.parse_outputs(options.get(_env.OUTPUTS_KEY, _sweep.STEADY_STATE_OUTPUT)),
    )


def sweep(env, args):
    """Placeholder docstring"""
    config = _sweep_config(env, args.preset)
    options = env.options
    options[_env.SEED_KEY] = env.seed
    dataset = _sweep.run_sweep(
        config, workers=env.num_workers, options=options, config_hash=env.config_hash
    )
    _write(dataset, args.out)

    failures = _sweep.failed_rows(dataset)
    if failures:
        raise _errors.ClientError("%d sweep rows failed" % len(failures))


def spectrum(env, args):
    """Placeholder docstring"""
    params, _ = _point_params(env, args.preset)
    derived = _params.derive(params)
    rows = _sweep.spectrum_rows(params, derived)
    _write(
        _encoders.CsvDataset(
            columns=list(_sweep.SPECTRUM_COLUMNS), rows=rows, metadata=_metadata(env, args.preset)
        ),
        args.out,
    )


def _sim_config(params, derived, state, env, options):
    kwargs = {"seed": env.seed}
    if _env.N_SEGMENTS_KEY in options:
        kwargs["n_segments"] = int(options[_env.N_SEGMENTS_KEY])
    if _env.N_TRAJECTORIES_KEY in options:
        kwargs["n_trajectories"] = int(options[_env.N_TRAJECTORIES_KEY])
    if _env.DT_KEY in options:
        kwargs["dt_factor"] = float(options[_env.DT_KEY]) * params.kappa
    return _oracle.default_sim_config(params, derived, state, **kwargs)


def validate(env, args):
    """Placeholder docstring"""
    params, options = _point_params(env, args.preset)
    derived = _params.derive(params)
    state = _stable_state(params, derived)

    sim = _sim_config(params, derived, state, env, options)
    report = _oracle.validate_spectrum(params, derived, state, sim, workers=env.num_workers)

    z_scores = (report.psd - report.analytic) / report.stderr
    rows = [
        [float(w), float(p), float(e), float(a), float(z)]
        for w, p, e, a, z in zip(report.omega, report.psd, report.stderr, report.analytic, z_scores)
    ]
    dataset = _encoders.CsvDataset(
        columns=list(_encoders.PSD_COLUMNS) + ["analytic", "z"],
        rows=rows,
        metadata=_metadata(env, args.preset),
    )
    _write(dataset, args.out)

    if not report.passed:
        raise _errors.ValidationFailed(
            "simulated spectrum deviates by %.2f sigma (threshold %.2f)"
            % (report.max_z, report.threshold)
        )


def loop_sim(env, args):
    """Placeholder docstring"""
    params, options = _point_params(env, args.preset)
    derived = _params.derive(params)
    state = _stable_state(params, derived)

    rates = _linear_response.decay_rates(params, derived, state)
    ugf = float(options.get(_env.UGF_KEY, min(rates.lp.real / 4.0, params.kappa / 8.0)))
    loop_filter = _feedback.design_loop_filter(params, derived, state, ugf)
    bare = float(options.get(_env.BARE_NOISE_KEY, 0.0))

    sim = _sim_config(params, derived, state, env, options)
    estimate = _oracle.simulate_closed_loop(
        params, derived, state, loop_filter, bare, sim, workers=env.num_workers
    )
    analytic = _feedback.closed_loop_spectrum(
        params, derived, state, loop_filter, bare, estimate.omega
    )

    dataset = _encoders.psd_dataset(estimate, _metadata(env, args.preset))
    dataset = dataset._replace(
        columns=dataset.columns + ["analytic"],
        rows=[row + [float(a)] for row, a in zip(dataset.rows, analytic)],
    )
    _write(dataset, args.out)
    logger.info(
        "residual detuning PSD at DC %.6g (analytic %.6g), phase margin %.1f deg",
        estimate.psd[0],
        analytic[0],
        _feedback.phase_margin(params, derived, state, loop_filter),
    )


HANDLERS = {
    "point": point,
    "sweep": sweep,
    "spectrum": spectrum,
    "linewidth": linewidth,
    "validate": validate,
    "loop-sim": loop_sim,
}


def main(argv=None):
    """Placeholder docstring"""
    logging.captureWarnings(True)
    args = _parser().parse_args(argv)
    handler = functools.partial(HANDLERS[args.command], args=args)
    _driver.run(args.command, handler, functools.partial(_make_env, args))


if __name__ == "__main__":
    main()
