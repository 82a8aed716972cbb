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
"""Stochastic time-domain oracle for the analytic spectra and linewidths.

The linearized Langevin equations are driven by classical white Gaussian noises whose
intensities equal the symmetrized quantum correlators. Open-loop trajectories use the
exact one-step propagator with its exact noise covariance; records are interval
averages, so white components keep a flat discrete spectrum.
"""
from __future__ import absolute_import

import collections
import concurrent.futures
import math

import numpy as np
from scipy import linalg, signal, stats

from cavity_lock import _errors, _feedback, _linear_response, _logging, _meanfield

logger = _logging.get_logger()

HANN_WINDOW = "hann"  # type: str
VACUUM_INTENSITY = 0.25  # type: float
SHOT_NOISE_SCALE = 4.0  # type: float
FAMILY_WISE_P = 0.0027  # type: float
TRANSIENT_FACTOR = 20.0  # type: float
DIVERGENCE_FACTOR = 1e6  # type: float
MAX_CONDITION = 1e10  # type: float

Y_SECTOR = 0
X_SECTOR = 1
CLOSED_LOOP = 2

SimConfig = collections.namedtuple(
    "SimConfig", "dt duration seed n_trajectories welch_segment window"
)
SimConfig.__new__.__defaults__ = (HANN_WINDOW,)

TimeSeries = collections.namedtuple(
    "TimeSeries", "t sx y x s_perp y_in y_out dt seed trajectory"
)

PsdEstimate = collections.namedtuple("PsdEstimate", "omega psd stderr n_segments")

ComparisonReport = collections.namedtuple(
    "ComparisonReport", "passed max_z threshold n_bins omega psd stderr analytic"
)


def _slowest_rate(params, derived, state):
    return _linear_response.decay_rates(params, derived, state).lm.real


def default_sim_config(
    params, derived, state, seed=0, n_segments=64, n_trajectories=8, dt_factor=0.08,
    segment_factor=25.0,
):
    """A SimConfig satisfying every invariant with about ``n_segments`` Welch segments."""
    slowest = _slowest_rate(params, derived, state)
    if slowest <= 0:
        raise _errors.UnstableState("no decaying slow mode: Re(l-) = %g" % slowest)

    dt = dt_factor / params.kappa
    segment = int(math.ceil(segment_factor / (slowest * dt)))
    segment += segment % 2

    per_trajectory = int(math.ceil(float(n_segments) / n_trajectories))
    samples = (per_trajectory + 1) * segment // 2
    duration = max(samples * dt, 101.0 / slowest)

    return SimConfig(
        dt=dt,
        duration=duration,
        seed=seed,
        n_trajectories=n_trajectories,
        welch_segment=segment,
        window=HANN_WINDOW,
    )


def check_sim_config(params, derived, state, sim):
    """Raise ConfigError unless the configuration resolves both poles of the state."""
    slowest = _slowest_rate(params, derived, state)
    problems = []

    if sim.window != HANN_WINDOW:
        problems.append("window must be '%s'" % HANN_WINDOW)
    if not sim.dt < 0.1 / params.kappa:
        problems.append("dt=%g must be below 0.1/kappa=%g" % (sim.dt, 0.1 / params.kappa))
    if slowest <= 0:
        problems.append("the slowest pole does not decay (Re(l-)=%g)" % slowest)
    else:
        if not sim.duration > 100.0 / slowest:
            problems.append(
                "duration=%g must exceed 100/Re(l-)=%g" % (sim.duration, 100.0 / slowest)
            )
        if not sim.welch_segment * sim.dt > 20.0 / slowest:
            problems.append(
                "welch_segment*dt=%g must exceed 20/Re(l-)=%g"
                % (sim.welch_segment * sim.dt, 20.0 / slowest)
            )
    if sim.n_trajectories < 1:
        problems.append("n_trajectories must be >= 1")

    if problems:
        raise _errors.ConfigError("invalid simulation config: %s" % "; ".join(problems))


def _generator(seed, trajectory, channel):
    sequence = np.random.SeedSequence([int(seed), int(trajectory), int(channel)])
    return np.random.Generator(np.random.Philox(sequence))


def _exact_discretization(drift, inputs, intensities, dt, integrated_input=None):
    """One-step propagator and noise covariance of a state augmented with interval integrals.

    The augmented state is (x, [integral of one input], integral of x), reset after each
    step. Returns the propagator columns acting on x and the step covariance.
    """
    n = drift.shape[0]
    extra = 1 if integrated_input is not None else 0
    m = 2 * n + extra

    augmented = np.zeros((m, m))
    augmented[:n, :n] = drift
    augmented[n + extra :, :n] = np.eye(n)

    noise = np.zeros((m, inputs.shape[1]))
    noise[:n] = inputs
    if integrated_input is not None:
        noise[n, integrated_input] = 1.0

    diffusion = noise.dot(np.diag(intensities)).dot(noise.T)

    block = np.zeros((2 * m, 2 * m))
    block[:m, :m] = -augmented
    block[:m, m:] = diffusion
    block[m:, m:] = augmented.T
    exponential = linalg.expm(block * dt)

    propagator = exponential[m:, m:].T
    covariance = propagator.dot(exponential[:m, m:])
    covariance = (covariance + covariance.T) / 2.0
    return propagator[:, :n], covariance


def _noise_factor(covariance):
    values, vectors = np.linalg.eigh(covariance)
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def _propagate(transition, kicks):
    """States x_0 = 0, x_{k+1} = transition x_k + kicks_k, for k = 0..K-1, as a K x n array.

    Diagonalizable transitions run as one first-order IIR filter per mode.
    """
    count, n = kicks.shape
    states = np.zeros((count, n))
    values, vectors = np.linalg.eig(transition)

    if np.linalg.cond(vectors) < MAX_CONDITION:
        modal = np.linalg.solve(vectors, kicks[:-1].T)
        filtered = np.empty_like(modal)
        for index, value in enumerate(values):
            filtered[index] = signal.lfilter([1.0], [1.0, -value], modal[index])
        states[1:] = vectors.dot(filtered).real.T
        return states

    logger.debug("defective transition matrix, propagating step by step")
    for k in range(1, count):
        states[k] = transition.dot(states[k - 1]) + kicks[k - 1]
    return states


def _sector_records(drift, inputs, intensities, sim, steps, generator, integrated_input=None):
    n = drift.shape[0]
    columns, covariance = _exact_discretization(
        drift, inputs, intensities, sim.dt, integrated_input
    )
    factor = _noise_factor(covariance)
    draws = generator.standard_normal((steps, covariance.shape[0]))
    kicks = draws.dot(factor.T)

    states = _propagate(columns[:n], kicks[:, :n])
    records = states.dot(columns[n:].T) + kicks[:, n:]
    return records / sim.dt


def simulate_linearized(params, derived, state, sim, trajectory=0, include_x=True):
    """Integrate the linearized fluctuations of a stable steady state.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): a stable steady state.
        sim (SimConfig): integration and estimation settings.
        trajectory (int): trajectory index, part of the random stream key.
        include_x (bool): also integrate the X sector (amplitude and inversion).

    Returns:
        (TimeSeries): interval-averaged fluctuation records after the transient.

    Raises:
        UnstableState: when the state is not stable.
        ConfigError: when the configuration does not resolve the dynamics.
    """
    _linear_response.check_stable(state, force=False)
    check_sim_config(params, derived, state, sim)

    slowest = _slowest_rate(params, derived, state)
    transient = int(math.ceil(TRANSIENT_FACTOR / (slowest * sim.dt)))
    recorded = int(round(sim.duration / sim.dt))
    steps = transient + recorded

    drift = _meanfield.drift_matrix(params, derived, state)
    n_atoms = params.n_atoms
    channel_rates = [params.gamma, params.gamma_p, params.gamma_d]

    # Y sector over (Sx, Y): inputs are Y_in and one x-quadrature noise per atomic channel
    y_drift = drift[np.ix_([2, 1], [2, 1])]
    y_inputs = np.zeros((2, 4))
    y_inputs[1, 0] = math.sqrt(params.kappa)
    y_inputs[0, 1:] = [math.sqrt(n_atoms * rate) for rate in channel_rates]
    y_records = _sector_records(
        y_drift,
        y_inputs,
        np.full(4, VACUUM_INTENSITY),
        sim,
        steps,
        _generator(sim.seed, trajectory, Y_SECTOR),
        integrated_input=0,
    )[transient:]

    y_in = y_records[:, 0]
    sx = y_records[:, 1]
    y = y_records[:, 2]
    y_out = y_in - math.sqrt(params.kappa) * y

    x = s_perp = None
    if include_x:
        x, s_perp = _x_sector(params, derived, state, drift, sim, steps, trajectory)
        x, s_perp = x[transient:], s_perp[transient:]

    t = (transient + np.arange(recorded)) * sim.dt
    return TimeSeries(
        t=t,
        sx=sx,
        y=y,
        x=x,
        s_perp=s_perp,
        y_in=y_in,
        y_out=y_out,
        dt=sim.dt,
        seed=sim.seed,
        trajectory=trajectory,
    )


def _x_sector(params, derived, state, drift, sim, steps, trajectory):
    """Amplitude and transverse-spin records of the X sector over (Re a, Im J, Z)."""
    z = _meanfield.normalized_inversion(state, derived)
    n_atoms = params.n_atoms
    inversion_intensity = max(z + 0.5, 0.0)

    x_drift = drift[np.ix_([0, 3, 4], [0, 3, 4])]
    x_inputs = np.zeros((3, 6))
    x_inputs[0, 0] = math.sqrt(params.kappa)
    x_inputs[1, 1:4] = [
        math.sqrt(n_atoms * rate) for rate in (params.gamma, params.gamma_p, params.gamma_d)
    ]
    x_inputs[2, 4:6] = [math.sqrt(n_atoms * rate) for rate in (params.gamma, params.gamma_p)]
    intensities = np.array(
        [VACUUM_INTENSITY] * 4 + [inversion_intensity, inversion_intensity]
    )

    records = _sector_records(
        x_drift, x_inputs, intensities, sim, steps, _generator(sim.seed, trajectory, X_SECTOR)
    )

    sy0 = _meanfield.dipole(state)
    inversion0 = z * n_atoms
    radius = math.hypot(sy0, inversion0)
    delta_sy = -records[:, 1]
    s_perp = (-inversion0 * delta_sy + sy0 * records[:, 2]) / radius
    return records[:, 0], s_perp


def welch_estimate(records, dt, segment, scale=1.0):
    """Hann-windowed, 50%-overlap averaged periodogram over one or more records.

    A white input of intensity q, sampled as interval averages, yields ``scale * q``.
    Only omega >= 0 is kept from the two-sided density.

    Raises:
        TooShort: when a record holds fewer than two segments.
    """
    periodograms = []
    frequencies = None

    for record in records:
        record = np.asarray(record, dtype=float)
        if record.shape[0] < 2 * segment:
            raise _errors.TooShort(
                "record of %d samples is shorter than two segments of %d"
                % (record.shape[0], segment)
            )
        frequencies, _, density = signal.spectrogram(
            record,
            fs=1.0 / dt,
            window=HANN_WINDOW,
            nperseg=segment,
            noverlap=segment // 2,
            detrend=False,
            return_onesided=False,
            scaling="density",
            mode="psd",
        )
        periodograms.append(density)

    stacked = np.concatenate(periodograms, axis=1)
    keep = frequencies >= 0
    values = scale * stacked[keep]
    n_segments = values.shape[1]

    order = np.argsort(frequencies[keep])
    psd = values.mean(axis=1)[order]
    stderr = (values.std(axis=1, ddof=1) / math.sqrt(n_segments))[order]
    omega = 2.0 * math.pi * frequencies[keep][order]

    return PsdEstimate(omega=omega, psd=psd, stderr=stderr, n_segments=n_segments)


def welch_psd(series, sim, field="y_out", scale=SHOT_NOISE_SCALE):
    """Welch estimate of one TimeSeries field, shot-noise normalized by default.

    Args:
        series (TimeSeries or list[TimeSeries]): trajectories to average.
        sim (SimConfig): provides the segment length.
        field (str): record to estimate, 'y_out' by default.
        scale (float): multiplier applied to the two-sided density.

    Returns:
        (PsdEstimate): the averaged estimate with its standard error.
    """
    if isinstance(series, TimeSeries):
        series = [series]
    records = [getattr(item, field) for item in series]
    return welch_estimate(records, series[0].dt, sim.welch_segment, scale)


def _simulate_job(job):
    params, derived, state, sim, trajectory = job
    return simulate_linearized(params, derived, state, sim, trajectory, include_x=False)


def _map(function, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(function, jobs))
    return [function(job) for job in jobs]


def comparison_bins(omega, max_omega, n_bins):
    """Indices of about ``n_bins`` log-spaced bins from DC up to ``max_omega``."""
    available = int(np.searchsorted(omega, max_omega, side="right"))
    if available < 2:
        return np.arange(available)
    spaced = np.geomspace(1, available - 1, max(n_bins - 1, 1))
    return np.unique(np.concatenate([[0], np.round(spaced).astype(int)]))


def compare_estimate(estimate, analytic, indices):
    """Bonferroni-corrected 3 sigma comparison of an estimate with analytic values."""
    count = len(indices)
    threshold = stats.norm.isf(FAMILY_WISE_P / (2.0 * count))
    scores = (estimate.psd[indices] - analytic) / estimate.stderr[indices]
    max_z = float(np.max(np.abs(scores)))

    return ComparisonReport(
        passed=max_z <= threshold,
        max_z=max_z,
        threshold=threshold,
        n_bins=count,
        omega=estimate.omega[indices],
        psd=estimate.psd[indices],
        stderr=estimate.stderr[indices],
        analytic=analytic,
    )


def validate_spectrum(params, derived, state, sim, max_omega=None, n_bins=256, workers=1):
    """Compare the simulated Y_out spectrum with the analytic one.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        state (IdealState or MeanFieldState): a stable steady state.
        sim (SimConfig): simulation settings.
        max_omega (float): highest compared frequency, 2 kappa by default.
        n_bins (int): number of log-spaced compared bins, DC included.
        workers (int): processes running trajectories in parallel.

    Returns:
        (ComparisonReport): largest |z| score and pass/fail at the corrected threshold.
    """
    _linear_response.check_stable(state, force=False)
    check_sim_config(params, derived, state, sim)

    jobs = [(params, derived, state, sim, k) for k in range(sim.n_trajectories)]
    series = _map(_simulate_job, jobs, workers)
    estimate = welch_psd(series, sim)

    indices = comparison_bins(estimate.omega, max_omega or 2.0 * params.kappa, n_bins)
    analytic = _linear_response.spectrum_S_Yout(
        params, derived, state, estimate.omega[indices]
    ).S_Yout
    report = compare_estimate(estimate, analytic, indices)

    logger.info(
        "oracle spectrum: max |z| = %.2f over %d bins (threshold %.2f, %d segments) -> %s",
        report.max_z,
        report.n_bins,
        report.threshold,
        estimate.n_segments,
        "pass" if report.passed else "FAIL",
    )
    return report


def _closed_loop_matrices(params, derived, state, loop_filter, dt):
    """Euler step of the loop over (Sx, Y, integrator) and the residual readout."""
    drift = _meanfield.drift_matrix(params, derived, state)
    a = drift[np.ix_([2, 1], [2, 1])]
    sqrt_kappa = math.sqrt(params.kappa)
    dipole = _meanfield.dipole(state)
    gain = loop_filter.gain
    corner = loop_filter.corner

    continuous = np.array(
        [
            [a[0, 0], a[0, 1] + dipole * gain * sqrt_kappa, -dipole * gain * corner],
            [a[1, 0], a[1, 1], 0.0],
            [0.0, -sqrt_kappa, 0.0],
        ]
    )
    transition = np.eye(3) + dt * continuous
    readout = np.array([0.0, gain * sqrt_kappa, -gain * corner])
    return transition, readout, dipole


def _closed_loop_job(job):
    params, derived, state, loop_filter, bare_level, sim, trajectory = job
    dt = sim.dt
    transition, readout, dipole = _closed_loop_matrices(params, derived, state, loop_filter, dt)

    slowest = _slowest_rate(params, derived, state)
    transient = int(math.ceil(TRANSIENT_FACTOR / (slowest * dt)))
    steps = transient + int(round(sim.duration / dt))

    generator = _generator(sim.seed, trajectory, CLOSED_LOOP)
    draws = generator.standard_normal((steps, 3))
    y_in = draws[:, 0] * math.sqrt(VACUUM_INTENSITY / dt)
    atomic = draws[:, 1] * math.sqrt(params.n_atoms * derived.Gamma * VACUUM_INTENSITY * dt)
    bare = draws[:, 2] * math.sqrt(bare_level / dt)

    open_residual = bare - loop_filter.gain * y_in
    kicks = np.column_stack(
        [
            dt * dipole * open_residual + atomic,
            math.sqrt(params.kappa) * dt * y_in,
            dt * y_in,
        ]
    )

    states = _propagate(transition, kicks)
    if not np.all(np.isfinite(states)):
        raise _errors.UnstableLoop("closed-loop simulation produced non-finite values")

    initial = np.sqrt(np.mean(states[:transient] ** 2)) or 1.0
    peak = np.max(np.abs(states))
    if peak > DIVERGENCE_FACTOR * initial:
        raise _errors.UnstableLoop(
            "closed-loop state grew to %g, %g times its initial scale" % (peak, peak / initial)
        )

    residual = open_residual + states.dot(readout)
    return residual[transient:]


def simulate_closed_loop(params, derived, state, loop_filter, bare_noise_psd, sim, workers=1):
    """Discrete-time servo simulation returning the residual detuning PSD.

    The plant is the Y sector driven by the detuning, the measurement is Y_out and the
    PI filter acts on it; the correction is subtracted from a white free-running
    detuning of PSD ``bare_noise_psd`` (rad^2/s^2 per rad/s).

    Returns:
        (PsdEstimate): two-sided residual detuning PSD (same units as S_Delta).

    Raises:
        UnstableLoop: when the loop is unstable or the simulation diverges.
    """
    stability = _feedback.loop_stability(params, derived, state, loop_filter)
    if not stability.stable:
        raise _errors.UnstableLoop(
            "closed loop has %d right-half-plane poles" % stability.encirclements
        )
    check_sim_config(params, derived, state, sim)

    transition, _, _ = _closed_loop_matrices(params, derived, state, loop_filter, sim.dt)
    radius = np.max(np.abs(np.linalg.eigvals(transition)))
    if radius >= 1.0:
        raise _errors.UnstableLoop(
            "discretized loop diverges: spectral radius %.6f at dt=%g" % (radius, sim.dt)
        )

    jobs = [
        (params, derived, state, loop_filter, float(bare_noise_psd), sim, k)
        for k in range(sim.n_trajectories)
    ]
    residuals = _map(_closed_loop_job, jobs, workers)
    return welch_estimate(residuals, sim.dt, sim.welch_segment, scale=1.0)
