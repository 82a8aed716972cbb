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
"""Mean-field steady states, their stability and the static dispersive response."""
from __future__ import absolute_import

import collections
import enum
import math

import numpy as np
from scipy import linalg, optimize

from cavity_lock import _errors, _logging

logger = _logging.get_logger()

MARGINAL_TOLERANCE = 1e-9  # type: float
ROOT_ACCEPT_RESIDUAL = 1e-10  # type: float
ROOT_MERGE_DISTANCE = 1e-9  # type: float
_NEWTON_ITERATIONS = 50


class Stability(enum.Enum):
    """Linear stability of a steady state."""

    Stable = "Stable"
    Unstable = "Unstable"
    Marginal = "Marginal"


IdealState = collections.namedtuple("IdealState", "theta J Z alpha alpha_out stability")

MeanFieldState = collections.namedtuple(
    "MeanFieldState", "z alpha J alpha_out stability branch_id"
)

DarkPoint = collections.namedtuple("DarkPoint", "z alpha_in_sq")

DispersiveSample = collections.namedtuple("DispersiveSample", "delta0 y_out z")

DispersiveExtremum = collections.namedtuple("DispersiveExtremum", "delta0 y_out")

FoldPoint = collections.namedtuple("FoldPoint", "z drive")


class BistabilityWindow(collections.namedtuple("BistabilityWindow", "lower upper exists")):
    """Drive range, in units of 2 alpha_in^2 / I0, holding three steady states."""

    __slots__ = ()

    def contains(self, alpha_in_sq_over_i0):  # type: (float) -> bool
        """True when alpha_in^2 / I0 lies strictly inside the window."""
        if not self.exists:
            return False
        return self.lower < 2.0 * alpha_in_sq_over_i0 < self.upper


def is_ideal(state):  # type: (object) -> bool
    """Placeholder docstring"""
    return isinstance(state, IdealState)


def normalized_inversion(state, derived):  # type: (object, object) -> float
    """Z / N of either kind of steady state."""
    if is_ideal(state):
        return state.Z / derived.n_atoms
    return state.z


def dipole(state):  # type: (object) -> float
    """The real quantity i J of a steady state (positive for a driven system)."""
    return -state.J.imag


def ideal_steady_state(params, derived):
    """Steady state of the ideal model (no atomic decay).

    The Bloch angle follows sin(theta) = alpha_in / alpha_in_c, all light is reflected.

    Args:
        params (SystemParams): parameters with gamma = gamma_d = gamma_p = 0.
        derived (DerivedParams): their derived scales.

    Returns:
        (IdealState): the unique stable steady state.

    Raises:
        InvalidParams: when an atomic decay rate is nonzero.
        AboveThreshold: when alpha_in exceeds alpha_in_c.
    """
    if not derived.ideal:
        raise _errors.InvalidParams(
            ["the ideal steady state requires gamma = gamma_d = gamma_p = 0"]
        )

    if params.alpha_in_sq > derived.alpha_in_c_sq:
        raise _errors.AboveThreshold(params.alpha_in_sq, derived.alpha_in_c_sq)

    alpha_in = math.sqrt(params.alpha_in_sq)
    theta = math.asin(min(1.0, math.sqrt(params.alpha_in_sq / derived.alpha_in_c_sq)))
    n = float(params.n_atoms)

    state = IdealState(
        theta=theta,
        J=complex(0.0, -n * math.sin(theta) / 2.0),
        Z=-n * math.cos(theta) / 2.0,
        alpha=0j,
        alpha_out=complex(alpha_in, 0.0),
        stability=None,
    )
    return state._replace(stability=_ideal_stability(params, derived, state))


def _require_nonideal(derived):
    if derived.ideal:
        raise _errors.InvalidParams(
            ["the inversion cubic needs Gamma > 0; use the ideal steady state instead"]
        )
    if derived.gamma_parallel <= 0:
        raise _errors.DegenerateScale(
            "I0 = 0: gamma + gamma_p = 0 while Gamma = %g, the dipole cannot radiate"
            % derived.Gamma
        )


def inversion_coefficients(derived, alpha_in_sq):  # type: (object, float) -> np.ndarray
    """Monic coefficients of the inversion cubic in z, highest power first.

    (z + 1/2)(z - a)^2 + r z = 0 with a = 1/(2 NC_eff) and r = alpha_in^2 / (8 I0).
    """
    a = 1.0 / (2.0 * derived.NC_eff)
    r = alpha_in_sq / (8.0 * derived.I0)
    return np.array([1.0, 0.5 - 2.0 * a, a * a - a + r, a * a / 2.0])


def inversion_residual(derived, alpha_in_sq, z):  # type: (object, float, float) -> float
    """Backward error of a root of the inversion cubic."""
    coefficients = inversion_coefficients(derived, alpha_in_sq)
    powers = np.array([z ** 3, z ** 2, z, 1.0])
    terms = coefficients * powers
    scale = np.sum(np.abs(terms))
    if scale == 0.0:
        return 0.0
    return abs(np.sum(terms)) / scale


def _polish(coefficients, z):
    derivative = np.polyder(coefficients)
    for _ in range(_NEWTON_ITERATIONS):
        slope = np.polyval(derivative, z)
        if slope == 0.0:
            break
        step = np.polyval(coefficients, z) / slope
        z -= step
        if abs(step) <= 1e-16 * max(abs(z), 1e-300):
            break
    return z


def _companion_roots(coefficients):  # type: (np.ndarray) -> np.ndarray
    degree = len(coefficients) - 1
    companion = np.diag(np.ones(degree - 1), -1)
    companion[0, :] = -np.asarray(coefficients[1:]) / coefficients[0]
    return np.linalg.eigvals(companion)


def solve_inversion_cubic(params, derived):
    """All physical roots z = Z/N of the steady-state inversion cubic.

    Roots come from the companion-matrix eigenvalues, are polished by Newton
    iterations and filtered to the Bloch-sphere range [-1/2, 0).

    Args:
        params (SystemParams): a non-ideal parameter set.
        derived (DerivedParams): its derived scales.

    Returns:
        (list[float]): 1 or 3 roots, sorted ascending.

    Raises:
        DegenerateScale: when I0 = 0 (gamma + gamma_p = 0 with Gamma > 0).
    """
    _require_nonideal(derived)

    coefficients = inversion_coefficients(derived, params.alpha_in_sq)
    roots = []

    for candidate in _companion_roots(coefficients):
        if abs(candidate.imag) > 1e-6 * max(1.0, abs(candidate)):
            continue

        z = _polish(coefficients, float(candidate.real))
        residual = inversion_residual(derived, params.alpha_in_sq, z)

        if residual > ROOT_ACCEPT_RESIDUAL:
            logger.debug("discarding spurious root %r (residual %g)", z, residual)
            continue
        if not -0.5 - 1e-12 <= z < 0.0:
            logger.debug("discarding unphysical root z=%r outside [-1/2, 0)", z)
            continue
        if any(abs(z - other) < ROOT_MERGE_DISTANCE for other in roots):
            continue

        roots.append(max(z, -0.5))

    return sorted(roots)


def fold_points(derived):  # type: (object) -> list
    """Numeric folds of the steady-state curve, as (z, 2 alpha_in^2 / I0) pairs.

    The folds are the interior extrema of the right-hand side of the cubic,
    i.e. the roots of 2 z^3 + (1/2 - 2a) z^2 - a^2/2 on (-1/2, 0).
    """
    _require_nonideal(derived)

    a = 1.0 / (2.0 * derived.NC_eff)
    coefficients = np.array([2.0, 0.5 - 2.0 * a, 0.0, -a * a / 2.0])
    folds = []

    for candidate in _companion_roots(coefficients):
        if abs(candidate.imag) > 1e-9 or not -0.5 < candidate.real < 0.0:
            continue
        z = _polish(coefficients, float(candidate.real))
        drive = -16.0 * (z + 0.5) * (z - a) ** 2 / z
        folds.append(FoldPoint(z=z, drive=drive))

    return sorted(folds, key=lambda fold: fold.drive)


def _state_vector(params, derived, state):
    alpha = complex(state.alpha)
    j = complex(state.J)
    inversion = state.Z if is_ideal(state) else state.z * derived.n_atoms
    return alpha.real, alpha.imag, j.real, j.imag, inversion


def drift_matrix(params, derived, state, delta=0.0):
    """Jacobian of the mean-field drift over (Re a, Im a, Re J, Im J, Z).

    The Y sector is spanned by (Im a, Re J), the X sector by (Re a, Im J, Z).
    """
    g = params.g
    kappa = params.kappa
    half_gamma = derived.Gamma / 2.0
    ar, ai, jr, ji, inversion = _state_vector(params, derived, state)

    return np.array(
        [
            [-kappa / 2.0, 0.0, 0.0, g, 0.0],
            [0.0, -kappa / 2.0, -g, 0.0, 0.0],
            [0.0, -2.0 * g * inversion, -half_gamma, -delta, -2.0 * g * ai],
            [2.0 * g * inversion, 0.0, delta, -half_gamma, 2.0 * g * ar],
            [-2.0 * g * ji, 2.0 * g * jr, 2.0 * g * ai, -2.0 * g * ar, -derived.gamma_parallel],
        ]
    )


def _classify_eigenvalues(eigenvalues, tolerance):
    leading = eigenvalues[np.argmax(eigenvalues.real)]
    if abs(leading.real) < tolerance:
        raise _errors.MarginalStability(leading, tolerance)
    return Stability.Stable if leading.real < 0 else Stability.Unstable


def _tangent_drift(params, derived, state):
    """Drift matrix of an ideal state restricted to the complement of the radial direction.

    Without atomic decay |J|^2 + Z^2 is conserved: the radial vector is a left null vector
    of the drift matrix and its orthogonal complement is invariant.
    """
    drift = drift_matrix(params, derived, state)
    _, _, jr, ji, inversion = _state_vector(params, derived, state)
    basis = linalg.null_space(np.array([[0.0, 0.0, jr, ji, inversion]]))
    return basis.T.dot(drift).dot(basis)


def _ideal_stability(params, derived, state):
    eigenvalues = np.linalg.eigvals(_tangent_drift(params, derived, state))
    try:
        return _classify_eigenvalues(eigenvalues, 1e-12 * params.kappa)
    except _errors.MarginalStability as e:
        logger.warning("ideal state at theta=%g is marginal: %s", state.theta, e)
        return Stability.Marginal


def classify_stability(params, derived, z):
    """Linear stability of the non-ideal steady state with inversion z.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        z (float): a root of the inversion cubic.

    Returns:
        (Stability): Stable when every eigenvalue of the full drift matrix decays.

    Raises:
        MarginalStability: when the leading eigenvalue is within 1e-9 Gamma of zero.
    """
    state = _branch_without_stability(params, derived, z, 0)
    eigenvalues = np.linalg.eigvals(drift_matrix(params, derived, state))
    return _classify_eigenvalues(eigenvalues, MARGINAL_TOLERANCE * derived.Gamma)


def _branch_without_stability(params, derived, z, branch_id):
    alpha_in = math.sqrt(params.alpha_in_sq)
    sqrt_kappa = math.sqrt(params.kappa)
    two_nc_z = 2.0 * derived.NC_eff * z
    denominator = 1.0 - two_nc_z

    alpha = complex(2.0 * alpha_in / (sqrt_kappa * denominator), 0.0)
    j = complex(
        0.0,
        8.0 * params.g * params.n_atoms * z * alpha_in
        / (derived.Gamma * sqrt_kappa * denominator),
    )
    alpha_out = alpha_in * (two_nc_z + 1.0) / (two_nc_z - 1.0)

    return MeanFieldState(
        z=z, alpha=alpha, J=j, alpha_out=alpha_out, stability=None, branch_id=branch_id
    )


def branch_states(params, derived, z, branch_id=0):
    """Fill a non-ideal steady state from its inversion.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        z (float): a root of the inversion cubic.
        branch_id (int): index of the root in ascending order.

    Returns:
        (MeanFieldState): amplitudes, dipole and stability of the branch.
    """
    state = _branch_without_stability(params, derived, z, branch_id)
    try:
        stability = classify_stability(params, derived, z)
    except _errors.MarginalStability as e:
        logger.warning("branch %d at z=%r is marginal: %s", branch_id, z, e)
        stability = Stability.Marginal
    return state._replace(stability=stability)


def steady_states(params, derived):
    """Every steady state of a parameter set, ideal or not."""
    if derived.ideal:
        return [ideal_steady_state(params, derived)]

    roots = solve_inversion_cubic(params, derived)
    return [branch_states(params, derived, z, branch_id) for branch_id, z in enumerate(roots)]


def bistability_window(derived):
    """Closed-form drive window, in units of 2 alpha_in^2 / I0, with three steady states."""
    nc = derived.NC_eff
    if nc < 8.0:
        return BistabilityWindow(lower=math.nan, upper=math.nan, exists=False)

    s = math.sqrt(1.0 - 8.0 / nc)
    one_minus_s = (8.0 / nc) / (1.0 + s)

    lower = one_minus_s * (3.0 + s) ** 3 / 16.0
    upper = (1.0 + s) * (3.0 - s) ** 3 / 16.0
    return BistabilityWindow(lower=lower, upper=upper, exists=nc > 8.0)


def dark_point(derived):
    """Placeholder docstring"""
    nc = derived.NC_eff
    if not nc > 1.0 or not derived.i0_defined:
        return None
    return DarkPoint(z=-1.0 / (2.0 * nc), alpha_in_sq=8.0 * derived.I0 * (nc - 1.0) / nc ** 2)


def _ideal_dispersive(params, derived, delta0):
    g = params.g
    kappa = params.kappa
    n = float(params.n_atoms)
    alpha_in = math.sqrt(params.alpha_in_sq)

    c = 16.0 * g ** 4 / kappa ** 2
    b = 16.0 * g ** 2 * params.alpha_in_sq / kappa
    delta_sq = delta0 * delta0
    linear = delta_sq + b - c * n * n / 4.0
    root = math.sqrt(linear * linear + c * delta_sq * n * n)

    if linear > 0:
        u = delta_sq * n * n / (2.0 * (root + linear))
    else:
        u = (root - linear) / (2.0 * c)

    inversion = -math.sqrt(u)
    y_out = (
        -8.0 * alpha_in * g ** 2 * inversion * kappa * delta0
        / (kappa ** 2 * delta_sq + c * kappa ** 2 * u)
    )
    return DispersiveSample(delta0=delta0, y_out=y_out, z=inversion / n)


class _DetunedCurve(object):
    """Steady-state manifold G(z, d) = 0 of the detuned non-ideal model, d = 2 Delta / Gamma."""

    def __init__(self, params, derived):
        self.q = derived.NC_eff
        self.r = params.alpha_in_sq / (8.0 * derived.I0)
        self.alpha_in = math.sqrt(params.alpha_in_sq)

    def value(self, z, d):
        q = self.q
        return 4.0 * q * q * self.r * z + (z + 0.5) * ((1.0 - 2.0 * q * z) ** 2 + d * d)

    def gradient(self, z, d):
        q = self.q
        p = 1.0 - 2.0 * q * z
        dz = 4.0 * q * q * self.r + p * p + d * d - 4.0 * q * (z + 0.5) * p
        dd = 2.0 * d * (z + 0.5)
        return dz, dd

    def y_out(self, z, d):
        p = 1.0 - 2.0 * self.q * z
        return -4.0 * self.alpha_in * self.q * z * d / (p * p + d * d)


def _continue(curve, z0, d_target, gamma):
    """Pseudo-arclength continuation of the detuned curve from (z0, 0) up to d_target."""
    scale = max(d_target, 1.0)
    z, u = z0, 0.0
    tangent = np.array([0.0, 1.0])
    step = 0.05

    for _ in range(100000):
        if u >= 1.0:
            break

        predictor = np.array([z, u]) + step * tangent
        point = predictor.copy()
        converged = False

        for _ in range(20):
            dz, dd = curve.gradient(point[0], point[1] * scale)
            residual = np.array(
                [curve.value(point[0], point[1] * scale), tangent.dot(point - predictor)]
            )
            jacobian = np.array([[dz, dd * scale], [tangent[0], tangent[1]]])
            try:
                correction = np.linalg.solve(jacobian, -residual)
            except np.linalg.LinAlgError:
                break
            point += correction
            if np.max(np.abs(correction)) < 1e-13:
                converged = True
                break

        if not converged or not -0.5 < point[0] < 0.0:
            step /= 2.0
            if step < 1e-10:
                raise _errors.NoConvergence(
                    "continuation lost the detuned branch", u * scale * gamma / 2.0
                )
            continue

        dz, dd = curve.gradient(point[0], point[1] * scale)
        new_tangent = np.array([-dd * scale, dz])
        new_tangent /= np.linalg.norm(new_tangent)
        if new_tangent.dot(tangent) < 0:
            new_tangent = -new_tangent

        if new_tangent[1] <= 0.0:
            raise _errors.NoConvergence(
                "dispersive curve folds before the requested detuning", u * scale * gamma / 2.0
            )

        z, u = point
        tangent = new_tangent
        step = min(step * 1.5, 0.1)
    else:
        raise _errors.NoConvergence("continuation step budget exhausted", u * scale * gamma / 2.0)

    # last step overshot the target: solve G(z, d_target) = 0 from the interpolated guess
    z_guess = z - (u - 1.0) * tangent[0] / tangent[1]
    try:
        return optimize.newton(lambda x: curve.value(x, d_target), z_guess, tol=1e-15)
    except RuntimeError:
        raise _errors.NoConvergence("final detuning solve failed", u * scale * gamma / 2.0)


def static_detuning_response(params, derived, delta0, branch):
    """Mean output Y quadrature at a constant atom-drive detuning.

    The ideal model is solved in closed form on the Bloch sphere. The non-ideal model
    follows its steady-state branch from delta0 = 0 by pseudo-arclength continuation.

    Args:
        params (SystemParams): parameter set.
        derived (DerivedParams): its derived scales.
        delta0 (float): detuning in rad/s.
        branch (IdealState or MeanFieldState): the branch at zero detuning.

    Returns:
        (DispersiveSample): detuning, mean Y_out and the detuned inversion.

    Raises:
        NoConvergence: when the branch folds or is lost before |delta0|.
    """
    if delta0 == 0.0:
        return DispersiveSample(
            delta0=0.0, y_out=0.0, z=normalized_inversion(branch, derived)
        )

    if is_ideal(branch):
        return _ideal_dispersive(params, derived, delta0)

    curve = _DetunedCurve(params, derived)
    d_target = 2.0 * abs(delta0) / derived.Gamma
    z = _continue(curve, branch.z, d_target, derived.Gamma)
    y_out = math.copysign(curve.y_out(z, d_target), delta0)
    return DispersiveSample(delta0=delta0, y_out=y_out, z=z)


def dispersive_extremum(params, derived, branch, points=64):
    """Location and height of the dispersive-curve maximum for delta0 > 0."""
    if is_ideal(branch):
        scale = derived.NCgamma
    else:
        p0 = 1.0 - 2.0 * derived.NC_eff * branch.z
        r = params.alpha_in_sq / (8.0 * derived.I0)
        scale = derived.Gamma * max(1.0, p0, 2.0 * derived.NC_eff * math.sqrt(r))

    def response(delta):
        return static_detuning_response(params, derived, delta, branch).y_out

    grid = np.geomspace(1e-4 * scale, 1e4 * scale, points)
    values = []
    for delta in grid:
        try:
            values.append(response(delta))
        except _errors.NoConvergence as e:
            logger.debug("dispersive scan stopped at %g rad/s: %s", delta, e)
            break

    if len(values) < 3:
        raise _errors.NoConvergence("dispersive curve lost near the origin", grid[0])

    best = int(np.argmax(values))
    if best == len(values) - 1:
        logger.warning("dispersive maximum not bracketed below %g rad/s", grid[best])
        return DispersiveExtremum(delta0=grid[best], y_out=values[best])

    low = math.log(grid[max(best - 1, 0)])
    high = math.log(grid[best + 1])
    result = optimize.minimize_scalar(
        lambda x: -response(math.exp(x)), bounds=(low, high), method="bounded",
        options={"xatol": 1e-8},
    )
    return DispersiveExtremum(delta0=math.exp(result.x), y_out=-result.fun)
