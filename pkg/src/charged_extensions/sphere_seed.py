"""Seed geometries and normalized metric paths on the sphere.

Round seeds are supported in every dimension; non-round seeds are
axisymmetric conformal metrics e^(2w(theta)) g* on the 2-sphere.  A seed
is deformed to the round metric through the conformal family with
exponent (1-t)w, and the raw family is then normalized so that

- the path starts at the seed and is constant after a switch time,
- every time slice has the same total area as the seed,
- the area form is independent of time, achieved by matching cumulative
  area functions through a monotone reparametrization of theta.

The module also provides the Gaussian curvature of a seed, the first
eigenvalue and eigenfunction of -Laplacian + K restricted to axisymmetric
functions, curvature floors with lapse-threshold suggestions, and the
composed slice fields (volume form, scalar curvature, time-derivative
norms, eigenfunction data) consumed by the collar construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .errors import ConstructionError, DomainError, InternalConsistencyError
from .numutil import diff1_4th, diff2_4th, simpson_uniform, smooth_step
from .quasilocal import unit_sphere_volume

__all__ = [
    "AxisymConformalMetric",
    "MetricPath",
    "SliceGeometry",
    "EigenPath",
    "axisym_metric_from_function",
    "round_metric",
    "gaussian_curvature",
    "conformal_path",
    "normalize_path",
    "round_path",
    "lambda1",
    "CurvatureFloor",
    "curvature_floor_along_path",
    "slice_geometry",
    "eigen_along_path",
]

_DEFAULT_N_THETA = 1025
_DEFAULT_N_T = 513
_POLE_TOL = 1e-6


@dataclass(frozen=True)
class AxisymConformalMetric:
    """Axisymmetric conformal metric e^(2w(theta)) g* on the 2-sphere.

    The exponent w is sampled on a uniform theta grid over [0, pi] with
    both endpoints included.  Pole regularity (w'(0) = w'(pi) = 0 up to
    grid tolerance) is enforced on construction; the order records how
    many odd derivatives are required to vanish at the poles.
    """

    theta_grid: np.ndarray
    w: np.ndarray
    pole_regularity_order: int = 1

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta_grid, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if theta.ndim != 1 or theta.size < 9:
            raise DomainError("theta_grid must be 1-d with at least 9 samples")
        if w.shape != theta.shape:
            raise DomainError("w must match theta_grid in shape")
        if not (abs(theta[0]) < 1e-15 and abs(theta[-1] - math.pi) < 1e-12):
            raise DomainError("theta_grid must span [0, pi] inclusive")
        steps = np.diff(theta)
        if not np.allclose(steps, steps[0], rtol=0.0, atol=1e-12):
            raise DomainError("theta_grid must be uniform")
        if not np.all(np.isfinite(w)):
            raise DomainError("w samples must be finite")
        object.__setattr__(self, "theta_grid", theta)
        object.__setattr__(self, "w", w)
        dw = diff1_4th(w, float(steps[0]))
        scale = _POLE_TOL * (1.0 + float(np.max(np.abs(dw))))
        if abs(dw[0]) > scale or abs(dw[-1]) > scale:
            raise DomainError(
                "pole-irregular exponent: w'(0) = "
                f"{dw[0]!r}, w'(pi) = {dw[-1]!r}"
            )

    @property
    def theta_step(self) -> float:
        return float(self.theta_grid[1] - self.theta_grid[0])

    def area(self) -> float:
        """Total area 2*pi * integral of e^(2w) sin(theta)."""
        integrand = np.exp(2.0 * self.w) * np.sin(self.theta_grid)
        return 2.0 * math.pi * simpson_uniform(integrand, self.theta_step)

    @property
    def volume_radius(self) -> float:
        return math.sqrt(self.area() / unit_sphere_volume(2))


@dataclass(frozen=True)
class MetricPath:
    """Path of metrics on the sphere over t in [0, 1].

    Either a genuinely axisymmetric path (``metrics`` holds one conformal
    gauge representative per t and ``reparam`` the theta maps taking the
    gauge representative to the area-normalized slice) or a constant round
    path tagged by ``round_radius``.  ``volume_form_deviation`` is the
    measured maximum time derivative of the slice area form.
    """

    n: int
    t_grid: np.ndarray
    theta_switch: float
    volume_form_deviation: float
    metrics: tuple | None = None
    reparam: np.ndarray | None = None
    round_radius: float | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size < 5:
            raise DomainError("t_grid must be 1-d with at least 5 samples")
        if not np.all(np.diff(t) > 0.0):
            raise DomainError("t_grid must be strictly increasing")
        if abs(t[0]) > 1e-15 or abs(t[-1] - 1.0) > 1e-12:
            raise DomainError("t_grid must span [0, 1]")
        if not 0.0 < self.theta_switch < 1.0:
            raise DomainError("theta_switch must lie in (0, 1)")
        if (self.round_radius is None) == (self.metrics is None):
            raise DomainError("exactly one of metrics / round_radius must be set")
        if self.round_radius is not None and not self.round_radius > 0.0:
            raise DomainError("round_radius must be positive")
        if self.metrics is not None:
            if len(self.metrics) != t.size:
                raise DomainError("need one metric per t sample")
            if self.reparam is None or self.reparam.shape != (
                t.size,
                self.metrics[0].theta_grid.size,
            ):
                raise DomainError("reparam must hold one theta map per t sample")
        object.__setattr__(self, "t_grid", t)

    @property
    def is_round(self) -> bool:
        return self.round_radius is not None

    @property
    def r_o(self) -> float:
        """Volume radius shared by every slice of the path."""
        if self.round_radius is not None:
            return self.round_radius
        return self.metrics[0].volume_radius


@dataclass(frozen=True)
class SliceGeometry:
    """Composed per-slice fields of a normalized path.

    Arrays have shape (n_t, n_theta); round paths use n_theta = 1.
    ``gprime_sq`` is the squared norm of the metric time derivative,
    ``trace_gprime`` its trace, both with respect to the slice metric.
    """

    t_grid: np.ndarray
    theta_grid: np.ndarray
    sqrt_det: np.ndarray
    scalar_curvature: np.ndarray
    gprime_sq: np.ndarray
    trace_gprime: np.ndarray


@dataclass(frozen=True)
class EigenPath:
    """Eigenfunction data of -Laplacian + K along a normalized path.

    ``u`` is normalized so the integral of u^2 over each slice equals the
    slice area, ``du_dt`` is its time derivative, and ``laplace_u`` the
    slice Laplacian of u.  Shapes follow SliceGeometry.
    """

    t_grid: np.ndarray
    theta_grid: np.ndarray
    lambda1: np.ndarray
    u: np.ndarray
    du_dt: np.ndarray
    laplace_u: np.ndarray


def axisym_metric_from_function(fn, n_theta: int = _DEFAULT_N_THETA) -> AxisymConformalMetric:
    """Sample the exponent function fn(theta) on a uniform grid."""
    theta = np.linspace(0.0, math.pi, n_theta)
    return AxisymConformalMetric(theta_grid=theta, w=np.asarray(fn(theta), dtype=float))


def round_metric(r_o: float, n_theta: int = _DEFAULT_N_THETA) -> AxisymConformalMetric:
    """Round 2-sphere of radius r_o as a constant-exponent metric."""
    if not r_o > 0.0:
        raise DomainError(f"radius must be positive, got {r_o!r}")
    theta = np.linspace(0.0, math.pi, n_theta)
    return AxisymConformalMetric(theta_grid=theta, w=np.full(n_theta, math.log(r_o)))


def _laplacian_axisym(theta: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Round-sphere Laplacian of an axisymmetric function from samples.

    Computes f'' + cot(theta) f' with fourth-order differences; at the
    poles the limit is 2 f''(pole) for pole-regular data.
    """
    dtheta = float(theta[1] - theta[0])
    d1 = diff1_4th(values, dtheta)
    d2 = diff2_4th(values, dtheta)
    out = np.empty_like(values)
    out[1:-1] = d2[1:-1] + d1[1:-1] * (np.cos(theta[1:-1]) / np.sin(theta[1:-1]))
    out[0] = 2.0 * d2[0]
    out[-1] = 2.0 * d2[-1]
    return out


def gaussian_curvature(metric: AxisymConformalMetric) -> np.ndarray:
    """Gaussian curvature samples K = e^(-2w) (1 - Laplacian w)."""
    lap = _laplacian_axisym(metric.theta_grid, metric.w)
    return np.exp(-2.0 * metric.w) * (1.0 - lap)


def conformal_path(seed: AxisymConformalMetric, t: float) -> AxisymConformalMetric:
    """Metric at time t of the conformal family with exponent (1-t)w."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"path time must lie in [0, 1], got {t!r}")
    return AxisymConformalMetric(
        theta_grid=metric_grid_copy(seed.theta_grid),
        w=(1.0 - t) * seed.w,
        pole_regularity_order=seed.pole_regularity_order,
    )


def metric_grid_copy(theta: np.ndarray) -> np.ndarray:
    return np.array(theta, dtype=float, copy=True)


def _time_clamp(t: np.ndarray, theta_switch: float) -> np.ndarray:
    """Smooth ramp from 0 at t=0 to exactly 1 for t >= theta_switch."""
    return smooth_step(np.asarray(t, dtype=float) / theta_switch)


def _cumulative_area_spline(theta: np.ndarray, w: np.ndarray):
    """Spline of the area integrand e^(2w) sin(theta) and its antiderivative."""
    integrand = np.exp(2.0 * w) * np.sin(theta)
    density = CubicSpline(theta, integrand)
    return density, density.antiderivative()


def _invert_cumulative(theta, density, cumulative, targets):
    """Solve cumulative(x) = target for each target by Newton iteration.

    The cumulative function is strictly increasing on (0, pi); initial
    guesses come from piecewise-linear inversion of the sampled values.
    """
    samples = cumulative(theta)
    if not np.all(np.diff(samples) > 0.0):
        raise InternalConsistencyError("cumulative area is not strictly increasing")
    total = float(samples[-1])
    x = np.interp(targets, samples, theta)
    slope_floor = 1e-12 * float(np.max(density(theta)))
    for _ in range(6):
        resid = cumulative(x) - targets
        slope = np.maximum(density(x), slope_floor)
        x = np.clip(x - resid / slope, 0.0, math.pi)
    resid = np.abs(cumulative(x) - targets)
    bad = resid > 1e-12 * total
    if np.any(bad):
        from scipy.optimize import brentq

        for idx in np.nonzero(bad)[0]:
            x[idx] = brentq(
                lambda v, tt=targets[idx]: cumulative(v) - tt, 0.0, math.pi,
                xtol=1e-14, rtol=8.9e-16,
            )
    x[0] = 0.0
    x[-1] = math.pi
    return x


def normalize_path(
    seed: AxisymConformalMetric,
    n_t: int = _DEFAULT_N_T,
    theta_switch: float = 0.75,
) -> MetricPath:
    """Normalize the conformal family of an axisymmetric seed.

    Applies, in order: a smooth time clamp making the path constant on
    [theta_switch, 1]; a per-slice dilation fixing every total area to the
    seed area; and a theta reparametrization per slice matching cumulative
    area functions, which renders the area form time independent.  The
    residual time dependence of the area form is measured independently
    (Newton-inverted maps differentiated on their own) and reported as
    ``volume_form_deviation``.
    """
    theta = seed.theta_grid
    t_grid = np.linspace(0.0, 1.0, n_t)
    ramp = _time_clamp(t_grid, theta_switch)

    if float(np.max(np.abs(seed.w - seed.w[0]))) == 0.0:
        # Constant exponent: the path never moves.
        return MetricPath(
            n=2,
            t_grid=t_grid,
            theta_switch=theta_switch,
            volume_form_deviation=0.0,
            round_radius=seed.volume_radius,
        )

    density0, cumulative0 = _cumulative_area_spline(theta, seed.w)
    total0 = float(cumulative0(math.pi))

    metrics = []
    maps = np.empty((n_t, theta.size))
    for k in range(n_t):
        w_raw = (1.0 - ramp[k]) * seed.w
        density, cumulative = _cumulative_area_spline(theta, w_raw)
        total = float(cumulative(math.pi))
        # Dilation bringing the slice area back to the seed area.
        c = 0.5 * math.log(total0 / total)
        metrics.append(
            AxisymConformalMetric(theta_grid=theta, w=w_raw + c)
        )
        # Cumulative matching for the dilated metric reduces to matching
        # the undilated cumulative against a rescaled target.
        targets = cumulative0(theta) * (total / total0)
        maps[k] = _invert_cumulative(theta, density, cumulative, targets)

    deviation = _measure_volume_form_deviation(t_grid, theta, metrics, maps)
    return MetricPath(
        n=2,
        t_grid=t_grid,
        theta_switch=theta_switch,
        volume_form_deviation=deviation,
        metrics=tuple(metrics),
        reparam=maps,
    )


def _measure_volume_form_deviation(t_grid, theta, metrics, maps) -> float:
    """Max time derivative of the composed area form, measured honestly.

    The theta derivative of each reparametrizing map is taken from the
    sampled map itself (spline differentiation), not from the chain-rule
    identity that would make the area form static by construction.
    """
    n_t = t_grid.size
    sqrt_det = np.empty((n_t, theta.size))
    for k in range(n_t):
        w_spline = CubicSpline(theta, metrics[k].w)
        map_spline = CubicSpline(theta, maps[k])
        composed = maps[k]
        dmap = map_spline(theta, 1)
        sqrt_det[k] = np.exp(2.0 * w_spline(composed)) * np.sin(composed) * dmap
    dt = float(t_grid[1] - t_grid[0])
    time_deriv = diff1_4th(sqrt_det.T, dt).T
    return float(np.max(np.abs(time_deriv)))


def round_path(
    n: int,
    r_o: float,
    n_t: int = _DEFAULT_N_T,
    theta_switch: float = 0.75,
) -> MetricPath:
    """Constant round path in dimension n with slice radius r_o."""
    if not isinstance(n, int) or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n!r}")
    if not r_o > 0.0:
        raise DomainError(f"radius must be positive, got {r_o!r}")
    return MetricPath(
        n=n,
        t_grid=np.linspace(0.0, 1.0, n_t),
        theta_switch=theta_switch,
        volume_form_deviation=0.0,
        round_radius=r_o,
    )


def _sl_matrices(theta: np.ndarray, w: np.ndarray):
    """Tridiagonal discretization of -(sin u')' + K e^(2w) sin u = lam e^(2w) sin u.

    Finite-volume form with lumped weights; pole cells use the quadratic
    vanishing of the weight.  Returns the symmetrized tridiagonal (diag,
    offdiag), the lumping weights, and the scaling used to symmetrize.
    """
    dtheta = float(theta[1] - theta[0])
    size = theta.size
    lap_w = _laplacian_axisym(theta, w)
    # K e^(2w) = 1 - Laplacian(w) in this gauge.
    potential_density = (1.0 - lap_w) * np.sin(theta)
    weight_density = np.exp(2.0 * w) * np.sin(theta)

    mass = np.empty(size)
    pot = np.empty(size)
    mass[1:-1] = dtheta * weight_density[1:-1]
    pot[1:-1] = dtheta * potential_density[1:-1]
    mass[0] = math.exp(2.0 * w[0]) * dtheta ** 2 / 8.0
    mass[-1] = math.exp(2.0 * w[-1]) * dtheta ** 2 / 8.0
    pot[0] = (1.0 - lap_w[0]) * dtheta ** 2 / 8.0
    pot[-1] = (1.0 - lap_w[-1]) * dtheta ** 2 / 8.0

    face = np.sin(theta[:-1] + 0.5 * dtheta) / dtheta
    diag = pot.copy()
    diag[0] += face[0]
    diag[-1] += face[-1]
    diag[1:-1] += face[:-1] + face[1:]
    off = -face

    scale = np.sqrt(mass)
    sym_diag = diag / mass
    sym_off = off / (scale[:-1] * scale[1:])
    return sym_diag, sym_off, mass, scale


def _solve_sl(theta: np.ndarray, w: np.ndarray):
    """Lowest eigenpair of the discretized operator on the given grid."""
    sym_diag, sym_off, mass, scale = _sl_matrices(theta, w)
    vals, vecs = eigh_tridiagonal(
        sym_diag, sym_off, select="i", select_range=(0, 0)
    )
    u = vecs[:, 0] / scale
    if u[np.argmax(np.abs(u))] < 0.0:
        u = -u
    if np.min(u) <= 0.0:
        raise ConstructionError(
            "ground state is not positive",
            diagnostics={"min_u": float(np.min(u))},
        )
    residual = _sl_residual(sym_diag, sym_off, float(vals[0]), vecs[:, 0])
    if residual > 1e-8:
        raise ConstructionError(
            "eigenvalue solve did not converge",
            diagnostics={"residual": residual},
        )
    return float(vals[0]), u


def _sl_residual(diag, off, value, vec) -> float:
    prod = diag * vec
    prod[:-1] += off * vec[1:]
    prod[1:] += off * vec[:-1]
    return float(np.linalg.norm(prod - value * vec) / np.linalg.norm(vec))


def lambda1(metric: AxisymConformalMetric) -> tuple[float, np.ndarray]:
    """First eigenvalue and eigenfunction of -Laplacian + K on the metric.

    The operator is restricted to axisymmetric functions and discretized
    as a weighted Sturm-Liouville problem; the eigenvalue is Richardson
    extrapolated from the metric grid and a doubled grid, and the
    eigenfunction (from the fine grid, restricted back) is normalized so
    its squared integral equals the total area.
    """
    theta = metric.theta_grid
    value_coarse, _ = _solve_sl(theta, metric.w)

    fine_theta = np.linspace(0.0, math.pi, 2 * (theta.size - 1) + 1)
    fine_w = CubicSpline(theta, metric.w)(fine_theta)
    value_fine, u_fine = _solve_sl(fine_theta, fine_w)

    value = (4.0 * value_fine - value_coarse) / 3.0
    u = u_fine[::2]

    weight = np.exp(2.0 * metric.w) * np.sin(theta)
    norm_sq = 2.0 * math.pi * simpson_uniform(u * u * weight, metric.theta_step)
    u = u * math.sqrt(metric.area() / norm_sq)
    return value, u


@dataclass(frozen=True)
class CurvatureFloor:
    """Curvature floor of a path and lapse-threshold candidates.

    ``min_curvature`` is the minimum sectional curvature over the path
    (Gaussian curvature for n = 2).  Candidates follow the selection
    rules: the eigenvalue route scales the minimum first eigenvalue down
    by the margin; the positive-scalar route scales half the minimum
    scalar curvature down (present only if that minimum is positive); the
    negative-floor route scales the negative part of the curvature up.
    """

    min_curvature: float
    margin: float
    kappa_eigenfunction: float
    kappa_negative_floor: float
    kappa_positive_scalar: float | None


def _path_min_curvature(path: MetricPath) -> float:
    if path.is_round:
        return 1.0 / path.r_o ** 2
    return min(
        float(np.min(gaussian_curvature(metric))) for metric in path.metrics
    )


def curvature_floor_along_path(
    path: MetricPath, margin: float = 0.05, eigen_samples: int = 65
) -> CurvatureFloor:
    """Curvature floor and lapse-threshold candidates for a path."""
    min_k = _path_min_curvature(path)
    n = path.n
    if path.is_round:
        min_scal = n * (n - 1) / path.r_o ** 2
        min_lam1 = 0.5 * min_scal
    else:
        min_scal = 2.0 * min_k
        count = min(eigen_samples, path.t_grid.size)
        indices = np.unique(
            np.round(np.linspace(0, path.t_grid.size - 1, count)).astype(int)
        )
        min_lam1 = min(lambda1(path.metrics[idx])[0] for idx in indices)
    return CurvatureFloor(
        min_curvature=min_k,
        margin=margin,
        kappa_eigenfunction=min_lam1 * (1.0 - margin),
        kappa_negative_floor=max(0.0, -min_k) * (1.0 + margin),
        kappa_positive_scalar=(
            0.5 * min_scal * (1.0 - margin) if min_scal > 0.0 else None
        ),
    )


def _composed_fields(path: MetricPath):
    """Composed conformal data of every slice in the fixed area gauge.

    Returns exponent, curvature, map derivative and map arrays of shape
    (n_t, n_theta), where each row is the conformal-gauge field evaluated
    along the reparametrizing map.  The map derivative uses the chain
    rule through the cumulative-area identity, which is the derivative of
    the exact solution map.
    """
    theta = path.metrics[0].theta_grid
    n_t = path.t_grid.size
    exponent = np.empty((n_t, theta.size))
    curvature = np.empty((n_t, theta.size))
    dmap = np.empty((n_t, theta.size))
    maps = path.reparam
    density0, _ = _cumulative_area_spline(theta, path.metrics[0].w)
    base_density = density0(theta)
    for k in range(n_t):
        metric = path.metrics[k]
        w_spline = CubicSpline(theta, metric.w)
        k_spline = CubicSpline(theta, gaussian_curvature(metric))
        composed = maps[k]
        exponent[k] = w_spline(composed)
        curvature[k] = k_spline(composed)
        # Chain rule: dTheta/dtheta = density0(theta) / density_t(Theta),
        # with both densities measured in the common area normalization.
        density_t = np.exp(2.0 * exponent[k]) * np.sin(composed)
        dmap[k] = _safe_ratio(base_density, density_t, theta, composed)
    return exponent, curvature, dmap, maps


def _safe_ratio(numer, denom, theta, composed):
    """Ratio of area densities with pole values filled by parity."""
    out = np.empty_like(numer)
    interior = slice(1, -1)
    out[interior] = numer[interior] / denom[interior]
    # At the poles both densities vanish linearly, so the ratio extends to
    # an even smooth function; fit out = c0 + c2 theta^2 to the two nearest
    # interior values.
    out[0] = out[1] - (out[2] - out[1]) / 3.0
    out[-1] = out[-2] - (out[-3] - out[-2]) / 3.0
    return out


def slice_geometry(path: MetricPath) -> SliceGeometry:
    """Slice fields of a normalized path in the fixed area gauge.

    Results are cached on the path object.  For round paths all fields
    are constant with a single theta sample per slice.
    """
    cached = getattr(path, "_slice_geometry", None)
    if cached is not None:
        return cached

    if path.is_round:
        n_t = path.t_grid.size
        shape = (n_t, 1)
        r_o = path.r_o
        geometry = SliceGeometry(
            t_grid=path.t_grid,
            theta_grid=np.zeros(1),
            sqrt_det=np.full(shape, r_o ** path.n),
            scalar_curvature=np.full(shape, path.n * (path.n - 1) / r_o ** 2),
            gprime_sq=np.zeros(shape),
            trace_gprime=np.zeros(shape),
        )
        object.__setattr__(path, "_slice_geometry", geometry)
        return geometry

    theta = path.metrics[0].theta_grid
    exponent, curvature, dmap, maps = _composed_fields(path)
    conf = np.exp(2.0 * exponent)
    a_comp = conf * dmap ** 2
    b_comp = conf * np.sin(maps) ** 2

    dt = float(path.t_grid[1] - path.t_grid[0])
    da = diff1_4th(a_comp.T, dt).T
    db_full = diff1_4th(b_comp.T, dt).T

    # The azimuthal component vanishes quadratically at the poles; its
    # logarithmic derivative is continued from the interior by parity.
    ratio_b = np.empty_like(db_full)
    ratio_b[:, 1:-1] = db_full[:, 1:-1] / b_comp[:, 1:-1]
    ratio_b[:, 0] = ratio_b[:, 1] - (ratio_b[:, 2] - ratio_b[:, 1]) / 3.0
    ratio_b[:, -1] = ratio_b[:, -2] - (ratio_b[:, -3] - ratio_b[:, -2]) / 3.0
    ratio_a = da / a_comp

    geometry = SliceGeometry(
        t_grid=path.t_grid,
        theta_grid=theta,
        sqrt_det=np.sqrt(a_comp * b_comp),
        scalar_curvature=2.0 * curvature,
        gprime_sq=ratio_a ** 2 + ratio_b ** 2,
        trace_gprime=ratio_a + ratio_b,
    )
    object.__setattr__(path, "_slice_geometry", geometry)
    return geometry


def eigen_along_path(path: MetricPath) -> EigenPath:
    """Eigenfunction data of -Laplacian + K along a normalized path.

    Eigenpairs are computed per slice in the conformal gauge, composed
    with the reparametrizing maps, and differentiated in time.  Results
    are cached on the path object.
    """
    cached = getattr(path, "_eigen_path", None)
    if cached is not None:
        return cached

    n_t = path.t_grid.size
    if path.is_round:
        n = path.n
        r_o = path.r_o
        shape = (n_t, 1)
        eigen = EigenPath(
            t_grid=path.t_grid,
            theta_grid=np.zeros(1),
            lambda1=np.full(n_t, 0.5 * n * (n - 1) / r_o ** 2),
            u=np.ones(shape),
            du_dt=np.zeros(shape),
            laplace_u=np.zeros(shape),
        )
        object.__setattr__(path, "_eigen_path", eigen)
        return eigen

    theta = path.metrics[0].theta_grid
    values = np.empty(n_t)
    u_comp = np.empty((n_t, theta.size))
    lap_comp = np.empty((n_t, theta.size))
    for k in range(n_t):
        metric = path.metrics[k]
        value, u = _solve_sl(theta, metric.w)
        weight = np.exp(2.0 * metric.w) * np.sin(theta)
        norm_sq = 2.0 * math.pi * simpson_uniform(u * u * weight, metric.theta_step)
        u = u * math.sqrt(metric.area() / norm_sq)
        values[k] = value
        lap_gauge = np.exp(-2.0 * metric.w) * _laplacian_axisym(theta, u)
        composed = path.reparam[k]
        u_comp[k] = CubicSpline(theta, u)(composed)
        lap_comp[k] = CubicSpline(theta, lap_gauge)(composed)

    dt = float(path.t_grid[1] - path.t_grid[0])
    du_dt = diff1_4th(u_comp.T, dt).T
    eigen = EigenPath(
        t_grid=path.t_grid,
        theta_grid=theta,
        lambda1=values,
        u=u_comp,
        du_dt=du_dt,
        laplace_u=lap_comp,
    )
    object.__setattr__(path, "_eigen_path", eigen)
    return eigen
