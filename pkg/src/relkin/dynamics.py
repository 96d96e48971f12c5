"""Relativistic transport along characteristics, driven by the zero-point
field or by simple test fields.

The transport equation p^mu d_{x^mu} R + m F^mu d_{p^mu} R = 0 is solved by
constancy along characteristics.  In lab time the characteristic ODEs are

    dx/dt = p / p0,      dp/dt  = q (E + v x B),      dp0/dt = q E . v,

integrated with classical RK4 on the full four-momentum.  The exact flow
preserves p.p = m^2; the integrator does not, so after every step the
invariant defect |p.p - m^2| / m^2 is recorded and p0 is re-projected onto
the shell.  The recorded pre-projection drift is the integrator diagnostic.

Ensembles are embarrassingly parallel: every trajectory owns named random
streams (initial conditions and, for charged runs, a fresh field
realization), so results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.special import ndtr

from .core import OnShellMomentum, minkowski_dot, stream_rng
from .vacuum import ModeSet, eb_fields, sample_modes

HIST_AXES = ("x1", "x2", "x3", "p1", "p2", "p3")

# stream namespace tags: 1 = initial conditions, 2 = per-trajectory modes,
# 3 = shared modes
_STREAM_INIT = 1
_STREAM_MODES = 2
_STREAM_SHARED = 3


class IntegrationBlowupError(RuntimeError):
    """Trajectory left the numerically trustworthy region."""


@dataclass(frozen=True)
class UniformField:
    """Constant electric and magnetic test field."""

    e: np.ndarray
    b: np.ndarray

    def eval_eb(self, t, x3):
        return np.asarray(self.e, dtype=float), np.asarray(self.b, dtype=float)


@dataclass(frozen=True)
class BoyerField:
    """Zero-point mode sum exposed through the E/B interface."""

    modes: ModeSet

    def eval_eb(self, t, x3):
        return eb_fields(self.modes, t, x3)


@dataclass
class Trajectory:
    times: np.ndarray     # (s,)
    xs: np.ndarray        # (s, 3)
    ps: np.ndarray        # (s, 4), re-projected on shell at every sample
    drifts: np.ndarray    # (s,) pre-projection |p.p - m^2|/m^2 at sample steps
    max_drift: float      # max over every step, not only samples
    mass: float
    charge: float


def _deriv(field, charge, t, x3, p4):
    e, b = field.eval_eb(t, x3)
    v = p4[1:] / p4[0]
    dp = np.empty(4)
    dp[0] = charge * np.dot(e, v)
    dp[1:] = charge * (e + np.cross(v, b))
    return v, dp


def integrate_trajectory(field, x0, p0: OnShellMomentum, charge: float,
                         t_span: float, dt: float, t0: float = 0.0,
                         sample_stride: int = 1,
                         drift_abort: float = 1e-3) -> Trajectory:
    """Classical RK4 along the lab-time characteristic.

    The four-momentum is integrated whole; after each step the mass-shell
    defect is recorded and p0 is recomputed from the spatial momentum.
    Samples are kept every sample_stride steps (plus the endpoints).
    """
    n_steps = int(round(t_span / dt))
    if n_steps < 1 or abs(n_steps * dt - t_span) > 1e-9 * max(t_span, dt):
        raise ValueError(f"t_span {t_span} is not an integer number of steps dt {dt}")
    mass = p0.mass
    m2 = mass * mass
    x = np.array(x0, dtype=float)
    p4 = p0.four

    keep = [0] + list(range(sample_stride, n_steps, sample_stride)) + [n_steps]
    keep = sorted(set(keep))
    times = np.empty(len(keep))
    xs = np.empty((len(keep), 3))
    ps = np.empty((len(keep), 4))
    drifts = np.empty(len(keep))
    keep_pos = {s: i for i, s in enumerate(keep)}

    def record(step, drift):
        i = keep_pos[step]
        times[i] = t0 + step * dt
        xs[i] = x
        ps[i] = p4
        drifts[i] = drift

    max_drift = 0.0
    record(0, 0.0)
    for step in range(n_steps):
        t = t0 + step * dt
        v1, dp1 = _deriv(field, charge, t, x, p4)
        v2, dp2 = _deriv(field, charge, t + 0.5 * dt, x + 0.5 * dt * v1, p4 + 0.5 * dt * dp1)
        v3, dp3 = _deriv(field, charge, t + 0.5 * dt, x + 0.5 * dt * v2, p4 + 0.5 * dt * dp2)
        v4, dp4 = _deriv(field, charge, t + dt, x + dt * v3, p4 + dt * dp3)
        x = x + (dt / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
        p4 = p4 + (dt / 6.0) * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4)

        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p4))):
            raise IntegrationBlowupError(f"non-finite state at step {step + 1}")
        drift = abs(minkowski_dot(p4, p4) - m2) / m2
        if drift > drift_abort:
            raise IntegrationBlowupError(
                f"mass-shell drift {drift:.3e} beyond {drift_abort:.3e} at step {step + 1}"
            )
        max_drift = max(max_drift, drift)
        p4[0] = np.sqrt(m2 + np.dot(p4[1:], p4[1:]))
        if step + 1 in keep_pos:
            record(step + 1, drift)

    return Trajectory(times, xs, ps, drifts, max_drift, mass, charge)


def newtonian_trajectory(field, x0, p0_3, mass: float, charge: float,
                         t_span: float, dt: float, t0: float = 0.0) -> Trajectory:
    """Same field and stepping, Newtonian kinematics dx/dt = p/m."""
    n_steps = int(round(t_span / dt))
    x = np.array(x0, dtype=float)
    p = np.array(p0_3, dtype=float)

    def deriv(t, x3, p3):
        e, b = field.eval_eb(t, x3)
        v = p3 / mass
        return v, charge * (e + np.cross(v, b))

    times = np.empty(n_steps + 1)
    xs = np.empty((n_steps + 1, 3))
    ps = np.empty((n_steps + 1, 4))
    times[0], xs[0], ps[0] = t0, x, np.concatenate(([mass], p))
    for step in range(n_steps):
        t = t0 + step * dt
        v1, f1 = deriv(t, x, p)
        v2, f2 = deriv(t + 0.5 * dt, x + 0.5 * dt * v1, p + 0.5 * dt * f1)
        v3, f3 = deriv(t + 0.5 * dt, x + 0.5 * dt * v2, p + 0.5 * dt * f2)
        v4, f4 = deriv(t + dt, x + dt * v3, p + dt * f3)
        x = x + (dt / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
        p = p + (dt / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        times[step + 1] = t + dt
        xs[step + 1] = x
        ps[step + 1] = np.concatenate(([mass], p))
    return Trajectory(times, xs, ps, np.zeros(n_steps + 1), 0.0, mass, charge)


def drift_scaling(field, x0, p0: OnShellMomentum, charge: float,
                  t_span: float, dts) -> list[float]:
    """Max pre-projection drift for each step size; for order checks."""
    return [
        integrate_trajectory(field, x0, p0, charge, t_span, dt,
                             sample_stride=10**9, drift_abort=np.inf).max_drift
        for dt in dts
    ]


def nonrelativistic_consistency(charge: float, mass: float, speeds,
                                t_span: float, dt: float,
                                field_strength: float = 0.005) -> list[dict]:
    """Relativistic vs Newtonian positions in a gentle transverse E field.

    Both integrators start with exactly the same velocity v along x1; the
    test field accelerates along x2.  Reported deviations are relative to
    the Newtonian displacement scale and grow as O(v^2).
    """
    rows = []
    for v in speeds:
        gamma = 1.0 / np.sqrt(1.0 - v * v)
        e_mag = field_strength * v * mass * mass / max(charge, 1e-30)
        fld = UniformField(np.array([0.0, e_mag, 0.0]), np.zeros(3))
        p_rel = OnShellMomentum(np.array([gamma * mass * v, 0.0, 0.0]), mass)
        rel = integrate_trajectory(fld, np.zeros(3), p_rel, charge, t_span, dt,
                                   drift_abort=np.inf)
        newt = newtonian_trajectory(fld, np.zeros(3), np.array([mass * v, 0.0, 0.0]),
                                    mass, charge, t_span, dt)
        x_scale = np.max(np.linalg.norm(newt.xs, axis=1))
        p_scale = np.max(np.linalg.norm(newt.ps[:, 1:] - newt.ps[0, 1:], axis=1)) + mass * v
        dev_x = np.max(np.linalg.norm(rel.xs - newt.xs, axis=1)) / x_scale
        dev_p = np.max(np.linalg.norm(rel.ps[:, 1:] - newt.ps[:, 1:], axis=1)) / p_scale
        rows.append({"speed": float(v), "deviation_x": float(dev_x),
                     "deviation_p": float(dev_p)})
    return rows


# ---------------------------------------------------------------------------
# ensembles

@dataclass(frozen=True)
class EnsembleConfig:
    """Gaussian phase-space cloud pushed through the transport flow.

    x_sigma / p_sigma entries may be zero (delta components).  mode_source
    is "fresh" (independent field realization per trajectory), "shared"
    (one realization for all), or "none" (free streaming, charge must be 0).
    """

    n_trajectories: int
    mass: float
    charge: float
    x_mean: tuple
    x_sigma: tuple
    p_mean: tuple
    p_sigma: tuple
    t_span: float
    dt: float
    slice_times: tuple
    hist_axes: tuple = ("x1", "p1")
    hist_edges: tuple = ()
    mode_source: str = "none"
    k_spacing: float = 0.5
    cutoff: float = 2.0

    def __post_init__(self):
        if self.mode_source not in ("fresh", "shared", "none"):
            raise ValueError(f"unknown mode_source {self.mode_source!r}")
        if self.mode_source == "none" and self.charge != 0.0:
            raise ValueError("charged ensembles need a field; use fresh or shared modes")
        for ax in self.hist_axes:
            if ax not in HIST_AXES:
                raise ValueError(f"unknown histogram axis {ax!r}")


@dataclass
class PhaseSpaceHistogram:
    """Clipped joint histogram of selected phase-space axes at one time.

    Out-of-range samples are counted in the boundary bins, so the total
    weight is exactly the number of trajectories.
    """

    t: float
    axes: tuple
    edges: list
    counts: np.ndarray
    n_total: int

    @property
    def total_weight(self) -> int:
        return int(self.counts.sum())


def bin_phase_space(samples: np.ndarray, axes, edges, t: float) -> PhaseSpaceHistogram:
    """samples: (n, 6) rows (x1 x2 x3 p1 p2 p3); integer counts, clipped."""
    n = samples.shape[0]
    flat = 0
    for ax, edge in zip(axes, edges):
        edge = np.asarray(edge, dtype=float)
        col = samples[:, HIST_AXES.index(ax)]
        idx = np.clip(np.searchsorted(edge, col, side="right") - 1, 0, len(edge) - 2)
        flat = flat * (len(edge) - 1) + idx
    shape = tuple(len(e) - 1 for e in edges)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    return PhaseSpaceHistogram(float(t), tuple(axes), [np.asarray(e, dtype=float) for e in edges],
                               counts.astype(np.int64), n)


def _draw_initial(cfg: EnsembleConfig, seed: int, idx: int):
    rng = stream_rng(seed, _STREAM_INIT, idx)
    x0 = np.asarray(cfg.x_mean) + np.asarray(cfg.x_sigma) * rng.standard_normal(3)
    p3 = np.asarray(cfg.p_mean) + np.asarray(cfg.p_sigma) * rng.standard_normal(3)
    return x0, p3


def _slice_steps(cfg: EnsembleConfig) -> list[int]:
    steps = []
    for ts in cfg.slice_times:
        s = int(round(ts / cfg.dt))
        if abs(s * cfg.dt - ts) > 1e-9 * max(ts, cfg.dt):
            raise ValueError(f"slice time {ts} does not sit on the dt grid")
        steps.append(s)
    return steps


def _charged_task(args):
    cfg, seed, idx, shared = args
    x0, p3 = _draw_initial(cfg, seed, idx)
    if shared is not None:
        modes = shared
    else:
        modes = sample_modes(cfg.k_spacing, cfg.cutoff, stream_rng(seed, _STREAM_MODES, idx))
    p0 = OnShellMomentum(p3, cfg.mass)
    traj = integrate_trajectory(BoyerField(modes), x0, p0, cfg.charge,
                                cfg.t_span, cfg.dt, sample_stride=1,
                                drift_abort=np.inf)
    steps = _slice_steps(cfg)
    out = np.empty((len(steps), 6))
    for j, s in enumerate(steps):
        out[j, :3] = traj.xs[s]
        out[j, 3:] = traj.ps[s, 1:]
    return idx, out, traj.max_drift


def _integrate_cloud_free(x0s, p3s, mass, t_span, dt, slice_steps):
    """Vectorized RK4 for charge 0; arithmetic identical to the scalar path."""
    n_steps = int(round(t_span / dt))
    p0 = np.sqrt(mass * mass + np.sum(p3s * p3s, axis=1, keepdims=True))
    v = p3s / p0
    x = x0s.copy()
    out = {}
    if 0 in slice_steps:
        out[0] = np.hstack([x, p3s]).copy()
    for step in range(n_steps):
        # all four stages coincide for constant momentum
        x = x + dt * v
        if step + 1 in slice_steps:
            out[step + 1] = np.hstack([x, p3s]).copy()
    return out


@dataclass
class EnsembleResult:
    histograms: list
    max_drifts: np.ndarray
    n_trajectories: int


def run_ensemble(cfg: EnsembleConfig, seed: int, workers: int = 0) -> EnsembleResult:
    """Push the cloud to every slice time and bin it.

    Deterministic for a fixed (cfg, seed): per-trajectory streams, integer
    counts, and index-ordered reductions make the result independent of the
    worker count.
    """
    n = cfg.n_trajectories
    steps = _slice_steps(cfg)
    samples = np.empty((n, len(steps), 6))
    max_drifts = np.zeros(n)

    if cfg.charge == 0.0:
        draws = [_draw_initial(cfg, seed, i) for i in range(n)]
        x0s = np.array([d[0] for d in draws])
        p3s = np.array([d[1] for d in draws])
        by_step = _integrate_cloud_free(x0s, p3s, cfg.mass, cfg.t_span, cfg.dt, set(steps))
        for j, s in enumerate(steps):
            samples[:, j, :] = by_step[s]
    else:
        shared = None
        if cfg.mode_source == "shared":
            shared = sample_modes(cfg.k_spacing, cfg.cutoff, stream_rng(seed, _STREAM_SHARED))
        tasks = [(cfg, seed, i, shared) for i in range(n)]
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for idx, out, drift in pool.map(_charged_task, tasks, chunksize=8):
                    samples[idx] = out
                    max_drifts[idx] = drift
        else:
            for task in tasks:
                idx, out, drift = _charged_task(task)
                samples[idx] = out
                max_drifts[idx] = drift

    hists = []
    for j, (s, ts) in enumerate(zip(steps, cfg.slice_times)):
        hists.append(bin_phase_space(samples[:, j, :], cfg.hist_axes, cfg.hist_edges, ts))
    return EnsembleResult(hists, max_drifts, n)


def transported_cloud_probabilities(cfg: EnsembleConfig, t: float) -> np.ndarray:
    """Quadrature oracle for the free-streaming (x1, p1) histogram.

    Characteristics carry (x, p) to (x + v(p) t, p) with
    v = p1 / sqrt(m^2 + |p|^2).  For a Gaussian cloud that is delta-valued
    in p2 and p3, the expected probability of each clipped cell is

        P_ij = int_{p bin j} f(p) [Phi(b_i; p) - Phi(a_i; p)] dp,

    with Phi the Gaussian x-CDF shifted by v(p) t, evaluated with
    Gauss-Legendre quadrature.  Entirely independent of the integrator.
    """
    if cfg.charge != 0.0:
        raise ValueError("oracle covers free streaming only")
    if tuple(cfg.hist_axes) != ("x1", "p1"):
        raise ValueError("oracle covers (x1, p1) binning only")
    if cfg.p_sigma[1] != 0.0 or cfg.p_sigma[2] != 0.0:
        raise ValueError("oracle needs delta-valued p2, p3")
    if cfg.x_sigma[0] <= 0.0 or cfg.p_sigma[0] <= 0.0:
        raise ValueError("oracle needs spread in x1 and p1")

    x_edges = np.asarray(cfg.hist_edges[0], dtype=float)
    p_edges = np.asarray(cfg.hist_edges[1], dtype=float)
    mu_x, sig_x = cfg.x_mean[0], cfg.x_sigma[0]
    mu_p, sig_p = cfg.p_mean[0], cfg.p_sigma[0]
    m2_eff = cfg.mass**2 + cfg.p_mean[1]**2 + cfg.p_mean[2]**2

    # clipped cells: boundary bins absorb the tails
    p_lo = np.concatenate(([mu_p - 9.0 * sig_p], p_edges[1:-1]))
    p_hi = np.concatenate((p_edges[1:-1], [mu_p + 9.0 * sig_p]))
    nodes, weights = np.polynomial.legendre.leggauss(64)

    probs = np.zeros((len(x_edges) - 1, len(p_edges) - 1))
    for j in range(len(p_edges) - 1):
        half = 0.5 * (p_hi[j] - p_lo[j])
        mid = 0.5 * (p_hi[j] + p_lo[j])
        p = mid + half * nodes
        fp = np.exp(-0.5 * ((p - mu_p) / sig_p) ** 2) / (sig_p * np.sqrt(2.0 * np.pi))
        v = p / np.sqrt(m2_eff + p * p)
        shift = mu_x + v * t
        cdf = [ndtr((x_edges[i] - shift) / sig_x) for i in range(len(x_edges))]
        for i in range(len(x_edges) - 1):
            lo = cdf[i] if i > 0 else 0.0
            hi = cdf[i + 1] if i < len(x_edges) - 2 else 1.0
            probs[i, j] = np.sum(weights * fp * (hi - lo)) * half
    return probs


# ---------------------------------------------------------------------------
# retarded free-streaming inverse

@dataclass
class InverseResult:
    value: float
    tail: float
    tail_warning: bool
    n_nodes: int


def free_streaming_inverse(g, x, p: OnShellMomentum, lam_max: float,
                           dlam: float, tail_tol: float = 1e-6) -> InverseResult:
    """Integral of g along the past characteristic, composite Simpson.

    (L^-1 g)(x, p) = int_0^lam_max g(x - lam p, p) dlam with L = p^mu d_mu,
    so applying L to the result recovers g wherever g has decayed by
    lam_max.  The contribution of the final Simpson panel is reported; if
    it exceeds tail_tol relative to the value, the tail was truncated too
    early and the result carries a warning.
    """
    x = np.asarray(x, dtype=float)
    n = int(np.ceil(lam_max / dlam))
    n += n % 2
    lam = np.linspace(0.0, lam_max, n + 1)
    points = x[None, :] - lam[:, None] * p.four[None, :]
    gs = np.asarray(g(points, p), dtype=float)
    h = lam_max / n
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    value = float(np.sum(w * gs) * h / 3.0)
    tail = float(abs((gs[-3] + 4.0 * gs[-2] + gs[-1]) * h / 3.0))
    warning = tail > tail_tol * max(abs(value), 1e-300)
    return InverseResult(value, tail, warning, n + 1)
