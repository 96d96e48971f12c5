"""Positive phase-space distributions built from boosted Yukawa fields.

The static screened potential e^{-mr}/(4 pi r) solves the sourced
Klein-Gordon equation; boosting it along the momentum direction gives a
strictly positive traveling solution whose only structure is the
longitudinal contraction (p^2 + m^2)/m^2 of the comoving radius.  These
lumps solve the collisionless transport equation p^mu d_mu psi = 0 off
their singular worldline, stay positive, and superpose freely, which is
what makes them usable as joint distributions over (x, p).

The singularity is excluded, never smoothed: evaluation inside a small
radius raises, and grid reports carve out an exclusion ball instead of
regularizing the source.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .core import OnShellMomentum, SpaceTimeGrid
from .kgwave import gaussian_packet

FOUR_PI = 4.0 * math.pi

__all__ = [
    "SingularityError",
    "LumpSolution",
    "LumpEnsemble",
    "TransportReport",
    "PacketReport",
    "yukawa_static",
    "lump_evaluate",
    "superpose",
    "ensemble_field",
    "transport_residual_of",
    "lump_transport_residual",
    "ensemble_transport_residual",
    "packet_compare",
]


class SingularityError(ValueError):
    """Evaluation hit (or came within epsilon of) a singular worldline."""


def yukawa_static(r, mass: float):
    """Screened point-source potential e^{-m r} / (4 pi r), r > 0 only."""
    if not (mass > 0.0):
        raise ValueError(f"mass must be positive, got {mass}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularityError("yukawa_static needs r > 0; the source point is excluded")
    out = np.exp(-mass * r) / (FOUR_PI * r)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LumpSolution:
    """Boosted Yukawa lump: center at t = 0 plus an on-shell momentum."""

    center: np.ndarray
    momentum: OnShellMomentum

    def __post_init__(self) -> None:
        center = np.array(self.center, dtype=float)
        if center.shape != (3,) or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite 3-vector")
        object.__setattr__(self, "center", center)

    @property
    def mass(self) -> float:
        return self.momentum.mass

    @property
    def velocity(self) -> np.ndarray:
        return self.momentum.velocity

    @property
    def gamma_sq(self) -> float:
        p3 = self.momentum.p3
        m = self.mass
        return float((p3 @ p3 + m * m) / (m * m))

    def worldline(self, t: float) -> np.ndarray:
        return self.center + self.velocity * t


def _comoving_radius(lump: LumpSolution, t, xs: np.ndarray) -> np.ndarray:
    """Rest-frame radius seen from the lab: contracted along the motion.

    xs has shape (..., 3); t is a scalar or broadcastable array.  Only the
    longitudinal part of the offset feels the contraction gamma^2, the
    transverse projector leaves the rest untouched.
    """
    t = np.asarray(t, dtype=float)
    delta = xs - lump.center - lump.velocity * t[..., np.newaxis]
    p3 = lump.momentum.p3
    pnorm = math.sqrt(float(p3 @ p3))
    if pnorm == 0.0:
        return np.sqrt(np.sum(delta * delta, axis=-1))
    longitudinal = delta @ (p3 / pnorm)
    s_sq = (lump.gamma_sq * longitudinal ** 2
            + np.sum(delta * delta, axis=-1) - longitudinal ** 2)
    return np.sqrt(np.maximum(s_sq, 0.0))


def lump_evaluate(lump: LumpSolution, x, epsilon: float = 1e-9):
    """Evaluate the lump at four-vector events x with shape (..., 4).

    Raises SingularityError when any event lies within epsilon of the
    worldline; the singular core is excluded, not regularized.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise ValueError("events must have four components (t, x1, x2, x3)")
    s = _comoving_radius(lump, x[..., 0], x[..., 1:])
    if np.any(s < epsilon):
        raise SingularityError(
            f"event within {epsilon} of the singular worldline"
        )
    return yukawa_static(s, lump.mass)


def _lump_field(lump: LumpSolution, t, xs: np.ndarray) -> np.ndarray:
    """Non-raising lump values over spatial points; singular cells get inf.

    Grid scans hit the worldline; the exclusion ball drops those cells
    from every statistic, so returning inf there is harmless.
    """
    s = _comoving_radius(lump, t, xs)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0.0, np.exp(-lump.mass * s) / (FOUR_PI * s), np.inf)


@dataclass(frozen=True)
class LumpEnsemble:
    """Fixed set of lumps sharing one mass."""

    lumps: tuple

    def __post_init__(self) -> None:
        lumps = tuple(self.lumps)
        if not lumps:
            raise ValueError("ensemble needs at least one lump")
        mass = lumps[0].mass
        if any(l.mass != mass for l in lumps):
            raise ValueError("all lumps must share one mass")
        object.__setattr__(self, "lumps", lumps)

    @property
    def mass(self) -> float:
        return self.lumps[0].mass


def superpose(ensemble: LumpEnsemble, x, p: OnShellMomentum | None = None):
    """Sum of lump values at events x.

    With p given, every term is read as a function of the common
    phase-space argument (x, p); with p omitted, each lump keeps its own
    momentum parameter.  Both readings produce strictly positive sums.
    """
    total = 0.0
    for k, lump in enumerate(ensemble.lumps):
        term = lump if p is None else dataclasses.replace(lump, momentum=p)
        try:
            total = total + lump_evaluate(term, x)
        except SingularityError as exc:
            raise SingularityError(f"lump {k}: {exc}") from exc
    return total


def ensemble_field(ensemble: LumpEnsemble, t, xs: np.ndarray,
                   p: OnShellMomentum | None = None) -> np.ndarray:
    """Non-raising ensemble sum over spatial points at one time.

    Cells on a lump worldline get inf instead of raising, so the result
    can be scanned over a lattice and cleaned up by an exclusion ball.
    With p given, every lump is read at the common momentum argument.
    """
    total = 0.0
    for lump in ensemble.lumps:
        term = lump if p is None else dataclasses.replace(lump, momentum=p)
        total = total + _lump_field(term, t, xs)
    return total


@dataclass(frozen=True)
class TransportReport:
    """Directional-derivative residual of a field over a spatial grid.

    residual holds p^mu d_mu psi per cell by central differences,
    local_scale the magnitude max|p^mu| * |grad psi| against which it is
    judged, and keep the cells outside every exclusion ball.  l_inf and
    l_two summarize the kept ratios.
    """

    l_inf: float
    l_two: float
    residual: np.ndarray
    local_scale: np.ndarray
    ratio: np.ndarray
    keep: np.ndarray
    n_kept: int
    n_excluded: int
    exclusion_radius: float
    spacing: tuple
    dt: float
    time: float


def transport_residual_of(field_fn, momentum: OnShellMomentum,
                          grid: SpaceTimeGrid, t: float,
                          exclusion_centers, exclusion_radius: float
                          ) -> TransportReport:
    """Central-difference p^0 d_t + p.grad applied to field_fn(t, xs).

    The grid must be 3D with dt set.  exclusion_centers are spatial
    points (at time t) around which balls of exclusion_radius are cut
    out; the radius must cover at least 3 grid spacings so the stencil
    never straddles a singular cell.
    """
    if grid.dim != 3:
        raise ValueError("transport residual expects a 3D spatial grid")
    if grid.dt is None:
        raise ValueError("grid.dt must be set for the time stencil")
    if exclusion_radius < 3.0 * max(grid.spacing):
        raise ValueError(
            f"exclusion radius {exclusion_radius} must cover 3 grid spacings"
        )
    xs = np.stack(grid.mesh(), axis=-1)
    dt = grid.dt
    p4 = momentum.four

    # Cells on a singular worldline hold inf/nan; they and their stencil
    # neighbours all lie inside the exclusion ball, so let them through
    # quietly and drop them from the statistics below.
    with np.errstate(invalid="ignore"):
        residual = p4[0] * (field_fn(t + dt, xs) - field_fn(t - dt, xs)) / (2.0 * dt)
        grad_sq = 0.0
        for ax in range(3):
            step = np.zeros(3)
            step[ax] = grid.spacing[ax]
            diff = (field_fn(t, xs + step) - field_fn(t, xs - step)) \
                / (2.0 * grid.spacing[ax])
            residual = residual + p4[1 + ax] * diff
            grad_sq = grad_sq + diff * diff
        local_scale = float(np.max(np.abs(p4))) * np.sqrt(grad_sq)

    keep = np.ones(grid.shape, dtype=bool)
    for center in exclusion_centers:
        center = np.asarray(center, dtype=float)
        dist = np.sqrt(np.sum((xs - center) ** 2, axis=-1))
        keep &= dist >= exclusion_radius

    with np.errstate(invalid="ignore"):
        ratio = np.divide(np.abs(residual), local_scale,
                          out=np.zeros_like(local_scale),
                          where=local_scale > 0.0)
    kept = ratio[keep]
    l_inf = float(np.max(kept)) if kept.size else 0.0
    l_two = float(np.sqrt(np.mean(kept ** 2))) if kept.size else 0.0
    return TransportReport(
        l_inf=l_inf, l_two=l_two, residual=residual,
        local_scale=local_scale, ratio=ratio, keep=keep,
        n_kept=int(keep.sum()), n_excluded=int((~keep).sum()),
        exclusion_radius=float(exclusion_radius), spacing=grid.spacing,
        dt=float(dt), time=float(t),
    )


def lump_transport_residual(lump: LumpSolution, grid: SpaceTimeGrid,
                            exclusion_radius: float, t: float = 0.0
                            ) -> TransportReport:
    """Transport residual of one lump, excluding a ball on its worldline."""
    return transport_residual_of(
        lambda tt, xs: _lump_field(lump, tt, xs),
        lump.momentum, grid, t,
        exclusion_centers=[lump.worldline(t)],
        exclusion_radius=exclusion_radius,
    )


def ensemble_transport_residual(ensemble: LumpEnsemble, grid: SpaceTimeGrid,
                                exclusion_radius: float, t: float = 0.0
                                ) -> TransportReport:
    """Transport residual of a rigidly moving ensemble.

    The derivative direction is the shared four-momentum, so every lump
    must carry the same momentum; mixed velocities would not ride a
    single characteristic.  One ball is cut around each worldline.
    """
    p0 = ensemble.lumps[0].momentum
    for lump in ensemble.lumps[1:]:
        if not np.array_equal(lump.momentum.p3, p0.p3):
            raise ValueError("transport needs a common momentum; lumps disagree")
    return transport_residual_of(
        lambda tt, xs: ensemble_field(ensemble, tt, xs),
        p0, grid, t,
        exclusion_centers=[l.worldline(t) for l in ensemble.lumps],
        exclusion_radius=exclusion_radius,
    )


@dataclass(frozen=True)
class PacketReport:
    """Centroid and width history of a narrow-band packet vs a lump."""

    times: np.ndarray
    centroid: np.ndarray
    width: np.ndarray
    velocity_fit: float
    velocity_target: float
    spreading_rate: float
    feasible: bool
    bandwidth: float
    p_bar: float
    mass: float
    box_length: float
    n_points: int

    @property
    def velocity_error(self) -> float:
        return abs(self.velocity_fit - self.velocity_target)


def packet_compare(lump: LumpSolution, bandwidth: float,
                   n_points: int = 512, box_length: float | None = None,
                   t_span: float = 5.0, n_times: int = 11) -> PacketReport:
    """Evolve a 1+1D packet centered at the lump momentum and track it.

    The packet's Gaussian momentum profile has the given bandwidth around
    p_bar = |p|; its |psi|^2 centroid velocity is fit linearly in time
    and compared with the lump velocity p_bar / sqrt(p_bar^2 + m^2).
    The feasibility flag records whether bandwidth > m, the narrow-band
    condition needed for the packet to mimic the lump.
    """
    if not (bandwidth > 0.0):
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    mass = lump.mass
    p3 = lump.momentum.p3
    p_bar = math.sqrt(float(p3 @ p3))
    if box_length is None:
        # Wide enough to resolve the momentum profile and hold the
        # envelope (spatial width ~ 1/bandwidth) away from the wrap.
        box_length = max(24.0, 12.0 / bandwidth)
    grid = SpaceTimeGrid(dim=1, lengths=(box_length,), npoints=(n_points,))
    wave = gaussian_packet(grid, mass, p_bar, bandwidth)

    x_axis = grid.axis(0)
    times = np.linspace(0.0, t_span, n_times)
    centroid = np.empty(n_times)
    width = np.empty(n_times)
    for i, t in enumerate(times):
        weight = np.abs(wave.synthesize(t).values) ** 2
        weight = weight / weight.sum()
        mean = float(weight @ x_axis)
        centroid[i] = mean
        width[i] = math.sqrt(float(weight @ (x_axis - mean) ** 2))

    velocity_fit = float(np.polyfit(times, centroid, 1)[0])
    velocity_target = p_bar / math.sqrt(p_bar * p_bar + mass * mass)
    spreading_rate = float((width[-1] - width[0]) / (times[-1] - times[0]))
    return PacketReport(
        times=times, centroid=centroid, width=width,
        velocity_fit=velocity_fit, velocity_target=velocity_target,
        spreading_rate=spreading_rate, feasible=bool(bandwidth > mass),
        bandwidth=float(bandwidth), p_bar=p_bar, mass=mass,
        box_length=float(box_length), n_points=n_points,
    )
