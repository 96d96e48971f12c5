"""Hydrodynamic view of a complex wave: density, local momentum field, and
the residual identities that tie them back to the wave equation.

The decomposition never stores a global phase.  The momentum field comes
from the bilinear

    u^0 = -Im(psi* d_t psi) / rho,      u^i = +Im(psi* d_i psi) / rho,

whose signs make a plane wave e^{-i(p0 t - p.x)} carry u^mu = +p^mu.  This
sidesteps 2-pi unwrapping ambiguities at density nodes; points where the
density dips below a floor anywhere in the time stack are masked instead.

Spatial derivatives are spectral (the fields live on periodic grids), time
derivatives are second-order central differences over a small stack of time
levels, so every residual here converges at second order in the stack step.

Two normalizations of the gradient-pressure identity circulate; both are
first-class here.  The "canonical" form

    u.u - m^2 - 2 beta^2 (box sqrt(rho)) / sqrt(rho)

is the exact real part of the wave-equation split and vanishes on true wave
data at beta^2 = 1/2.  The "halved" form carries 1/2 on u.u and a
log-density gradient term; on the same data it evaluates to -u.u/2, and the
tests pin that measured relation rather than silently preferring one form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpaceTimeGrid
from .kgwave import GridField


class EmptyFieldError(ValueError):
    """The wave is identically zero, so no decomposition exists."""


class IllPosedFitError(ValueError):
    """The fit regressor is degenerate (no density curvature to fit against)."""


class MaskCoverageError(ValueError):
    """Too much of the grid sits below the density floor to trust residuals."""


HJ_FORMS = ("canonical", "halved")


@dataclass(frozen=True)
class MadelungField:
    """Density and momentum-field stacks around one central time.

    rho holds every level of the time stack; u and the current rho*u hold
    the interior levels only (their time components need neighbors on both
    sides).  current comes straight from the bilinear Im(psi* d psi), so it
    stays smooth through density nodes and is the safe thing to
    differentiate; u carries the guarded division and is masked wherever
    the density is unreliable at any level.
    """

    grid: SpaceTimeGrid
    times: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    current: np.ndarray
    mass: float
    mask: np.ndarray
    rho_floor: float

    @property
    def n_levels(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def center(self) -> int:
        return self.n_levels // 2

    @property
    def center_rho(self) -> np.ndarray:
        return self.rho[self.center]

    @property
    def center_u(self) -> np.ndarray:
        return self.u[self.center - 1]

    @property
    def mask_fraction(self) -> float:
        return float(np.mean(self.mask))


def synthesize_stack(wave, t_center: float, dt: float, n_levels: int = 5):
    """Sample a wave on a symmetric stack of time levels around t_center."""
    if n_levels < 3 or n_levels % 2 == 0:
        raise ValueError(f"n_levels must be odd and >= 3, got {n_levels}")
    offsets = np.arange(n_levels) - n_levels // 2
    return tuple(wave.synthesize(t_center + j * dt) for j in offsets)


def decompose(fields, mass: float, rho_floor_scale: float = 1e-10) -> MadelungField:
    """Build the density / momentum-field stacks from wave samples.

    fields is a sequence of >= 3 GridFields on one grid at uniformly spaced
    times.  The momentum field is available on the interior levels.
    """
    fields = tuple(fields)
    if len(fields) < 3:
        raise ValueError(f"need at least 3 time levels, got {len(fields)}")
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise ValueError("all fields must share one grid")
    times = np.array([f.time for f in fields], dtype=float)
    steps = np.diff(times)
    if not np.all(steps > 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("time levels must be strictly increasing and uniform")
    dt = float(steps[0])

    psi = np.stack([f.values for f in fields])
    rho = np.abs(psi) ** 2
    peak = float(rho.max())
    if peak == 0.0:
        raise EmptyFieldError("wave is identically zero")
    floor = rho_floor_scale * peak
    mask = np.any(rho < floor, axis=0)

    n_interior = len(fields) - 2
    u = np.zeros((n_interior, 1 + grid.dim) + grid.shape)
    current = np.zeros_like(u)
    for j in range(n_interior):
        level = j + 1
        safe = rho[level] > floor
        dpsi_t = (psi[level + 1] - psi[level - 1]) / (2.0 * dt)
        current[j, 0] = -np.imag(np.conj(psi[level]) * dpsi_t)
        for axis in range(grid.dim):
            dpsi_x = grid.spectral_derivative(psi[level], axis)
            current[j, 1 + axis] = np.imag(np.conj(psi[level]) * dpsi_x)
        for comp in range(1 + grid.dim):
            np.divide(current[j, comp], rho[level], out=u[j, comp], where=safe)
    return MadelungField(grid, times, rho, u, current, float(mass), mask, floor)


def _check_coverage(mf: MadelungField):
    if mf.mask_fraction >= 0.5:
        raise MaskCoverageError(
            f"{mf.mask_fraction:.0%} of the grid is below the density floor")


def _minkowski_square(u_levels: np.ndarray) -> np.ndarray:
    """u.u = (u^0)^2 - |u_spatial|^2 for a (1+dim, *shape) component stack."""
    return u_levels[0] ** 2 - np.sum(u_levels[1:] ** 2, axis=0)


def continuity_residual(mf: MadelungField) -> np.ma.MaskedArray:
    """d_mu (rho u^mu) at the central time level, masked below the floor.

    Works on the bilinear current rather than rho times the guarded u, so
    nothing discontinuous is ever differentiated.
    """
    _check_coverage(mf)
    if mf.n_levels < 5 or mf.n_levels % 2 == 0:
        raise ValueError("continuity needs an odd stack of >= 5 levels")
    c = mf.center
    # current index j corresponds to stack level j+1
    res = (mf.current[c, 0] - mf.current[c - 2, 0]) / (2.0 * mf.dt)
    for axis in range(mf.grid.dim):
        res = res + mf.grid.spectral_derivative(mf.current[c - 1, 1 + axis], axis).real
    return np.ma.masked_array(res, mask=mf.mask)


def hj_residual(mf: MadelungField, beta_sq: float, form: str = "canonical") -> np.ma.MaskedArray:
    """Gradient-pressure identity residual at the central level.

    canonical:  u.u - m^2 - 2 beta^2 (box sqrt(rho)) / sqrt(rho)
    halved:     u.u/2 + (beta^2/2) d(ln rho).d(ln rho) - beta^2 (box rho)/rho - m^2
    """
    _check_coverage(mf)
    if mf.n_levels % 2 == 0:
        raise ValueError("residuals need an odd time stack")
    if form not in HJ_FORMS:
        raise ValueError(f"form must be one of {HJ_FORMS}, got {form!r}")
    m2 = mf.mass * mf.mass
    uu = _minkowski_square(mf.center_u)
    box_over_rho, gradln_sq = _density_derivative_terms(mf)
    if form == "canonical":
        # (box sqrt rho)/sqrt rho expanded into density derivatives, so only
        # the smooth bilinear rho is ever differentiated; a direct spectral
        # derivative of sqrt(rho) would ring off its cusps at density nodes
        quantum = 0.5 * box_over_rho - 0.25 * gradln_sq
        res = uu - m2 - 2.0 * beta_sq * quantum
    else:
        res = 0.5 * uu + 0.5 * beta_sq * gradln_sq - beta_sq * box_over_rho - m2
    return np.ma.masked_array(res, mask=mf.mask)


def _density_derivative_terms(mf: MadelungField):
    """(box rho)/rho and d(ln rho).d(ln rho) at the central level.

    Derivatives are spectral in space and central in time, applied to rho
    itself; the divisions are pointwise and guarded by the mask.
    """
    grid, c, dt = mf.grid, mf.center, mf.dt
    safe = ~mf.mask
    rho_c = mf.rho[c]
    box_rho = (mf.rho[c + 1] - 2.0 * rho_c + mf.rho[c - 1]) / (dt * dt) \
        - grid.laplacian(rho_c).real
    box_over_rho = np.zeros_like(box_rho)
    np.divide(box_rho, rho_c, out=box_over_rho, where=safe)

    drho_t = (mf.rho[c + 1] - mf.rho[c - 1]) / (2.0 * dt)
    grad_sq = drho_t ** 2
    for axis in range(grid.dim):
        grad_sq = grad_sq - grid.spectral_derivative(rho_c, axis).real ** 2
    gradln_sq = np.zeros_like(grad_sq)
    np.divide(grad_sq, rho_c * rho_c, out=gradln_sq, where=safe)
    return box_over_rho, gradln_sq


@dataclass(frozen=True)
class BetaFit:
    """No-intercept least-squares slope of u.u - m^2 on (box sqrt rho)/sqrt rho."""

    beta_sq: float
    std_error: float
    n_used: int


def fit_beta_sq(mf: MadelungField, degenerate_tol: float = 1e-6) -> BetaFit:
    """Recover the quantum-potential coupling from one decomposed field.

    The identity u.u - m^2 = 2 beta^2 (box sqrt rho)/sqrt rho is linear in
    beta^2, so the estimate is the fitted slope divided by two.  A regressor
    with rms below degenerate_tol * m^2 (a plane wave has none) is rejected.
    """
    _check_coverage(mf)
    box_over_rho, gradln_sq = _density_derivative_terms(mf)
    regressor = (0.5 * box_over_rho - 0.25 * gradln_sq)[~mf.mask].ravel()
    target = (_minkowski_square(mf.center_u) - mf.mass ** 2)[~mf.mask].ravel()
    rms = float(np.sqrt(np.mean(regressor ** 2)))
    if rms < degenerate_tol * mf.mass ** 2:
        raise IllPosedFitError(
            f"density curvature rms {rms:.3e} is below {degenerate_tol:.0e} * m^2")
    denom = float(np.dot(regressor, regressor))
    slope = float(np.dot(regressor, target)) / denom
    errors = target - slope * regressor
    n = len(regressor)
    se_slope = float(np.sqrt(np.sum(errors ** 2) / max(n - 1, 1) / denom))
    return BetaFit(beta_sq=slope / 2.0, std_error=se_slope / 2.0, n_used=n)


def residual_orders(norms) -> np.ndarray:
    """Convergence orders log2(r_k / r_{k+1}) for a step-halving ladder."""
    norms = np.asarray(norms, dtype=float)
    return np.log2(norms[:-1] / norms[1:])
