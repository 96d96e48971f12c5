"""Two-point product distributions and their phase-space content.

Shifting a wave's two arguments by +/- beta*z turns the bilinear
qtilde(x, z) = conj(psi)(x + beta z) psi(x - beta z) into a generating
function in z: derivatives at z = 0 produce density-weighted momentum
moments, and a Fourier transform over an equal-time z-line produces a
(generally sign-indefinite) phase-space map.  Everything here evaluates
waves mode-by-mode, so off-grid shifted points and analytic derivatives
are exact; finite-difference routes are kept alongside as cross-checks.

Index convention: four-vectors are (t, x1, ..., xd) and raised indices
carry metric signs (+, -, ..., -).  Derivatives with respect to the
lowered offset z_mu are taken as g^{mu mu} d/dz^mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SpaceTimeGrid
from .kgwave import ModeTable, SpectralWave, WaveSum

__all__ = [
    "MixedBranchError",
    "ProductDistribution",
    "MomentFields",
    "WignerMap",
    "qtilde",
    "mixed_derivative_residual",
    "moment_fields",
    "moment_divergence",
    "third_moment_divergence",
    "wigner_transform",
    "mass_shell_residual",
    "no_go_integral",
]


class MixedBranchError(ValueError):
    """Raised when an operation requires a single energy sign."""


def _metric_sign(mu: int) -> float:
    return 1.0 if mu == 0 else -1.0


def _unit(n_components: int, mu: int) -> np.ndarray:
    e = np.zeros(n_components)
    e[mu] = 1.0
    return e


@dataclass(frozen=True)
class ProductDistribution:
    """A shifted two-point product built from a spectral wave.

    beta scales the argument split x +/- beta*z.  mass is the shell
    parameter used by mass_shell_residual; by default it is the wave's
    own mass, but it may be overridden (a WaveSum of unequal masses has
    no single mass, so there it must be given explicitly).  symmetrize
    adds the conjugate-ordered term, making qtilde real.
    """

    wave: SpectralWave | WaveSum
    beta: float = 1.0 / math.sqrt(2.0)
    mass: float | None = None
    symmetrize: bool = False

    def __post_init__(self) -> None:
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        mass = self.mass
        if mass is None:
            mass = getattr(self.wave, "mass", None)
            if mass is None:
                raise ValueError(
                    "wave carries no single mass; pass mass explicitly"
                )
            object.__setattr__(self, "mass", float(mass))
        elif mass < 0.0:
            raise ValueError("mass must be non-negative")
        object.__setattr__(self, "_table", self.wave.mode_table())

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.wave.grid

    @property
    def table(self) -> ModeTable:
        return self._table  # type: ignore[attr-defined]

    @property
    def n_components(self) -> int:
        return 1 + self.grid.dim


def _eval_points(dist: ProductDistribution, points: np.ndarray, dt: int = 0,
                 dx=None) -> np.ndarray:
    """Wave value (or analytic derivative) at four-vector points (..., 1+d)."""
    return dist.table.eval(points[..., 0], points[..., 1:], dt=dt, dx=dx)


def qtilde(dist: ProductDistribution, x, z) -> np.ndarray:
    """Evaluate qtilde(x, z) at broadcast four-vector batches (..., 1+d)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[-1] != dist.n_components or z.shape[-1] != dist.n_components:
        raise ValueError(
            f"expected {dist.n_components}-component four-vectors"
        )
    plus = x + dist.beta * z
    minus = x - dist.beta * z
    psi_plus = _eval_points(dist, plus)
    psi_minus = _eval_points(dist, minus)
    values = np.conj(psi_plus) * psi_minus
    if dist.symmetrize:
        values = values + psi_plus * np.conj(psi_minus)
    return values


def _z_stencil(dist: ProductDistribution, x: np.ndarray, z: np.ndarray,
               orders, h: float) -> np.ndarray:
    """Central-difference derivative of qtilde in z with per-axis orders.

    orders is a tuple over the 1+d components of z^mu (not lowered), each
    entry 0, 1, 2 or 3.  Stencils compose axis by axis.
    """
    weight_table = {
        0: ((0.0, 1.0),),
        1: ((1.0, 0.5), (-1.0, -0.5)),
        2: ((1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)),
        3: ((2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)),
    }
    offsets = [(np.zeros(dist.n_components), 1.0)]
    scale = 1.0
    for mu, order in enumerate(orders):
        if order == 0:
            continue
        scale *= h ** order
        e = _unit(dist.n_components, mu)
        offsets = [
            (off + step * h * e, w * coeff)
            for off, w in offsets
            for step, coeff in weight_table[order]
        ]
    total = 0.0
    for off, w in offsets:
        total = total + w * qtilde(dist, x, z + off)
    return total / scale


def mixed_derivative_residual(dist: ProductDistribution, x, z,
                              h: float) -> np.ndarray:
    """Finite-difference d^2/(dx^mu dz_mu) qtilde at paired probe points.

    Second-order central stencils in both arguments; the metric
    contraction supplies the sign per component.  Vanishes (to stencil
    order) exactly when every mode of the wave sits on one mass shell.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    total = 0.0
    for mu in range(dist.n_components):
        e = h * _unit(dist.n_components, mu)
        cross = (
            qtilde(dist, x + e, z + e)
            - qtilde(dist, x + e, z - e)
            - qtilde(dist, x - e, z + e)
            + qtilde(dist, x - e, z - e)
        ) / (4.0 * h * h)
        total = total + _metric_sign(mu) * cross
    return total


def _grid_points(grid: SpaceTimeGrid, t: float) -> np.ndarray:
    """Four-vector batch (*shape, 1+d) for the spatial lattice at time t."""
    axes = np.meshgrid(*(grid.axis(i) for i in range(grid.dim)),
                       indexing="ij")
    pts = np.stack([np.full(grid.shape, t)] + list(axes), axis=-1)
    return pts


def _log_ratio(dist: ProductDistribution, x: np.ndarray, z: np.ndarray,
               center: np.ndarray) -> np.ndarray:
    """log qtilde relative to a precomputed center value, branch-safe.

    Ratios stay near 1 for small stencil steps, so the principal branch
    never winds; an absolute complex log of qtilde would.
    """
    return np.log(qtilde(dist, x, z) / center)


@dataclass(frozen=True)
class MomentFields:
    """Density-weighted momentum moments of a product distribution.

    first[mu] is rho*<p^mu>; second[mu, nu] is rho*<p^mu p^nu>.  sigma
    and x_log_term are the pieces of the second-moment decomposition
    <p p> = <p><p> + x_log_term + sigma, all with raised indices.  mask
    flags points where rho fell below the floor and ratios to rho are
    untrustworthy.
    """

    time: float
    h: float
    rho: np.ndarray
    first: np.ndarray
    mask: np.ndarray
    rho_floor: float
    second: np.ndarray | None = None
    sigma: np.ndarray | None = None
    x_log_term: np.ndarray | None = None

    @property
    def mean_momentum(self) -> np.ndarray:
        """<p^mu>, masked entries set to zero."""
        safe = ~self.mask
        return np.divide(self.first, self.rho,
                         out=np.zeros_like(self.first),
                         where=safe)


def moment_fields(dist: ProductDistribution, t: float, h: float,
                  order: int = 1, rho_floor_scale: float = 1e-10
                  ) -> MomentFields:
    """z-derivatives of qtilde at z = 0 over the wave's spatial lattice.

    order 1 gives the density and current rho*<p^mu>; order 2 adds the
    raw second moment and its decomposition into transport (<p><p>),
    an x-curvature term, and the mixed +/- remainder sigma.  All
    derivative routes act on qtilde itself or on branch-safe log ratios;
    nothing divides by rho except the final mean.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    grid = dist.grid
    ncomp = dist.n_components
    x = _grid_points(grid, t)
    z0 = np.zeros_like(x)

    center = qtilde(dist, x, z0)
    rho = center.real
    floor = rho_floor_scale * float(np.max(np.abs(rho)))
    mask = rho < floor

    first = np.empty((ncomp,) + grid.shape)
    for mu in range(ncomp):
        orders = tuple(1 if a == mu else 0 for a in range(ncomp))
        d1 = _z_stencil(dist, x, z0, orders, h)
        first[mu] = _metric_sign(mu) * (d1 / 1j).real

    if order == 1:
        return MomentFields(time=t, h=h, rho=rho, first=first, mask=mask,
                            rho_floor=floor)

    second = np.empty((ncomp, ncomp) + grid.shape)
    for mu in range(ncomp):
        for nu in range(mu, ncomp):
            orders = tuple(
                (2 if mu == nu else 1) if a in (mu, nu) else 0
                for a in range(ncomp)
            )
            d2 = _z_stencil(dist, x, z0, orders, h)
            val = -_metric_sign(mu) * _metric_sign(nu) * d2.real
            second[mu, nu] = val
            second[nu, mu] = val

    beta = dist.beta
    x_log = np.empty_like(second)
    sigma = np.empty_like(second)
    for mu in range(ncomp):
        e_mu = h * _unit(ncomp, mu)
        for nu in range(mu, ncomp):
            e_nu = h * _unit(ncomp, nu)
            if mu == nu:
                d2x = (
                    _log_ratio(dist, x + e_mu, z0, center)
                    + _log_ratio(dist, x - e_mu, z0, center)
                ) / (h * h)
            else:
                d2x = (
                    _log_ratio(dist, x + e_mu + e_nu, z0, center)
                    - _log_ratio(dist, x + e_mu - e_nu, z0, center)
                    - _log_ratio(dist, x - e_mu + e_nu, z0, center)
                    + _log_ratio(dist, x - e_mu - e_nu, z0, center)
                ) / (4.0 * h * h)
            val = -(beta ** 2) * _metric_sign(mu) * _metric_sign(nu) * d2x.real
            x_log[mu, nu] = val
            x_log[nu, mu] = val

            # Mixed derivative in the two shifted arguments: moving the
            # plus argument by delta is (x + delta/2, z + delta/(2 beta)),
            # the minus argument likewise with the z shift negated.
            mixed = 0.0
            for a, b in ((mu, nu), (nu, mu)):
                e_a = h * _unit(ncomp, a)
                e_b = h * _unit(ncomp, b)
                acc = 0.0
                for s1 in (1.0, -1.0):
                    for s2 in (1.0, -1.0):
                        dx_shift = 0.5 * (s1 * e_a + s2 * e_b)
                        dz_shift = (s1 * e_a - s2 * e_b) / (2.0 * beta)
                        acc = acc + s1 * s2 * _log_ratio(
                            dist, x + dx_shift, z0 + dz_shift, center)
                mixed = mixed + acc / (4.0 * h * h)
            val = 2.0 * (beta ** 2) * _metric_sign(mu) * _metric_sign(nu) \
                * mixed.real
            sigma[mu, nu] = val
            sigma[nu, mu] = val

    return MomentFields(time=t, h=h, rho=rho, first=first, mask=mask,
                        rho_floor=floor, second=second, sigma=sigma,
                        x_log_term=x_log)


def moment_divergence(dist: ProductDistribution, t: float, h: float,
                      order: int = 1, dt: float | None = None) -> np.ndarray:
    """d_mu of the order-1 or order-2 moment fields at time t.

    The time derivative is a central difference of moment fields at
    t +/- dt (dt defaults to h); spatial derivatives are spectral on the
    wave's own lattice.  Returns a scalar field for order 1 and a
    (1+d,)-indexed stack for order 2; both vanish at stencil order when
    the wave solves the dispersion relation.
    """
    if dt is None:
        dt = h
    grid = dist.grid
    before = moment_fields(dist, t - dt, h, order=order)
    after = moment_fields(dist, t + dt, h, order=order)
    mid = moment_fields(dist, t, h, order=order)

    def spatial_div(stack: np.ndarray) -> np.ndarray:
        out = 0.0
        for ax in range(grid.dim):
            out = out + grid.spectral_derivative(stack[1 + ax], ax).real
        return out

    if order == 1:
        ddt = (after.first[0] - before.first[0]) / (2.0 * dt)
        return ddt + spatial_div(mid.first)
    ncomp = dist.n_components
    out = np.empty((ncomp,) + grid.shape)
    for nu in range(ncomp):
        ddt = (after.second[0, nu] - before.second[0, nu]) / (2.0 * dt)
        out[nu] = ddt + spatial_div(mid.second[:, nu])
    return out


def third_moment_divergence(dist: ProductDistribution, t: float, h: float,
                            component: tuple[int, int] = (1, 1),
                            dt: float | None = None) -> np.ndarray:
    """Spot-check of the hierarchy one order up: d_mu rho<p^mu p^nu p^lam>.

    Only the single (nu, lam) component requested is formed, from third
    z-stencils of qtilde, so the cost stays small.
    """
    if dt is None:
        dt = h
    grid = dist.grid
    ncomp = dist.n_components
    nu, lam = component

    def third(mu: int, at_t: float) -> np.ndarray:
        counts = [0] * ncomp
        for a in (mu, nu, lam):
            counts[a] += 1
        x = _grid_points(grid, at_t)
        d3 = _z_stencil(dist, x, np.zeros_like(x), tuple(counts), h)
        sign = _metric_sign(mu) * _metric_sign(nu) * _metric_sign(lam)
        return sign * (d3 / 1j).real * (-1.0)

    ddt = (third(0, t + dt) - third(0, t - dt)) / (2.0 * dt)
    out = ddt
    for ax in range(grid.dim):
        out = out + grid.spectral_derivative(third(1 + ax, t), ax).real
    return out


@dataclass(frozen=True)
class WignerMap:
    """Equal-time phase-space map: Q[i, j] over x[i] and momentum p[j]."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    dz: float
    rho: np.ndarray

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def marginal(self) -> np.ndarray:
        """sum_p Q dp, which equals rho(x) exactly in exact arithmetic."""
        return self.values.sum(axis=1) * self.dp


def wigner_transform(dist: ProductDistribution, t: float, n_z: int,
                     dz: float) -> WignerMap:
    """Fourier transform qtilde over an equal-time z-line (1+1D only).

    The offset lattice is z1_n = (n - n_z//2) dz with z0 = 0, and
    Q(x, p_j) = (dz / 2 pi) sum_n qtilde(x, z_n) exp(+i p_j z1_n) on the
    conjugate lattice p_j = 2 pi j / (n_z dz).  Normalization makes
    sum_j Q dp = rho(x) an exact lattice identity.  A plane-wave mode k
    lands in the single bin p = 2 beta k whenever that value sits on the
    p lattice.
    """
    grid = dist.grid
    if grid.dim != 1:
        raise ValueError("wigner_transform expects a 1+1D wave")
    if n_z < 2 or n_z % 2:
        raise ValueError("n_z must be even and at least 2")
    x_axis = grid.axis(0)
    half = n_z // 2
    z_line = (np.arange(n_z) - half) * dz

    x = np.stack([np.full(grid.shape, t), x_axis], axis=-1)
    z = np.stack([np.zeros(n_z), z_line], axis=-1)
    samples = qtilde(dist, x[:, np.newaxis, :], z[np.newaxis, :, :])

    # sum_n f_n exp(2 pi i j (n - half) / n_z) == n_z * ifft(roll(f, -half))
    spectrum = n_z * np.fft.ifft(np.roll(samples, -half, axis=1), axis=1)
    values = (dz / (2.0 * math.pi)) * spectrum

    p_fft = 2.0 * math.pi * np.fft.fftfreq(n_z, d=dz)
    order = np.argsort(p_fft)
    rho = qtilde(dist, x, np.zeros_like(x)).real
    return WignerMap(x=x_axis.copy(), p=p_fft[order], values=values[:, order],
                     dz=dz, rho=rho)


def mass_shell_residual(dist: ProductDistribution, x, z,
                        method: str = "analytic",
                        h: float | None = None) -> np.ndarray:
    """(d^2_z + m^2) qtilde at probe points.

    The analytic route differentiates mode-by-mode and is exact to
    rounding; the stencil route uses second-order central differences
    with step h and serves as an independent cross-check.  For a single
    mode on shell the result is (m^2 - 4 beta^2 m^2) qtilde.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    m_sq = dist.mass ** 2
    if method == "stencil":
        if h is None:
            raise ValueError("stencil method needs a step h")
        box = 0.0
        for mu in range(dist.n_components):
            orders = tuple(2 if a == mu else 0 for a in range(dist.n_components))
            box = box + _metric_sign(mu) * _z_stencil(dist, x, z, orders, h)
        return box + m_sq * qtilde(dist, x, z)
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")

    beta = dist.beta
    plus = x + beta * z
    minus = x - beta * z
    ncomp = dist.n_components

    def box_term(pp, pm):
        psi_p = _eval_points(dist, pp)
        psi_m = _eval_points(dist, pm)
        box_p = _eval_points(dist, pp, dt=2)
        box_m = _eval_points(dist, pm, dt=2)
        grad_dot = (np.conj(_eval_points(dist, pp, dt=1))
                    * _eval_points(dist, pm, dt=1))
        for ax in range(ncomp - 1):
            dx = tuple(1 if j == ax else 0 for j in range(ncomp - 1))
            dx2 = tuple(2 if j == ax else 0 for j in range(ncomp - 1))
            box_p = box_p - _eval_points(dist, pp, dx=dx2)
            box_m = box_m - _eval_points(dist, pm, dx=dx2)
            grad_dot = grad_dot - (np.conj(_eval_points(dist, pp, dx=dx))
                                   * _eval_points(dist, pm, dx=dx))
        return (np.conj(box_p) * psi_m - 2.0 * grad_dot
                + np.conj(psi_p) * box_m)

    total = box_term(plus, minus)
    if dist.symmetrize:
        # The conjugate-ordered term is the complex conjugate pointwise.
        total = total + np.conj(total)
    return beta ** 2 * total + m_sq * qtilde(dist, x, z)


def no_go_integral(wave: SpectralWave, t: float,
                   beta_sq: float = 0.5) -> tuple[float, float]:
    """Two routes to -4 beta^2 integral of d_mu conj(psi) d^mu psi.

    The grid route synthesizes the wave and its derivatives and sums the
    Riemann quadrature; the spectral route is -4 beta^2 M^2 V sum |a+|^2
    straight from the coefficients.  Both are strictly negative for any
    nonzero positive-branch wave with M > 0, which is the obstruction to
    reading qtilde's z-integral as a probability mass.  Mixed-sign waves
    are rejected: the cross terms oscillate in t and the spectral route
    would not apply.
    """
    if isinstance(wave, WaveSum):
        raise MixedBranchError("no_go_integral expects a single wave")
    if np.any(wave.a_minus != 0):
        raise MixedBranchError(
            "wave mixes energy signs; the spectral route needs a_plus only"
        )
    grid = wave.grid
    psi_t = wave.synthesize_dt(t).values
    density = np.abs(psi_t) ** 2
    psi = wave.synthesize(t).values
    for ax in range(grid.dim):
        dpsi = grid.spectral_derivative(psi, ax)
        density = density - np.abs(dpsi) ** 2
    i_grid = -4.0 * beta_sq * float(density.sum()) * grid.cell_volume

    amp_sq = float(np.sum(np.abs(wave.a_plus) ** 2))
    i_spectral = -4.0 * beta_sq * wave.mass ** 2 * grid.volume * amp_sq
    return i_grid, i_spectral
