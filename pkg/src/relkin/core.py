"""Shared numerical kit: Minkowski algebra, on-shell kinematics, periodic
grids with spectral helpers, and reproducible random streams.

Metric signature is (+,-,-,-) throughout.  Natural units hbar = c = 1, so
masses and wavenumbers are inverse lengths and times are lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


def fourvector(t: float, x: float = 0.0, y: float = 0.0, z: float = 0.0) -> np.ndarray:
    """Pack (t, x, y, z) into a contravariant four-vector array."""
    return np.array([t, x, y, z], dtype=float)


def minkowski_dot(a, b):
    """a^mu b_mu = a0*b0 - a.b, broadcasting over leading axes of (..., n) inputs.

    Works for 1+d dimensional vectors of any d >= 1; component 0 is time.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def lorentz_boost(v, a):
    """Boost four-vector(s) a so a rest-frame object acquires velocity v.

    With this (active) convention the rest momentum (m, 0, 0, 0) maps to
    (gamma*m, gamma*m*v).  Composing with the opposite velocity restores the
    input, and Minkowski products are preserved.

    Parameters
    ----------
    v : array_like, shape (3,)
        Boost velocity, |v| < 1.
    a : array_like, shape (..., 4)
        Four-vector(s) to transform.
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    v2 = float(np.dot(v, v))
    if not np.isfinite(v2) or v2 >= 1.0:
        raise ValueError(f"boost speed must satisfy |v| < 1, got |v|^2 = {v2}")
    if v2 == 0.0:
        return a.copy()
    gamma = 1.0 / np.sqrt(1.0 - v2)
    a0 = a[..., 0]
    vdota = np.tensordot(a[..., 1:], v, axes=([-1], [0]))
    out = np.empty_like(a)
    out[..., 0] = gamma * (a0 + vdota)
    coef = ((gamma - 1.0) * vdota / v2 + gamma * a0)
    out[..., 1:] = a[..., 1:] + coef[..., np.newaxis] * v
    return out


def onshell_energy(p3, mass: float) -> float:
    """Positive-root energy sqrt(m^2 + |p|^2) for spatial momentum p3."""
    if not (mass > 0.0):
        raise ValueError(f"mass must be positive, got {mass}")
    p3 = np.asarray(p3, dtype=float)
    return float(np.sqrt(mass * mass + np.dot(p3, p3)))


@dataclass(frozen=True)
class OnShellMomentum:
    """Spatial momentum plus mass; the energy is always the positive root."""

    p3: np.ndarray
    mass: float

    def __post_init__(self):
        p3 = np.array(self.p3, dtype=float)
        if p3.shape != (3,) or not np.all(np.isfinite(p3)):
            raise ValueError("p3 must be a finite 3-vector")
        if not (self.mass > 0.0 and np.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")
        object.__setattr__(self, "p3", p3)

    @property
    def energy(self) -> float:
        return onshell_energy(self.p3, self.mass)

    @property
    def four(self) -> np.ndarray:
        return np.concatenate(([self.energy], self.p3))

    @property
    def velocity(self) -> np.ndarray:
        return self.p3 / self.energy


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Periodic spatial box with 2^k points per axis plus an optional time step.

    dim is 1 or 3.  lengths and npoints are per-axis; boundaries are always
    periodic so plain FFTs give exact spectral derivatives.
    """

    dim: int
    lengths: tuple
    npoints: tuple
    dt: float | None = None

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim}")
        lengths = tuple(float(l) for l in np.atleast_1d(self.lengths))
        npoints = tuple(int(n) for n in np.atleast_1d(self.npoints))
        if len(lengths) != self.dim or len(npoints) != self.dim:
            raise ValueError("lengths and npoints must have one entry per axis")
        for length in lengths:
            if not (length > 0.0):
                raise ValueError(f"box length must be positive, got {length}")
        for n in npoints:
            if n < 2 or (n & (n - 1)) != 0:
                raise ValueError(f"points per axis must be a power of two >= 2, got {n}")
        if self.dt is not None and not (self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "npoints", npoints)

    @property
    def spacing(self) -> tuple:
        return tuple(length / n for length, n in zip(self.lengths, self.npoints))

    @property
    def shape(self) -> tuple:
        return self.npoints

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis(self, i: int) -> np.ndarray:
        """Coordinates of axis i, centered so the box is [-L/2, L/2)."""
        n = self.npoints[i]
        h = self.spacing[i]
        return (np.arange(n) - n // 2) * h

    def mesh(self) -> list:
        return list(np.meshgrid(*(self.axis(i) for i in range(self.dim)), indexing="ij"))

    def wavenumbers(self, i: int) -> np.ndarray:
        """Angular wavenumbers (multiples of 2*pi/L) for axis i, FFT layout."""
        return 2.0 * np.pi * np.fft.fftfreq(self.npoints[i], d=self.spacing[i])

    def kmesh(self) -> list:
        return list(np.meshgrid(*(self.wavenumbers(i) for i in range(self.dim)), indexing="ij"))

    def ksquared(self) -> np.ndarray:
        km = self.kmesh()
        return sum(k * k for k in km)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=tuple(range(-self.dim, 0)))

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(values, axes=tuple(range(-self.dim, 0)))

    def spectral_derivative(self, values: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
        """Exact derivative of a grid function along a spatial axis."""
        k = self.wavenumbers(axis)
        shape = [1] * self.dim
        shape[axis] = len(k)
        mult = (1j * k.reshape(shape)) ** order
        return self.ifft(mult * self.fft(values))

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.ifft(-self.ksquared() * self.fft(values))


def central_difference(values: np.ndarray, axis: int, h: float, order: int = 1) -> np.ndarray:
    """Second-order-accurate periodic central difference along one axis."""
    if order == 1:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)
    if order == 2:
        return (np.roll(values, -1, axis=axis) - 2.0 * values + np.roll(values, 1, axis=axis)) / (h * h)
    raise ValueError(f"order must be 1 or 2, got {order}")


def stream_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for a named stream under one master seed.

    Streams are split by spawn key, so stream_rng(seed, 3) and
    stream_rng(seed, 7) are statistically independent and reproducible
    regardless of construction order or process placement.  Sub-streams
    append further indices: stream_rng(seed, traj, 1).
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(ss)
