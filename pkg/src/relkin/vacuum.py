"""Random-phase zero-point radiation field on a discrete wavenumber lattice.

The vector potential is the transverse mode sum

    A(x) = sum_{k, lam} a(k) eps(k, lam) sin(k.x - w_k t + theta(k, lam)),

with w_k = |k|, two orthonormal polarizations per wavevector, and phases
theta drawn i.i.d. uniform on [0, 2*pi).  The amplitude carries the lattice
cell weight and the zero-point spectrum h(k) = sqrt(w_k / (2*pi^2)):

    a(k) = sqrt(dk^3) * h(k) / w_k = sqrt(dk^3 / (2 pi^2 w_k)),

so that squared sums approximate momentum-space integrals with spectral
density h(k)^2 = w_k / (2 pi^2).  Radiation gauge: the scalar potential is
identically zero and every polarization is transverse.

Because each mode is an explicit sinusoid, field derivatives are available
in closed form, and phase averages reduce to the identity
<sin(a+theta) sin(b+theta)> = cos(a-b)/2, which gives an exact two-point
correlation oracle for Monte Carlo checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core import METRIC, OnShellMomentum

MODE_SCHEMA = "relkin/mode/1"


class ConfigError(ValueError):
    """Raised for unusable sampling parameters (e.g. empty lattice)."""


def build_lattice(k_spacing: float, cutoff: float) -> np.ndarray:
    """Integer-lattice wavevectors n*k_spacing with 0 < |k| <= cutoff.

    Rows are sorted lexicographically by (nx, ny, nz) so that the phase-draw
    order, and therefore the sampled field, is reproducible.
    """
    if not (k_spacing > 0.0) or not (cutoff > 0.0):
        raise ConfigError(f"k_spacing and cutoff must be positive, got {k_spacing}, {cutoff}")
    nmax = int(np.floor(cutoff / k_spacing))
    if nmax < 1:
        raise ConfigError(
            f"cutoff {cutoff} admits no nonzero lattice mode at spacing {k_spacing}"
        )
    axis = np.arange(-nmax, nmax + 1)
    nx, ny, nz = np.meshgrid(axis, axis, axis, indexing="ij")
    triples = np.column_stack([nx.ravel(), ny.ravel(), nz.ravel()])
    norms2 = np.sum(triples * triples, axis=1)
    keep = (norms2 > 0) & (norms2 * k_spacing * k_spacing <= cutoff * cutoff * (1 + 1e-12))
    return triples[keep].astype(float) * k_spacing


def polarization_pair(khat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal transverse pair for a unit wavevector.

    The first polarization is the coordinate axis least aligned with khat
    (lowest index on ties), Gram-Schmidt projected transverse; the second is
    khat x eps1.
    """
    eps = _polarization_pairs(np.asarray(khat, dtype=float).reshape(1, 3))
    return eps[0, 0], eps[0, 1]


def _polarization_pairs(khat: np.ndarray) -> np.ndarray:
    """Vectorized polarization_pair: khat (n, 3) -> eps (n, 2, 3)."""
    n = khat.shape[0]
    axis = np.argmin(np.abs(khat), axis=1)
    e = np.zeros((n, 3))
    e[np.arange(n), axis] = 1.0
    proj = np.sum(e * khat, axis=1, keepdims=True)
    eps1 = e - proj * khat
    eps1 /= np.linalg.norm(eps1, axis=1, keepdims=True)
    eps2 = np.cross(khat, eps1)
    return np.stack([eps1, eps2], axis=1)


@dataclass(frozen=True)
class ModeSet:
    """One sampled realization of the zero-point field.

    Arrays are indexed by mode row; the two polarizations of one wavevector
    are adjacent rows (lambda = 1 then 2).  theta holds the random phases,
    amplitude the deterministic a(k) weights.
    """

    k: np.ndarray          # (n, 3) wavevectors
    pol: np.ndarray        # (n, 3) unit polarization vectors, transverse
    lam: np.ndarray        # (n,) polarization index, 1 or 2
    theta: np.ndarray      # (n,) phases in [0, 2*pi)
    amplitude: np.ndarray  # (n,) mode amplitudes a(k)
    k_spacing: float
    cutoff: float

    @property
    def w(self) -> np.ndarray:
        return np.linalg.norm(self.k, axis=1)

    @property
    def n_modes(self) -> int:
        return self.k.shape[0]


def sample_modes(k_spacing: float = 0.25, cutoff: float = 8.0,
                 rng: np.random.Generator | None = None) -> ModeSet:
    """Draw one field realization: fixed lattice geometry, fresh phases.

    Defaults assume unit mass: spacing m/4 and cutoff 8m.  The zero-point
    variance diverges with the cutoff, so studies must state it explicitly.
    """
    if rng is None:
        raise ValueError("an explicit seeded generator is required for reproducibility")
    kvecs = build_lattice(k_spacing, cutoff)
    nsite = kvecs.shape[0]
    w = np.linalg.norm(kvecs, axis=1)
    eps = _polarization_pairs(kvecs / w[:, None])
    amp_site = np.sqrt(k_spacing**3 / (2.0 * np.pi**2 * w))

    k = np.repeat(kvecs, 2, axis=0)
    pol = eps.reshape(nsite * 2, 3)
    lam = np.tile([1, 2], nsite)
    amplitude = np.repeat(amp_site, 2)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=nsite * 2)
    return ModeSet(k, pol, lam, theta, amplitude, float(k_spacing), float(cutoff))


def resample_phases(ms: ModeSet, rng: np.random.Generator) -> ModeSet:
    """Same lattice and amplitudes, fresh phase draw."""
    return replace(ms, theta=rng.uniform(0.0, 2.0 * np.pi, size=ms.n_modes))


def _phases_at(ms: ModeSet, x: np.ndarray) -> np.ndarray:
    """k.x_spatial - w*t + theta for every mode at one spacetime point."""
    x = np.asarray(x, dtype=float)
    return ms.k @ x[1:] - ms.w * x[0] + ms.theta


def vector_potential(ms: ModeSet, x: np.ndarray) -> np.ndarray:
    """The spatial potential A(x); the time component vanishes by gauge."""
    s = np.sin(_phases_at(ms, x))
    return (ms.amplitude * s) @ ms.pol


def eb_fields(ms: ModeSet, t: float, x3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Electric and magnetic fields from per-mode closed-form derivatives.

    E = -dA/dt = sum a w eps cos(phase),  B = curl A = sum a (k x eps) cos(phase).
    """
    x3 = np.asarray(x3, dtype=float)
    c = ms.amplitude * np.cos(ms.k @ x3 - ms.w * t + ms.theta)
    e = (c * ms.w) @ ms.pol
    b = c @ np.cross(ms.k, ms.pol)
    return e, b


def field_tensor(ms: ModeSet, x: np.ndarray) -> np.ndarray:
    """Covariant field tensor F_{mu nu} at x, from exact mode derivatives.

    Packing: F_{0i} = E_i and F_{ij} = -eps_{ijk} B_k, antisymmetric by
    construction.
    """
    x = np.asarray(x, dtype=float)
    e, b = eb_fields(ms, x[0], x[1:])
    f = np.zeros((4, 4))
    f[0, 1:] = e
    f[1:, 0] = -e
    f[1, 2], f[2, 1] = -b[2], b[2]
    f[2, 3], f[3, 2] = -b[0], b[0]
    f[3, 1], f[1, 3] = -b[1], b[1]
    return f


def force_per_charge(ms: ModeSet, x: np.ndarray, p: OnShellMomentum) -> np.ndarray:
    """Minkowski force per unit charge f^mu = F^mu_nu p^nu / m.

    Antisymmetry of F makes p_mu f^mu vanish identically, so the force never
    drives the momentum off shell.
    """
    f_cov = field_tensor(ms, x)
    return (METRIC @ f_cov) @ p.four / p.mass


def correlation_oracle(ms: ModeSet, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact phase-averaged two-point function C_ij = <A_i(x) A_j(y)>.

    Averaging the product of two mode sines over the shared uniform phase
    gives cos(delta)/2 per mode, with delta = k.(x-y) - w*(x0-y0):

        C_ij(x, y) = sum_modes a^2 eps_i eps_j cos(delta) / 2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    delta = ms.k @ (x[1:] - y[1:]) - ms.w * (x[0] - y[0])
    weights = 0.5 * ms.amplitude**2 * np.cos(delta)
    return np.einsum("n,ni,nj->ij", weights, ms.pol, ms.pol)


def save_modes_ndjson(ms: ModeSet, path) -> None:
    """One mode per line: wavevector, polarization index, phase, amplitude."""
    with open(path, "w") as fh:
        header = {
            "schema": MODE_SCHEMA,
            "k_spacing": ms.k_spacing,
            "cutoff": ms.cutoff,
            "n_modes": int(ms.n_modes),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i in range(ms.n_modes):
            rec = {
                "schema": MODE_SCHEMA,
                "k": [float(v) for v in ms.k[i]],
                "lam": int(ms.lam[i]),
                "theta": float(ms.theta[i]),
                "amplitude": float(ms.amplitude[i]),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_modes_ndjson(path) -> ModeSet:
    """Rebuild a ModeSet from its serialized form (exact replay)."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    header, records = lines[0], lines[1:]
    if header.get("schema") != MODE_SCHEMA:
        raise ValueError(f"unexpected mode schema {header.get('schema')!r}")
    k = np.array([r["k"] for r in records], dtype=float)
    lam = np.array([r["lam"] for r in records], dtype=int)
    theta = np.array([r["theta"] for r in records], dtype=float)
    amplitude = np.array([r["amplitude"] for r in records], dtype=float)
    w = np.linalg.norm(k, axis=1)
    eps = _polarization_pairs(k / w[:, None])
    pol = np.where((lam == 1)[:, None], eps[:, 0], eps[:, 1])
    return ModeSet(k, pol, lam, theta, amplitude, float(header["k_spacing"]), float(header["cutoff"]))
