"""Boosted Yukawa lumps: closed forms, transport residual, packet link."""

import math

import numpy as np
import pytest

from relkin.core import OnShellMomentum, SpaceTimeGrid, lorentz_boost, stream_rng
from relkin.lumps import (
    LumpEnsemble,
    LumpSolution,
    SingularityError,
    lump_evaluate,
    ensemble_field,
    ensemble_transport_residual,
    lump_transport_residual,
    packet_compare,
    superpose,
    transport_residual_of,
    yukawa_static,
)

FOUR_PI = 4.0 * math.pi


def make_lump(center, p3, mass=1.0):
    return LumpSolution(np.asarray(center, float), OnShellMomentum(np.asarray(p3, float), mass))


def residual_grid(n, length=8.0, dt_factor=0.5):
    h = length / n
    return SpaceTimeGrid(dim=3, lengths=(length,) * 3, npoints=(n,) * 3, dt=dt_factor * h)


def test_yukawa_static_values_and_domain():
    mass = 1.7
    assert abs(yukawa_static(1.0 / mass, mass) - mass * math.exp(-1.0) / FOUR_PI) < 1e-14
    rs = np.array([0.3, 1.0, 4.2])
    assert np.allclose(yukawa_static(rs, 2.0), np.exp(-2.0 * rs) / (FOUR_PI * rs))
    with pytest.raises(SingularityError):
        yukawa_static(0.0, 1.0)
    with pytest.raises(SingularityError):
        yukawa_static(np.array([1.0, -0.2]), 1.0)
    with pytest.raises(ValueError, match="mass"):
        yukawa_static(1.0, 0.0)


def test_yukawa_leading_singularity():
    r = 1e-3
    assert abs(FOUR_PI * r * yukawa_static(r, 1.0) - 1.0) < 2e-3


def test_yukawa_solves_screened_poisson_off_source():
    """(lap - m^2) psi -> 0 away from r = 0, at stencil order."""
    mass = 1.0

    def ratio_field(h):
        axis = np.arange(-2.0, 2.0 + h / 2, h)
        xs, ys, zs = np.meshgrid(axis, axis, axis, indexing="ij")
        r = np.sqrt(xs * xs + ys * ys + zs * zs)
        psi = np.where(r > 0, np.exp(-mass * r) / (FOUR_PI * np.maximum(r, 1e-300)), 0.0)
        inner = (slice(1, -1),) * 3
        lap = (
            psi[2:, 1:-1, 1:-1] + psi[:-2, 1:-1, 1:-1]
            + psi[1:-1, 2:, 1:-1] + psi[1:-1, :-2, 1:-1]
            + psi[1:-1, 1:-1, 2:] + psi[1:-1, 1:-1, :-2]
            - 6.0 * psi[inner]
        ) / (h * h)
        res = lap - mass * mass * psi[inner]
        scale = np.abs(lap) + mass * mass * psi[inner]
        keep = (r[inner] > 0.8) & (np.abs(xs[inner]) < 1.5) \
            & (np.abs(ys[inner]) < 1.5) & (np.abs(zs[inner]) < 1.5)
        return np.abs(res) / scale, keep

    coarse, keep_c = ratio_field(0.25)
    fine, keep_f = ratio_field(0.125)
    # Interior coarse point i sits at interior fine index 2i + 1, so the
    # comparison runs over the exact same coordinates.
    fine_on_coarse = fine[1::2, 1::2, 1::2]
    keep = keep_c & keep_f[1::2, 1::2, 1::2]
    order = math.log2(np.max(coarse[keep]) / np.max(fine_on_coarse[keep]))
    assert order > 1.9, order


def test_rest_frame_lump_is_static_yukawa():
    lump = make_lump([0.4, -0.2, 1.0], [0.0, 0.0, 0.0], mass=1.2)
    rng = stream_rng(70, 0)
    pts = rng.uniform(-3.0, 3.0, size=(200, 4))
    r = np.linalg.norm(pts[:, 1:] - lump.center, axis=1)
    vals = lump_evaluate(lump, pts)
    assert np.max(np.abs(vals - yukawa_static(r, 1.2))) < 1e-12 * np.max(vals)

    spatial = pts[0, 1:]
    slices = [lump_evaluate(lump, np.concatenate(([t], spatial))) for t in (-2.0, 0.0, 0.7)]
    assert max(slices) - min(slices) < 1e-12 * max(slices)


def test_lump_matches_axis_aligned_form():
    mass = 1.0
    p1 = 1.5
    center = np.array([0.3, -0.7, 0.2])
    lump = make_lump(center, [p1, 0.0, 0.0], mass)
    energy = math.sqrt(p1 * p1 + mass * mass)
    gamma_sq = (p1 * p1 + mass * mass) / (mass * mass)
    v = p1 / energy

    rng = stream_rng(70, 1)
    pts = rng.uniform(-3.0, 3.0, size=(300, 4))
    s_sq = (gamma_sq * (pts[:, 1] - v * pts[:, 0] - center[0]) ** 2
            + (pts[:, 2] - center[1]) ** 2
            + (pts[:, 3] - center[2]) ** 2)
    expected = np.exp(-mass * np.sqrt(s_sq)) / (FOUR_PI * np.sqrt(s_sq))
    got = lump_evaluate(lump, pts)
    assert np.max(np.abs(got - expected)) < 1e-12 * np.max(expected)


def test_lump_is_boost_of_static_solution():
    mass = 1.1
    p3 = np.array([1.0, -0.8, 0.5])
    center = np.array([0.2, 0.6, -0.4])
    lump = make_lump(center, p3, mass)
    v = lump.velocity

    rng = stream_rng(70, 2)
    pts = rng.uniform(-2.5, 2.5, size=(200, 4))
    got = lump_evaluate(lump, pts)

    # Map each lab event to the rest frame and read the static potential.
    expected = np.empty(len(pts))
    for i, event in enumerate(pts):
        shifted = event - np.concatenate(([0.0], center))
        rest = lorentz_boost(-v, shifted)
        expected[i] = yukawa_static(np.linalg.norm(rest[1:]), mass)
    assert np.max(np.abs(got - expected)) < 1e-10 * np.max(expected)


def test_lump_positivity_sampled():
    rng = stream_rng(70, 3)
    lump = make_lump([0.0, 0.5, -0.5], [2.0, -1.0, 0.3], mass=0.8)
    pts = rng.uniform(-10.0, 10.0, size=(100_000, 4))
    vals = lump_evaluate(lump, pts)
    assert np.all(vals > 0.0)
    assert np.all(np.isfinite(vals))


def test_lump_singularity_raises():
    lump = make_lump([1.0, 0.0, 0.0], [0.6, 0.0, 0.0])
    t = 0.3
    event = np.concatenate(([t], lump.worldline(t)))
    with pytest.raises(SingularityError, match="worldline"):
        lump_evaluate(lump, event)
    with pytest.raises(ValueError, match="four"):
        lump_evaluate(lump, np.zeros(3))


def test_superpose_modes_and_error_labeling():
    lumps = (
        make_lump([1.0, 0.0, 0.0], [0.5, 0.0, 0.0]),
        make_lump([-1.0, 0.5, 0.0], [0.0, -0.7, 0.2]),
    )
    ens = LumpEnsemble(lumps)
    event = np.array([0.2, 0.4, -0.3, 0.9])

    own = superpose(ens, event)
    assert abs(own - sum(lump_evaluate(l, event) for l in lumps)) < 1e-15

    common = OnShellMomentum(np.array([0.0, 0.0, 1.3]), 1.0)
    shared = superpose(ens, event, p=common)
    assert shared != own
    assert shared > 0.0

    t = 0.5
    on_line = np.concatenate(([t], lumps[1].worldline(t)))
    with pytest.raises(SingularityError, match="lump 1"):
        superpose(ens, on_line)

    with pytest.raises(ValueError, match="at least one"):
        LumpEnsemble(())
    with pytest.raises(ValueError, match="mass"):
        LumpEnsemble((lumps[0], make_lump([0.0, 0.0, 0.0], [0.1, 0.0, 0.0], mass=2.0)))


def test_superpose_positivity_many_centers():
    rng = stream_rng(70, 4)
    lumps = tuple(
        make_lump(rng.uniform(-4.0, 4.0, 3), rng.normal(size=3), mass=1.0)
        for _ in range(5)
    )
    ens = LumpEnsemble(lumps)
    pts = rng.uniform(-8.0, 8.0, size=(100_000, 4))
    vals = superpose(ens, pts)
    assert np.all(vals > 0.0)


def test_transport_residual_rest_frame_is_zero():
    lump = make_lump([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    report = lump_transport_residual(lump, residual_grid(16), exclusion_radius=3.0)
    assert report.l_inf < 1e-12
    assert report.n_excluded > 0
    assert report.n_kept + report.n_excluded == 16 ** 3
    assert report.exclusion_radius == 3.0
    assert report.dt == 0.5 * report.spacing[0]


def test_transport_residual_converges_for_moving_lump():
    mass, v = 1.0, 0.5
    gamma = 1.0 / math.sqrt(1.0 - v * v)
    lump = make_lump([0.0, 0.0, 0.0], [gamma * mass * v, 0.0, 0.0], mass)
    t = 0.4

    ratios = []
    keeps = []
    for n in (16, 32, 64):
        report = lump_transport_residual(lump, residual_grid(n), 3.0 / mass, t=t)
        stride = n // 16
        ratios.append(report.ratio[::stride, ::stride, ::stride])
        keeps.append(report.keep[::stride, ::stride, ::stride])

    keep = keeps[0] & keeps[1] & keeps[2]
    norms = [float(np.max(r[keep])) for r in ratios]
    orders = [math.log2(a / b) for a, b in zip(norms, norms[1:])]
    assert all(o > 1.9 for o in orders), (norms, orders)
    assert norms[-1] < 1e-2


def test_transport_residual_is_linear_in_the_field():
    lump_a = make_lump([2.0, 0.0, 0.0], [0.7, 0.0, 0.0])
    lump_b = make_lump([-2.0, 1.0, 0.0], [0.0, 0.4, 0.0])
    grid = residual_grid(16)
    momentum = lump_a.momentum
    a, b = 1.3, -0.4

    def field(l):
        from relkin.lumps import _lump_field
        return lambda tt, xs: _lump_field(l, tt, xs)

    combo = transport_residual_of(
        lambda tt, xs: a * field(lump_a)(tt, xs) + b * field(lump_b)(tt, xs),
        momentum, grid, 0.0,
        [lump_a.worldline(0.0), lump_b.worldline(0.0)], 3.0)
    res_a = transport_residual_of(field(lump_a), momentum, grid, 0.0,
                                  [lump_a.worldline(0.0), lump_b.worldline(0.0)], 3.0)
    res_b = transport_residual_of(field(lump_b), momentum, grid, 0.0,
                                  [lump_a.worldline(0.0), lump_b.worldline(0.0)], 3.0)

    keep = combo.keep
    lin_gap = combo.residual[keep] - (a * res_a.residual[keep] + b * res_b.residual[keep])
    scale = np.max(np.abs(combo.residual[keep]))
    assert np.max(np.abs(lin_gap)) < 1e-12 * scale
    # Triangle inequality on the summed field's residual.
    bound = np.abs(a) * np.abs(res_a.residual[keep]) \
        + np.abs(b) * np.abs(res_b.residual[keep])
    assert np.all(np.abs(combo.residual[keep]) <= bound + 1e-12 * scale)


def test_transport_residual_preconditions():
    lump = make_lump([0.0, 0.0, 0.0], [0.5, 0.0, 0.0])
    with pytest.raises(ValueError, match="exclusion"):
        lump_transport_residual(lump, residual_grid(16), exclusion_radius=1.0)
    no_dt = SpaceTimeGrid(dim=3, lengths=(16.0,) * 3, npoints=(16,) * 3)
    with pytest.raises(ValueError, match="dt"):
        lump_transport_residual(lump, no_dt, exclusion_radius=3.0)
    grid1d = SpaceTimeGrid(dim=1, lengths=(16.0,), npoints=(16,), dt=0.5)
    with pytest.raises(ValueError, match="3D"):
        lump_transport_residual(lump, grid1d, exclusion_radius=3.0)


def test_packet_compare_relativistic_regime():
    mass = 1.0
    lump = make_lump([0.0, 0.0, 0.0], [10.0 * mass, 0.0, 0.0], mass)
    report = packet_compare(lump, bandwidth=2.0 * mass)
    assert report.feasible
    target = 10.0 / math.sqrt(101.0)
    assert abs(report.velocity_target - target) < 1e-12
    assert abs(report.velocity_fit - target) < 0.01 * target


def test_packet_compare_nonrelativistic_flag():
    mass = 1.0
    lump = make_lump([0.0, 0.0, 0.0], [0.1 * mass, 0.0, 0.0], mass)
    report = packet_compare(lump, bandwidth=0.1 * mass)
    assert not report.feasible
    assert report.box_length >= 24.0
    with pytest.raises(ValueError, match="bandwidth"):
        packet_compare(lump, bandwidth=0.0)


def test_packet_compare_massless_limit():
    mass = 1e-3
    lump = make_lump([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], mass)
    report = packet_compare(lump, bandwidth=0.2)
    assert abs(report.velocity_fit - 1.0) < 1e-4
    assert abs(report.width[-1] - report.width[0]) < 1e-3 * report.width[0]


def test_ensemble_transport_rest_frame_and_mismatch():
    lumps = (make_lump([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
             make_lump([1.5, 1.0, -0.5], [0.0, 0.0, 0.0]))
    ens = LumpEnsemble(lumps)
    report = ensemble_transport_residual(ens, residual_grid(16), 3.0)
    assert report.n_kept > 0
    assert report.l_inf < 1e-12

    mixed = LumpEnsemble((make_lump([0, 0, 0], [0.5, 0, 0]),
                          make_lump([2, 0, 0], [0.0, 0, 0])))
    with pytest.raises(ValueError, match="common momentum"):
        ensemble_transport_residual(mixed, residual_grid(16), 3.0)


def test_ensemble_field_sums_lumps_with_inf_on_worldlines():
    lumps = (make_lump([0.0, 0.0, 0.0], [0.6, 0.0, 0.0]),
             make_lump([1.0, 0.0, 0.0], [0.6, 0.0, 0.0]))
    ens = LumpEnsemble(lumps)
    xs = np.array([[0.5, 0.2, -0.1], [0.0, 0.0, 0.0]])
    vals = ensemble_field(ens, 0.0, xs)
    direct = superpose(ens, np.concatenate([[0.0], xs[0]]))
    assert vals[0] == pytest.approx(direct, rel=1e-14)
    assert np.isinf(vals[1])
