import numpy as np
import pytest

from relkin.core import OnShellMomentum, fourvector, stream_rng
from relkin.dynamics import (
    BoyerField,
    EnsembleConfig,
    IntegrationBlowupError,
    UniformField,
    bin_phase_space,
    drift_scaling,
    free_streaming_inverse,
    integrate_trajectory,
    newtonian_trajectory,
    nonrelativistic_consistency,
    run_ensemble,
    transported_cloud_probabilities,
)
from relkin.vacuum import sample_modes


def test_free_streaming_is_exact():
    field = UniformField(np.zeros(3), np.zeros(3))
    p0 = OnShellMomentum(np.array([0.7, -0.2, 0.4]), 1.0)
    traj = integrate_trajectory(field, np.array([0.1, 0.0, -0.3]), p0, 0.0, 2.0, 1e-3)
    v = p0.p3 / p0.energy
    closed = np.array([0.1, 0.0, -0.3]) + v * traj.times[-1]
    assert np.max(np.abs(traj.xs[-1] - closed)) < 1e-12
    assert traj.max_drift < 1e-14
    assert np.array_equal(traj.ps[-1], traj.ps[0])


def test_uniform_e_field_momentum_is_exact():
    q, e = 0.3, 0.8
    field = UniformField(np.array([e, 0.0, 0.0]), np.zeros(3))
    p0 = OnShellMomentum(np.array([0.2, 0.0, 0.0]), 1.0)
    traj = integrate_trajectory(field, np.zeros(3), p0, q, 5.0, 1e-2)
    expect = 0.2 + q * e * traj.times
    assert np.max(np.abs(traj.ps[:, 1] - expect)) < 1e-12 * np.max(np.abs(expect))


def test_boyer_drift_is_tiny_at_fine_step():
    ms = sample_modes(0.5, 2.0, stream_rng(21, 0))
    field = BoyerField(ms)
    p0 = OnShellMomentum(np.array([0.3, 0.1, -0.2]), 1.0)
    traj = integrate_trajectory(field, np.zeros(3), p0, 0.1, 2.0, 1e-3)
    assert traj.max_drift < 1e-8


def test_drift_scales_at_rk4_order():
    ms = sample_modes(0.5, 2.0, stream_rng(22, 0))
    field = BoyerField(ms)
    p0 = OnShellMomentum(np.array([0.5, -0.3, 0.2]), 1.0)
    dts = [0.16, 0.08, 0.04]
    drifts = drift_scaling(field, np.zeros(3), p0, 1.0, 1.6, dts)
    orders = np.log2(np.array(drifts[:-1]) / np.array(drifts[1:]))
    assert np.all(np.array(drifts) > 1e-14), drifts
    assert np.all(orders > 3.7), (drifts, orders)


def test_non_finite_field_aborts_with_step_index():
    field = UniformField(np.array([np.nan, 0.0, 0.0]), np.zeros(3))
    p0 = OnShellMomentum(np.array([0.1, 0.0, 0.0]), 1.0)
    with pytest.raises(IntegrationBlowupError, match="step 1"):
        integrate_trajectory(field, np.zeros(3), p0, 1.0, 1.0, 0.1)


def test_drift_bound_aborts():
    field = UniformField(np.array([50.0, 0.0, 0.0]), np.zeros(3))
    p0 = OnShellMomentum(np.array([0.1, 0.0, 0.0]), 1.0)
    with pytest.raises(IntegrationBlowupError, match="drift"):
        integrate_trajectory(field, np.zeros(3), p0, 1.0, 4.0, 0.5)


def test_newtonian_matches_closed_form():
    q, e = 0.2, 0.5
    field = UniformField(np.array([0.0, e, 0.0]), np.zeros(3))
    traj = newtonian_trajectory(field, np.zeros(3), np.array([0.3, 0.0, 0.0]), 1.0, q, 2.0, 1e-3)
    t = traj.times
    assert np.max(np.abs(traj.xs[:, 0] - 0.3 * t)) < 1e-10
    assert np.max(np.abs(traj.xs[:, 1] - 0.5 * q * e * t * t)) < 1e-10


def test_nonrelativistic_consistency_small_and_monotone():
    rows = nonrelativistic_consistency(0.1, 1.0, [0.01, 0.05, 0.2], 10.0, 0.01)
    devs = [r["deviation_x"] for r in rows]
    assert devs[0] < 1e-3
    assert devs[0] < devs[1] < devs[2]


def _free_cfg(n=1500):
    x_edges = tuple(np.linspace(-2.0, 8.0, 9))
    p_edges = tuple(np.linspace(-1.0, 3.0, 9))
    return EnsembleConfig(
        n_trajectories=n, mass=1.0, charge=0.0,
        x_mean=(0.0, 0.0, 0.0), x_sigma=(1.0, 0.0, 0.0),
        p_mean=(1.0, 0.0, 0.0), p_sigma=(0.5, 0.0, 0.0),
        t_span=5.0, dt=0.05, slice_times=(0.0, 5.0),
        hist_axes=("x1", "p1"), hist_edges=(x_edges, p_edges),
        mode_source="none",
    )


def test_free_ensemble_weight_and_oracle():
    cfg = _free_cfg()
    res = run_ensemble(cfg, seed=99)
    for h in res.histograms:
        assert h.total_weight == cfg.n_trajectories
    probs = transported_cloud_probabilities(cfg, 5.0)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    obs = res.histograms[1].counts
    n = cfg.n_trajectories
    expect = n * probs
    sigma = np.sqrt(n * probs * (1.0 - probs))
    z = np.abs(obs - expect) / np.maximum(sigma, 1e-12)
    assert np.max(z) <= 4.0, (np.max(z), obs, expect.round(1))


def test_free_ensemble_is_reproducible():
    cfg = _free_cfg(n=200)
    a = run_ensemble(cfg, seed=7)
    b = run_ensemble(cfg, seed=7)
    assert np.array_equal(a.histograms[1].counts, b.histograms[1].counts)
    c = run_ensemble(cfg, seed=8)
    assert not np.array_equal(a.histograms[1].counts, c.histograms[1].counts)


def test_charged_ensemble_worker_count_invariance():
    x_edges = tuple(np.linspace(-2.0, 2.0, 6))
    p_edges = tuple(np.linspace(-1.5, 1.5, 6))
    cfg = EnsembleConfig(
        n_trajectories=12, mass=1.0, charge=0.2,
        x_mean=(0.0, 0.0, 0.0), x_sigma=(0.3, 0.3, 0.3),
        p_mean=(0.2, 0.0, 0.0), p_sigma=(0.2, 0.2, 0.2),
        t_span=0.5, dt=0.01, slice_times=(0.5,),
        hist_axes=("x1", "p1"), hist_edges=(x_edges, p_edges),
        mode_source="fresh", k_spacing=0.5, cutoff=1.5,
    )
    serial = run_ensemble(cfg, seed=31, workers=1)
    parallel = run_ensemble(cfg, seed=31, workers=3)
    assert np.array_equal(serial.histograms[0].counts, parallel.histograms[0].counts)
    assert np.array_equal(serial.max_drifts, parallel.max_drifts)
    shared_cfg = EnsembleConfig(**{**cfg.__dict__, "mode_source": "shared"})
    s1 = run_ensemble(shared_cfg, seed=31, workers=1)
    s2 = run_ensemble(shared_cfg, seed=31, workers=2)
    assert np.array_equal(s1.max_drifts, s2.max_drifts)
    assert not np.array_equal(s1.max_drifts, serial.max_drifts)


def test_charged_ensemble_requires_field():
    with pytest.raises(ValueError):
        EnsembleConfig(
            n_trajectories=1, mass=1.0, charge=0.1,
            x_mean=(0, 0, 0), x_sigma=(0, 0, 0), p_mean=(0, 0, 0), p_sigma=(0, 0, 0),
            t_span=1.0, dt=0.1, slice_times=(1.0,), mode_source="none",
        )


def test_bin_phase_space_clips_to_boundary_bins():
    samples = np.array([
        [-10.0, 0, 0, 0.5, 0, 0],
        [0.5, 0, 0, 99.0, 0, 0],
        [0.5, 0, 0, 0.5, 0, 0],
    ])
    edges = (np.linspace(0, 1, 3), np.linspace(0, 1, 3))
    h = bin_phase_space(samples, ("x1", "p1"), edges, 0.0)
    assert h.total_weight == 3
    assert h.counts[0, 1] == 1   # x clipped low, p mid-upper
    assert h.counts[1, 1] == 2   # p clipped high joins the in-range sample


def gaussian_g(points, p):
    return np.exp(-0.5 * (points[:, 0] ** 2 + points[:, 1] ** 2))


def test_inverse_zero_and_linearity():
    p = OnShellMomentum(np.array([1.0, 0.0, 0.0]), 1.0)
    x = fourvector(0.2, 0.1, 0.0, 0.0)
    zero = free_streaming_inverse(lambda pts, q: np.zeros(len(pts)), x, p, 5.0, 0.05)
    assert zero.value == 0.0 and not zero.tail_warning
    a = free_streaming_inverse(gaussian_g, x, p, 10.0, 0.02)
    two = free_streaming_inverse(lambda pts, q: 2.0 * gaussian_g(pts, q), x, p, 10.0, 0.02)
    assert two.value == pytest.approx(2.0 * a.value, rel=1e-14)


def test_inverse_is_retarded():
    # support strictly in the probe's future never contributes
    def future_g(points, p):
        return np.where(points[:, 0] > 1.0, 1.0, 0.0)

    p = OnShellMomentum(np.array([0.5, 0.0, 0.0]), 1.0)
    res = free_streaming_inverse(future_g, fourvector(0.5, 0.0, 0.0, 0.0), p, 8.0, 0.01)
    assert res.value == 0.0


def test_inverse_tail_warning_on_slow_decay():
    def slow_g(points, p):
        return 1.0 / (1.0 + points[:, 0] ** 2 / 100.0)

    p = OnShellMomentum(np.array([1.0, 0.0, 0.0]), 1.0)
    res = free_streaming_inverse(slow_g, fourvector(0.0, 0.0, 0.0, 0.0), p, 5.0, 0.05)
    assert res.tail_warning


def test_inverse_round_trip_recovers_source():
    p = OnShellMomentum(np.array([1.0, 0.0, 0.0]), 1.0)
    h = 0.04
    ts = np.arange(-0.6, 0.6 + h / 2, h)
    xs = np.arange(-0.6, 0.6 + h / 2, h)
    u = np.empty((len(ts), len(xs)))
    for i, t in enumerate(ts):
        for j, xx in enumerate(xs):
            u[i, j] = free_streaming_inverse(
                gaussian_g, fourvector(t, xx, 0.0, 0.0), p, 12.0, 0.02).value
    dt_u = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h)
    dx_u = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h)
    recovered = p.energy * dt_u + p.p3[0] * dx_u
    tgrid, xgrid = np.meshgrid(ts[1:-1], xs[1:-1], indexing="ij")
    pts = np.column_stack([tgrid.ravel(), xgrid.ravel(),
                           np.zeros(tgrid.size), np.zeros(tgrid.size)])
    g_exact = gaussian_g(pts, p).reshape(tgrid.shape)
    rel = np.linalg.norm(recovered - g_exact) / np.linalg.norm(g_exact)
    assert rel < 1e-3, rel
