import numpy as np
import pytest

from panelscale import (
    CriticalValue,
    Grid,
    HacConfig,
    LocalStatTable,
    Panel,
    Rejection,
    SmoothingKernel,
    aggregate,
    build_grid_custom,
    compute_stat_table,
    local_stat,
    prune_minimal,
    run_test,
    unit_pairs,
)
from panelscale.kernels import lambda_correction

import oracles

KERN = SmoothingKernel("epanechnikov")


def micro_grid(T=16):
    points = ((0.5, 0.25), (0.25, 3 / 16), (0.75, 3 / 16), (0.5, 2 / 16))
    return Grid(points=points, T=T, h_min=2 / 16, h_max=0.25)


def random_panel(rng, N=3, T=16, D=2):
    x = np.column_stack([np.ones(T), rng.standard_normal(T)])[:, :D]
    return Panel(
        y=rng.standard_normal((N, T)),
        x=x,
        unit_labels=tuple(f"u{i}" for i in range(N)),
    )


def eye_normalizers(N, D):
    return np.array([np.eye(D)] * (N * (N - 1) // 2))


def test_identical_units_zero_statistic():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(16)
    panel = Panel(
        y=np.vstack([y, y]),
        x=np.column_stack([np.ones(16), rng.standard_normal(16)]),
        unit_labels=("a", "b"),
    )
    table = compute_stat_table(panel, KERN, micro_grid(), eye_normalizers(2, 2))
    assert np.abs(table.s_hat).max() < 1e-10


def test_scalar_reduction_matches_weighted_sum():
    rng = np.random.default_rng(1)
    T = 16
    panel = Panel(
        y=rng.standard_normal((2, T)),
        x=np.ones((T, 1)),
        unit_labels=("a", "b"),
    )
    u, h = 0.5, 0.25
    got = local_stat(panel, KERN, np.eye(1), u, h, 0, 1)
    w = np.array(oracles.naive_weights("epanechnikov", T, u, h))
    expected = abs((w * (panel.y[0] - panel.y[1])).sum()) / np.sqrt(T * h)
    assert got == pytest.approx(expected, abs=1e-12)


def test_local_stat_matches_composed_oracle():
    rng = np.random.default_rng(2)
    for _ in range(8):
        panel = random_panel(rng, N=3, T=16, D=2)
        q = rng.standard_normal((2, 2))
        nrm = oracles.sqrtm_inv(q @ q.T + np.eye(2))
        u, h = 0.5, 0.25
        got = local_stat(panel, KERN, nrm, u, h, 0, 2)
        ref = oracles.naive_local_stat(
            panel.x, panel.y, "epanechnikov", u, h, 0, 2, nrm
        )
        assert got == pytest.approx(ref, abs=1e-10)


def test_two_forms_agree_on_homogeneous_panels():
    rng = np.random.default_rng(3)
    for seed in range(5):
        panel = random_panel(np.random.default_rng(seed), N=3, T=24, D=2)
        u, h = 0.5, 0.25
        nrm = np.eye(2)
        est = oracles.naive_local_stat(panel.x, panel.y, "epanechnikov", u, h, 0, 1, nrm)
        direct = oracles.naive_kernel_sum_stat(
            panel.x, panel.y, "epanechnikov", u, h, 0, 1, nrm
        )
        assert est == pytest.approx(direct, abs=1e-8)
        # the library call cross-checks internally and must not raise
        local_stat(panel, KERN, nrm, u, h, 0, 1, cross_check=True)


def test_table_scale_invariance():
    # Y -> cY with Sigma -> c^2 Sigma leaves every statistic unchanged
    rng = np.random.default_rng(4)
    panel = random_panel(rng, N=3, T=16, D=2)
    grid = micro_grid()
    sig = [np.eye(2), 2 * np.eye(2), np.diag([1.0, 3.0])]
    pairs = unit_pairs(3)
    nrm = np.array([oracles.sqrtm_inv(0.5 * (sig[i] + sig[j])) for i, j in pairs])
    base = compute_stat_table(panel, KERN, grid, nrm).s_hat
    c = 7.3
    scaled_panel = Panel(y=c * panel.y, x=panel.x, unit_labels=panel.unit_labels)
    nrm_scaled = np.array(
        [oracles.sqrtm_inv(c * c * 0.5 * (sig[i] + sig[j])) for i, j in pairs]
    )
    scaled = compute_stat_table(scaled_panel, KERN, grid, nrm_scaled).s_hat
    np.testing.assert_allclose(scaled, base, atol=1e-8 * max(1, base.max()))


def test_statistic_symmetric_in_pair_order():
    rng = np.random.default_rng(5)
    panel = random_panel(rng, N=2, T=16, D=2)
    nrm = np.eye(2)
    a = local_stat(panel, KERN, nrm, 0.5, 0.25, 0, 1)
    swapped = Panel(
        y=panel.y[::-1].copy(), x=panel.x, unit_labels=("b", "a")
    )
    b = local_stat(swapped, KERN, nrm, 0.5, 0.25, 0, 1)
    assert a == pytest.approx(b, abs=1e-12)


def test_aggregate_examples():
    grid = Grid(points=((0.5, 0.25),), T=16, h_min=0.25, h_max=0.25)
    lam = lambda_correction(0.25)
    table = LocalStatTable(
        grid=grid, pairs=((0, 1),), s_hat=np.array([[lam + 1.5]]), lam=np.array([lam])
    )
    assert aggregate(table) == pytest.approx(1.5, abs=1e-12)
    # all penalized entries equal -> that common value
    grid2 = micro_grid()
    lam2 = np.array([lambda_correction(h) for h in grid2.h])
    table2 = LocalStatTable(
        grid=grid2, pairs=((0, 1),), s_hat=(0.7 + lam2)[None, :], lam=lam2
    )
    assert aggregate(table2) == pytest.approx(0.7, abs=1e-12)


def test_aggregate_equals_full_scan():
    rng = np.random.default_rng(6)
    grid = micro_grid()
    lam = np.array([lambda_correction(h) for h in grid.h])
    s = rng.uniform(0, 3, size=(3, grid.n_points))
    table = LocalStatTable(grid=grid, pairs=((0, 1), (0, 2), (1, 2)), s_hat=s, lam=lam)
    assert aggregate(table) == pytest.approx(oracles.naive_psi(s, lam), abs=1e-14)


def test_aggregate_monotone():
    rng = np.random.default_rng(7)
    grid = micro_grid()
    lam = np.array([lambda_correction(h) for h in grid.h])
    s = rng.uniform(0, 3, size=(1, grid.n_points))
    table = LocalStatTable(grid=grid, pairs=((0, 1),), s_hat=s, lam=lam)
    base = aggregate(table)
    s2 = s.copy()
    s2[0, 2] += 0.5
    table2 = LocalStatTable(grid=grid, pairs=((0, 1),), s_hat=s2, lam=lam)
    assert aggregate(table2) >= base


def run_micro_test(panel, q, alpha=0.05, grid=None):
    grid = grid or micro_grid(panel.n_time)
    crit = CriticalValue(alpha=alpha, B=1000, seed=0, q=q)
    return run_test(panel, KERN, grid, HacConfig(bandwidth=2.0), alpha, crit)


def test_run_test_homogeneous_noiseless():
    # identical responses cancel exactly in the pairwise sums, so psi_hat is
    # the pure penalty floor and no positive threshold can be crossed
    T = 64
    x = np.column_stack([np.ones(T), np.sin(np.arange(1, T + 1) * 0.7)])
    beta = np.array([1.0, 2.0])
    y = (x @ beta)[None, :].repeat(3, axis=0)
    panel = Panel(y=y, x=x, unit_labels=("a", "b", "c"))
    grid = build_grid_custom(64, 8, [0.25])
    crit = CriticalValue(alpha=0.05, B=1000, seed=0, q=1e-9)
    res = run_test(panel, KERN, grid, HacConfig(bandwidth=2.0), 0.05, crit)
    assert res.psi_hat == pytest.approx(-lambda_correction(0.25), abs=1e-10)
    assert not res.reject_global and res.rejections == ()
    # and the statistic table itself is numerically zero
    table = compute_stat_table(panel, KERN, grid, eye_normalizers(3, 2))
    assert np.abs(table.s_hat).max() < 1e-8


def test_run_test_alpha_nesting():
    rng = np.random.default_rng(8)
    panel = random_panel(rng, N=3, T=64, D=2)
    grid = build_grid_custom(64, 8, [0.25])
    crit_lo = CriticalValue(alpha=0.10, B=1000, seed=0, q=1.0)
    crit_hi = CriticalValue(alpha=0.01, B=1000, seed=0, q=2.0)
    res_lo = run_test(panel, KERN, grid, HacConfig(bandwidth=2.0), 0.10, crit_lo)
    res_hi = run_test(panel, KERN, grid, HacConfig(bandwidth=2.0), 0.01, crit_hi)
    keys_hi = {(r.i, r.j, r.u, r.h) for r in res_hi.rejections}
    keys_lo = {(r.i, r.j, r.u, r.h) for r in res_lo.rejections}
    assert keys_hi <= keys_lo


def test_run_test_result_invariants():
    rng = np.random.default_rng(9)
    panel = random_panel(rng, N=3, T=64, D=2)
    grid = build_grid_custom(64, 8, [0.25])
    res = run_micro_test(panel, q=0.5, grid=grid)
    assert res.reject_global == (res.psi_hat > res.q_alpha)
    assert (len(res.rejections) > 0) == res.reject_global
    for r in res.rejections:
        assert r.exceedance > res.q_alpha
    ex = [r.exceedance for r in res.rejections]
    assert ex == sorted(ex, reverse=True)


def test_run_test_alpha_mismatch_rejected():
    rng = np.random.default_rng(10)
    panel = random_panel(rng, N=2, T=64, D=2)
    grid = build_grid_custom(64, 8, [0.25])
    crit = CriticalValue(alpha=0.10, B=1000, seed=0, q=1.0)
    with pytest.raises(ValueError, match="alpha"):
        run_test(panel, KERN, grid, HacConfig(bandwidth=2.0), 0.05, crit)


def rejection(i, j, u, h):
    return Rejection(i=i, j=j, u=u, h=h, stat=1.0, exceedance=1.0)


def test_prune_nested_intervals():
    outer = rejection(0, 1, 0.5, 0.3)
    inner = rejection(0, 1, 0.5, 0.1)
    kept = prune_minimal((outer, inner))
    assert kept == (inner,)


def test_prune_disjoint_intervals():
    a = rejection(0, 1, 0.2, 0.1)
    b = rejection(0, 1, 0.7, 0.1)
    assert set(prune_minimal((a, b))) == {a, b}


def test_prune_different_pairs_not_compared():
    outer = rejection(0, 1, 0.5, 0.3)
    inner = rejection(0, 2, 0.5, 0.1)
    assert set(prune_minimal((outer, inner))) == {outer, inner}


def test_prune_matches_containment_oracle():
    rng = np.random.default_rng(11)
    entries = []
    for _ in range(40):
        u = rng.uniform(0.3, 0.7)
        h = rng.uniform(0.05, 0.25)
        pair = (0, int(rng.integers(1, 3)))
        entries.append(rejection(pair[0], pair[1], u, h))
    kept = prune_minimal(tuple(entries))
    oracle_entries = [((e.i, e.j), e.u - e.h, e.u + e.h) for e in entries]
    oracle_kept = oracles.naive_minimal_intervals(oracle_entries)
    assert len(kept) == len(oracle_kept)
    kept_keys = {((e.i, e.j), round(e.u - e.h, 12), round(e.u + e.h, 12)) for e in kept}
    oracle_keys = {(p, round(lo, 12), round(hi, 12)) for p, lo, hi in oracle_kept}
    assert kept_keys == oracle_keys


def test_fallback_on_singular_gridpoint():
    # second covariate vanishes inside the first window: singular there only
    T = 32
    x2 = np.zeros(T)
    x2[T // 2 :] = np.linspace(1, 2, T - T // 2)
    x = np.column_stack([np.ones(T), x2])
    rng = np.random.default_rng(12)
    panel = Panel(y=rng.standard_normal((2, T)), x=x, unit_labels=("a", "b"))
    grid = Grid(points=((0.25, 0.25), (0.75, 0.25)), T=T, h_min=0.25, h_max=0.25)
    table = compute_stat_table(panel, KERN, grid, eye_normalizers(2, 2))
    assert table.fallback_points == (0,)
    # fallback value equals the direct kernel-sum oracle
    ref = oracles.naive_kernel_sum_stat(
        panel.x, panel.y, "epanechnikov", 0.25, 0.25, 0, 1, np.eye(2)
    )
    assert table.s_hat[0, 0] == pytest.approx(ref, abs=1e-12)
