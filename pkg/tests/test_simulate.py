import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from bkern import bounds, geometry, kernels, simulate, weights
from bkern.errors import (ConfigError, DomainError, InputError, RangeError,
                          SamplerError, UnsupportedError)

HL = geometry.DomainSpec("half_line")
HS = geometry.DomainSpec("half_space", d=2)


# ---------------------------------------------------------------------------
# Increments


def test_positive_stable_laplace_transform():
    # E[exp(-S)] = exp(-1) for every index
    rng = np.random.default_rng(1)
    for a in (0.25, 0.5, 0.75):
        s = simulate.positive_stable(a, rng, 200_000)
        assert abs(float(np.exp(-s).mean()) - math.exp(-1)) < 5e-3


def test_positive_stable_half_matches_levy():
    # for index 1/2 the law is 1/(2 Z^2) exactly
    rng = np.random.default_rng(4)
    s = simulate.positive_stable(0.5, rng, 100_000)
    z = rng.standard_normal(100_000)
    ks = stats.ks_2samp(s, 1.0 / (2.0 * z * z))
    assert ks.pvalue > 1e-3


def test_positive_stable_index_range():
    rng = np.random.default_rng(0)
    with pytest.raises(RangeError):
        simulate.positive_stable(1.0, rng, 4)
    with pytest.raises(RangeError):
        simulate.positive_stable(0.0, rng, 4)


def test_increment_cauchy_median():
    # alpha=1, d=1, unit time is standard Cauchy: P(|X| > 1) = 1/2
    rng = np.random.default_rng(2)
    x = simulate.stable_increment(1.0, 1, 1.0, rng, size=100_000)[:, 0]
    assert abs(float((np.abs(x) > 1.0).mean()) - 0.5) < 0.01


def test_increment_scaling_law():
    # increments over dt, rescaled by dt^{1/alpha}, match unit increments
    rng = np.random.default_rng(3)
    a = 1.3
    x1 = simulate.stable_increment(a, 1, 0.01, rng, size=50_000)[:, 0]
    x2 = simulate.stable_increment(a, 1, 1.0, rng, size=50_000)[:, 0]
    ks = stats.ks_2samp(x1 / 0.01 ** (1.0 / a), x2)
    assert ks.pvalue > 1e-3


def test_increment_symmetry():
    rng = np.random.default_rng(5)
    n = 100_000
    x = simulate.stable_increment(0.7, 1, 0.5, rng, size=n)[:, 0]
    assert abs(float((x > 0).mean()) - 0.5) < 3.0 * 0.5 / math.sqrt(n)


def test_increment_isotropy_2d():
    rng = np.random.default_rng(6)
    X = simulate.stable_increment(0.7, 2, 1.0, rng, size=100_000)
    th = np.arctan2(X[:, 1], X[:, 0])
    counts, _ = np.histogram(th, bins=16, range=(-np.pi, np.pi))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_increment_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(RangeError):
        simulate.stable_increment(2.0, 1, 1.0, rng)
    with pytest.raises(InputError):
        simulate.stable_increment(1.0, 1, 0.0, rng)
    assert simulate.stable_increment(1.5, 3, 0.1, rng, size=7).shape == (7, 3)


# ---------------------------------------------------------------------------
# Ball exit


def test_ball_exit_centered_radial_law():
    # squared overshoot is Beta-prime(1 - alpha/2, alpha/2)
    rng = np.random.default_rng(3)
    for a, d in [(0.6, 2), (1.4, 3)]:
        z = simulate.ball_exit_sample(a, d, np.zeros(d), np.zeros(d), 2.0,
                                      rng, size=60_000)
        s = (np.linalg.norm(z, axis=1) / 2.0) ** 2 - 1.0
        ks = stats.kstest(s, stats.betaprime(1.0 - a / 2.0, a / 2.0).cdf)
        assert ks.pvalue > 1e-3


def test_ball_exit_centered_angles_uniform():
    rng = np.random.default_rng(8)
    z = simulate.ball_exit_sample(1.0, 2, [0.0, 0.0], [0.0, 0.0], 1.0, rng,
                                  size=80_000)
    th = np.arctan2(z[:, 1], z[:, 0])
    counts, _ = np.histogram(th, bins=20, range=(-np.pi, np.pi))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_ball_exit_off_center_matches_quadrature():
    rng = np.random.default_rng(3)
    a, r, x0 = 1.2, 1.0, 0.4
    z = simulate.ball_exit_sample(a, 1, [x0], [0.0], r, rng, size=60_000)[:, 0]

    def f(t):
        return ((r * r - x0 * x0) / (t * t - r * r)) ** (a / 2) / abs(t - x0)

    zp, _ = quad(f, 1.0, np.inf)
    zm, _ = quad(f, -np.inf, -1.0)
    assert abs(float((z > 0).mean()) - zp / (zp + zm)) < 0.008
    grid = np.linspace(1.0001, 8.0, 80)
    cdf = np.array([quad(f, 1.0, g)[0] for g in grid]) / (zp + zm) \
        + zm / (zp + zm)
    emp = np.searchsorted(np.sort(z), grid) / len(z)
    assert np.abs(cdf - emp).max() < 0.01


def test_ball_exit_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(InputError):
        simulate.ball_exit_sample(1.0, 2, [1.5, 0.0], [0.0, 0.0], 1.0, rng)
    with pytest.raises(InputError):
        simulate.ball_exit_sample(1.0, 2, [0.0, 0.0], [0.0, 0.0], 0.0, rng)
    with pytest.raises(InputError):
        simulate.ball_exit_sample(1.0, 2, [0.0], [0.0, 0.0], 1.0, rng)
    with pytest.raises(RangeError):
        simulate.ball_exit_sample(2.0, 2, [0.0, 0.0], [0.0, 0.0], 1.0, rng)


def test_ball_exit_refuses_grazing_start():
    rng = np.random.default_rng(0)
    with pytest.raises(SamplerError) as err:
        simulate.ball_exit_sample(1.0, 2, [0.99999, 0.0], [0.0, 0.0], 1.0,
                                  rng)
    assert "acceptance" in err.value.diagnostics


# ---------------------------------------------------------------------------
# Re-entry laws


def test_reentry_power_matches_density():
    rng = np.random.default_rng(5)
    a, p, b = 1.3, 0.4, 0.7
    y = simulate._reentry_power(a, p, 1, np.full(50_000, b),
                                np.zeros(50_000), rng)[:, 0]

    def f(h):
        return h ** -p * (h + b) ** (-1.0 - a + 2.0 * p)

    z, _ = quad(f, 0, np.inf)
    grid = np.geomspace(1e-3, 30.0, 60)
    cdf = np.array([quad(f, 0, g)[0] for g in grid]) / z
    emp = np.searchsorted(np.sort(y), grid) / len(y)
    assert np.abs(cdf - emp).max() < 0.01


def test_reentry_power_agrees_with_kernel_density():
    # the closed height marginal is the normalized return density
    a, p, b = 1.3, 0.4, 0.7

    def f(h):
        return h ** -p * (h + b) ** (-1.0 - a + 2.0 * p)

    z, _ = quad(f, 0, np.inf)
    ps = weights.PsiSpec("power", p=p)
    for h in (0.1, 0.5, 2.0):
        direct = kernels.resurrection_density(ps, a, [-b], [h])
        assert float(direct) == pytest.approx(f(h) / z, rel=1e-9)


def test_reentry_trace_beta_and_cauchy():
    rng = np.random.default_rng(5)
    a, b = 0.9, 1.5
    y = simulate._reentry_trace(a, 2, np.full(40_000, b),
                                np.zeros(40_000), rng)
    u = y[:, 1] / (y[:, 1] + b)
    assert stats.kstest(u, stats.beta(1.0 - a / 2.0, a / 2.0).cdf).pvalue \
        > 1e-3
    lateral = y[:, 0] / (y[:, 1] + b)
    assert stats.kstest(lateral, stats.cauchy.cdf).pvalue > 1e-3


def test_reentry_cap_matches_density():
    rng = np.random.default_rng(5)
    a, p, b = 1.1, 0.45, 0.6
    ps = weights.PsiSpec("power_cap", p=p)
    y = simulate._reentry_cap(ps, a, 1, np.full(60_000, b),
                              np.zeros(60_000), rng)[:, 0]

    def g(h):
        return float(kernels.resurrection_density(ps, a, [-b], [h]))

    grid = np.geomspace(1e-3, 20.0, 40)
    cdf = np.array([quad(g, 0, gg, limit=200)[0] for gg in grid])
    emp = np.searchsorted(np.sort(y), grid) / len(y)
    assert np.abs(cdf - emp).max() < 0.012


# ---------------------------------------------------------------------------
# Configuration


def test_config_validation():
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="brakes", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0, dt=1e-4)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="neumann", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0, dt=1.0 / 999.0)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="neumann", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="resurrected", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0, dt=1e-4)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="resurrected", dom=HL, alpha=0.5, t=1.0,
                           n_paths=10, seed=0, dt=1e-4,
                           psi=weights.PsiSpec("power", p=0.6))
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="neumann", dom=HL, alpha=1.0, t=0.0,
                           n_paths=10, seed=0, dt=1e-5)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="neumann", dom=HL, alpha=1.0, t=1.0,
                           n_paths=0, seed=0, dt=1e-4)
    with pytest.raises(UnsupportedError):
        simulate.SimConfig(model="neumann",
                           dom=geometry.DomainSpec("ball", radius=1.0),
                           alpha=1.0, t=1.0, n_paths=10, seed=0, dt=1e-4)


def test_config_validation_ctmc():
    ks = kernels.KernelSpec("comparison", HL, 1.0,
                            weight=weights.WeightSpec("log", a0=1.0))
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0, kernel=ks, eps=0.2)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.2, t=1.0,
                           n_paths=10, seed=0, kernel=ks, eps=0.1)
    nk = kernels.KernelSpec("neumann", HL, 1.0)
    with pytest.raises(ConfigError):
        simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.0, t=1.0,
                           n_paths=10, seed=0, kernel=nk, eps=0.1)
    wk = kernels.KernelSpec("comparison", HS, 1.0,
                            weight=weights.WeightSpec("log", a0=1.0))
    with pytest.raises(UnsupportedError):
        simulate.SimConfig(model="generic_ctmc", dom=HS, alpha=1.0, t=1.0,
                           n_paths=10, seed=0, kernel=wk, eps=0.1)


# ---------------------------------------------------------------------------
# Path engines


def test_paths_stay_in_closure():
    cfg = simulate.SimConfig(model="neumann", dom=HL, alpha=1.2, t=1.0,
                             n_paths=3000, seed=11, dt=1e-3)
    pe = simulate.simulate_paths(cfg, [0.5])
    assert np.isfinite(pe.points).all()
    assert (pe.points[:, 0] >= 0.0).all()
    assert pe.points.shape == (3000, 1)
    assert pe.n_steps == 3000 * 1000

    cfg2 = simulate.SimConfig(model="resurrected", dom=HS, alpha=0.8, t=1.0,
                              n_paths=1500, seed=11, dt=1e-3,
                              psi=weights.PsiSpec("power", p=0.3))
    pe2 = simulate.simulate_paths(cfg2, [0.0, 1.0])
    assert (pe2.points[:, 1] >= 0.0).all()
    assert (pe2.resurrections >= 0).all()


def test_deep_start_rarely_resurrects():
    cfg = simulate.SimConfig(model="trace", dom=HL, alpha=1.5, t=0.01,
                             n_paths=2000, seed=2, dt=1e-5)
    pe = simulate.simulate_paths(cfg, [50.0])
    assert float((pe.resurrections > 0).mean()) <= 0.05


def test_paths_deterministic_and_batched():
    cfg = simulate.SimConfig(model="neumann", dom=HL, alpha=1.0, t=0.5,
                             n_paths=900, seed=7, dt=5e-4, batch=400)
    a = simulate.simulate_paths(cfg, [1.0])
    b = simulate.simulate_paths(cfg, [1.0])
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.resurrections, b.resurrections)


def test_paths_start_validation():
    cfg = simulate.SimConfig(model="neumann", dom=HL, alpha=1.0, t=0.5,
                             n_paths=10, seed=0, dt=5e-4)
    with pytest.raises(DomainError):
        simulate.simulate_paths(cfg, [-1.0])
    with pytest.raises(InputError):
        simulate.simulate_paths(cfg, [1.0, 1.0])
    # a boundary start is allowed
    pe = simulate.simulate_paths(cfg, [0.0])
    assert (pe.points[:, 0] >= 0.0).all()


# ---------------------------------------------------------------------------
# Jump chain


def _log_kernel_spec():
    return kernels.KernelSpec("comparison", HL, 1.0,
                              weight=weights.WeightSpec("log", a0=1.0))


def test_ctmc_rate_table_matches_tail_integral():
    ks = _log_kernel_spec()
    tab = simulate._build_tables(ks, 1.0 / 8.0)
    for x in (0.01, 0.5, 3.0, 100.0):
        lam = float(tab.rate(np.array([x]))[0])
        truth = kernels.tail_integral(ks, [x], 1.0 / 8.0).value
        assert lam == pytest.approx(truth, rel=5e-3)


def test_ctmc_rate_table_plane():
    ks = kernels.KernelSpec("comparison", HS, 1.2,
                            weight=weights.WeightSpec("constant_one"))
    tab = simulate._build_tables(ks, 1.0 / 8.0)
    for h in (0.05, 1.0, 20.0):
        lam = float(tab.rate(np.array([h]))[0])
        truth = kernels.tail_integral(ks, [0.0, h], 1.0 / 8.0).value
        assert lam == pytest.approx(truth, rel=5e-3)


def test_ctmc_jump_law_matches_quadrature():
    ks = _log_kernel_spec()
    eps = 1.0 / 8.0
    tab = simulate._build_tables(ks, eps)
    rng = np.random.default_rng(17)
    x0 = 0.5
    w = ks.weight
    y = simulate._ctmc_jump_half_line(tab, 1.0, w, np.full(100_000, x0), rng)
    assert (y > 0).all()

    def dens(yv):
        s = abs(yv - x0)
        if s < eps or yv <= 0:
            return 0.0
        arg = min(s, 1.0) ** 2 / (min(x0, 1.0) * min(yv, 1.0))
        return s ** -2.0 * float(weights.eval_weight(w, arg))

    zl, _ = quad(dens, 0, x0 - eps, limit=200)
    zr, _ = quad(dens, x0 + eps, np.inf, limit=200)
    assert abs(float((y < x0).mean()) - zl / (zl + zr)) < 0.008
    grid = np.geomspace(x0 + eps + 1e-9, 60.0, 50)
    cdf = np.array([quad(dens, x0 + eps, g, limit=300)[0]
                    for g in grid]) / (zl + zr) + zl / (zl + zr)
    emp = np.searchsorted(np.sort(y), grid) / len(y)
    assert np.abs(cdf - emp).max() < 0.01


def test_ctmc_paths_run_and_stay_inside():
    ks = _log_kernel_spec()
    cfg = simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.0, t=1.0,
                             n_paths=2000, seed=9, kernel=ks, eps=1.0 / 8.0)
    pe = simulate.simulate_paths(cfg, [2.0])
    assert (pe.points[:, 0] > 0.0).all()
    assert pe.n_steps > 0
    again = simulate.simulate_paths(cfg, [2.0])
    assert np.array_equal(pe.points, again.points)

    ksp = kernels.KernelSpec("comparison", HS, 1.2,
                             weight=weights.WeightSpec("constant_one"))
    cfgp = simulate.SimConfig(model="generic_ctmc", dom=HS, alpha=1.2, t=1.0,
                              n_paths=1000, seed=9, kernel=ksp, eps=1.0 / 8.0)
    pep = simulate.simulate_paths(cfgp, [0.0, 1.0])
    assert (pep.points[:, 1] > 0.0).all()


def test_ctmc_short_horizon_stays_local():
    # over t = eps^alpha most paths have at most a few jumps, so the
    # cloud cannot spread far past a handful of eps
    ks = _log_kernel_spec()
    eps = 0.05
    cfg = simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.0,
                             t=0.4 ** 1.0, n_paths=2000, seed=13, kernel=ks,
                             eps=eps)
    pe = simulate.simulate_paths(cfg, [5.0])
    spread = np.abs(pe.points[:, 0] - 5.0)
    assert float(np.median(spread)) < 2.0


# ---------------------------------------------------------------------------
# Estimators


@pytest.fixture(scope="module")
def neumann_run():
    cfg = simulate.SimConfig(model="neumann", dom=HL, alpha=1.2, t=1.0,
                             n_paths=40_000, seed=21, dt=1e-3)
    return cfg, simulate.simulate_paths(cfg, [1.0])


def test_estimate_matches_bound_within_constants(neumann_run):
    cfg, pe = neumann_run
    w = weights.WeightSpec("constant_one")
    h = 1.0 / 4.0
    for y in ([1.0], [2.0], [0.3]):
        est = simulate.estimate_heat_kernel(cfg, [1.0], y, h, endpoints=pe)
        pt = bounds.hk_bound(HL, w, 1.2, math.inf, 1.0, [1.0], y).p_tilde
        assert est.value > 0
        assert 1.0 / 50.0 < est.value / pt < 50.0


def test_estimate_partition_mass(neumann_run):
    # adjacent balls tile [0, 8.5]; total recovered mass stays below 1
    # within noise and catches most of the distribution
    cfg, pe = neumann_run
    total = 0.0
    var = 0.0
    for c in np.arange(0.25, 8.5, 0.5):
        est = simulate.estimate_heat_kernel(cfg, [1.0], [c], 0.25,
                                            endpoints=pe)
        vol = geometry.ball_volume_in_domain(HL, [c], 0.25)
        total += est.value * vol
        var += (est.ci * vol / 1.96) ** 2
    assert total <= 1.0 + 3.0 * math.sqrt(var)
    assert total > 0.8


def test_estimate_symmetry(neumann_run):
    # the reflected model is reversible, so the density is symmetric
    cfg, pe = neumann_run
    est_xy = simulate.estimate_heat_kernel(cfg, [1.0], [2.5], 0.25,
                                           endpoints=pe)
    cfg2 = simulate.SimConfig(model="neumann", dom=HL, alpha=1.2, t=1.0,
                              n_paths=40_000, seed=22, dt=1e-3)
    est_yx = simulate.estimate_heat_kernel(cfg2, [2.5], [1.0], 0.25)
    gap = abs(est_xy.value - est_yx.value)
    sigma = math.sqrt((est_xy.ci / 1.96) ** 2 + (est_yx.ci / 1.96) ** 2)
    assert gap <= 3.0 * sigma


def test_estimate_zero_hits_rule_of_three(neumann_run):
    cfg, pe = neumann_run
    est = simulate.estimate_heat_kernel(cfg, [1.0], [500.0], 0.25,
                                        endpoints=pe)
    vol = geometry.ball_volume_in_domain(HL, [500.0], 0.25)
    assert est.value == 0.0
    assert est.hits == 0
    assert est.ci == pytest.approx(3.0 / (40_000 * vol))


def test_estimate_validation(neumann_run):
    cfg, pe = neumann_run
    with pytest.raises(InputError):
        simulate.estimate_heat_kernel(cfg, [1.0], [1.0], 0.3, endpoints=pe)
    with pytest.raises(DomainError):
        simulate.estimate_heat_kernel(cfg, [1.0], [-2.0], 0.2, endpoints=pe)


def test_occupation_flat_profile_is_exactly_one():
    cfg = simulate.SimConfig(model="neumann", dom=HL, alpha=1.2, t=1.0,
                             n_paths=200, seed=3, dt=1e-3)
    mean, ci = simulate.occupation_phi_average(
        cfg, [1.0], weights.WeightSpec("constant_one"))
    assert mean == 1.0
    assert ci == 0.0


def test_occupation_log_profile_deep_start():
    cfg = simulate.SimConfig(model="neumann", dom=HL, alpha=1.2, t=1.0,
                             n_paths=400, seed=3, dt=1e-3)
    mean, ci = simulate.occupation_phi_average(
        cfg, [5.0], weights.WeightSpec("log"), a0=1.0)
    assert 1.0 <= mean <= 1.5


def test_occupation_rejects_jump_chain():
    ks = _log_kernel_spec()
    cfg = simulate.SimConfig(model="generic_ctmc", dom=HL, alpha=1.0, t=1.0,
                             n_paths=10, seed=0, kernel=ks, eps=0.1)
    with pytest.raises(UnsupportedError):
        simulate.occupation_phi_average(cfg, [1.0],
                                        weights.WeightSpec("log"))


def test_endpoints_csv_roundtrip(tmp_path, neumann_run):
    import csv

    _, pe = neumann_run
    out = tmp_path / "endpoints.csv"
    simulate.write_endpoints_csv(out, pe)
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["path_id", "x1", "resurrections"]
    assert len(rows) == pe.points.shape[0] + 1
    assert float(rows[1][1]) == pe.points[0, 0]
    assert int(rows[1][2]) == pe.resurrections[0]
