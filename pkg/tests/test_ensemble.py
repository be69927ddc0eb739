import numpy as np
import pytest
from scipy import integrate, stats

from nibm.ensemble import (brute_force_marginal, bridge_density, ensemble_spec, gaussian_cross_moment, gram_matrix,
                           kernel_trace, l1_distance, reproducing_error, sample_paths)
from nibm.errors import IllConditioned, NonIntegerCounts, RejectionBudgetExhausted
from nibm.graph import ProblemConfig, TransitionMatrix


@pytest.fixture(scope="module")
def pq2_n3(two_by_two):
    cfg, m = two_by_two
    return gram_matrix(ensemble_spec(cfg, m, 3))


@pytest.mark.parametrize("k,l,mom", [(0, 0, 0), (0, 1, 1), (1, 1, 2), (1, 0, 3)])
def test_cross_moments(two_by_two, k, l, mom):
    cfg, m = two_by_two
    spec = ensemble_spec(cfg, m, 3)
    s2 = spec.sigma2
    a, b, t = cfg.a[k], cfg.b[l], cfg.t

    def f(x):
        return x ** mom * np.exp(-(x - a) ** 2 / (2 * t * s2) - (x - b) ** 2 / (2 * (1 - t) * s2))

    ref, _ = integrate.quad(f, -4, 4, points=[(1 - t) * a + t * b], epsabs=1e-30, epsrel=1e-13, limit=200)
    assert gaussian_cross_moment(spec, k, l, mom) == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_n1_kernel_is_bridge_density(semicircle):
    cfg, m = semicircle
    ke = gram_matrix(ensemble_spec(cfg, m, 1))
    x = np.linspace(-3, 3, 41)
    assert np.max(np.abs(ke.kxx(x) - bridge_density(cfg, x))) < 1e-12


def test_traces(semicircle):
    cfg, m = semicircle
    for n in (2, 5):
        assert kernel_trace(gram_matrix(ensemble_spec(cfg, m, n))) == pytest.approx(n, abs=1e-8)


def test_bases_agree(pq2_n3, two_by_two):
    cfg, m = two_by_two
    mono = gram_matrix(ensemble_spec(cfg, m, 3), basis="monomial")
    x = np.array([-1.0, -0.1, 0.05, 0.9, 1.2])
    Kh = pq2_n3.kernel(x[:, None], x[None, :])
    Km = mono.kernel(x[:, None], x[None, :])
    # off-diagonal entries are huge, so compare relatively
    assert np.max(np.abs(Kh - Km) / np.maximum(1, np.abs(Kh))) < 1e-10


def test_biorthogonality(pq2_n3):
    assert pq2_n3.biorthogonality_error() < 1e-20


def test_reproducing(semicircle):
    cfg, m = semicircle
    ke = gram_matrix(ensemble_spec(cfg, m, 3))
    assert reproducing_error(ke, np.array([-0.8, 0.0, 0.3, 1.1])) < 1e-10


def test_brute_force_n2_two_point(semicircle):
    cfg, m = semicircle
    spec = ensemble_spec(cfg, m, 2)
    ke = gram_matrix(spec)
    two = brute_force_marginal(spec, m=2)
    pts = np.array([[-0.5, 0.4], [0.1, 0.9], [0.3, 0.3]])
    x, y = pts[:, 0], pts[:, 1]
    det = ke.kernel(x, x) * ke.kernel(y, y) - ke.kernel(x, y) * ke.kernel(y, x)
    # rho_2 = n (n - 1) times the two-point marginal
    assert np.allclose(2 * two(pts), det, atol=1e-10)
    assert two(pts)[2] == pytest.approx(0.0, abs=1e-14)


def test_counts_errors(two_by_two):
    cfg, m = two_by_two
    with pytest.raises(NonIntegerCounts):
        ensemble_spec(cfg, m, 4)
    assert ensemble_spec(cfg, m, 4, "largest-remainder").n == 4


def test_ill_conditioned(two_by_two):
    cfg, m = two_by_two
    with pytest.raises(IllConditioned):
        gram_matrix(ensemble_spec(cfg, m, 12), dps=20, max_dps=20)


def test_l1_distance_to_itself(semicircle):
    cfg, m = semicircle
    ke = gram_matrix(ensemble_spec(cfg, m, 1))
    assert l1_distance(ke, lambda x: bridge_density(cfg, x)) < 1e-12


# -- sampler -------------------------------------------------------------------

def test_single_path_distribution(semicircle):
    cfg, m = semicircle
    pb = sample_paths(ensemble_spec(cfg, m, 1), n_bundles=2000, steps=64, seed=3)
    sd = np.sqrt(cfg.T * cfg.t * (1 - cfg.t))
    assert pb.rejected == 0
    assert stats.kstest(pb.slices[:, 0], "norm", args=(0.0, sd)).pvalue > 1e-3


def test_dyson_proposal_never_rejects_one_group(semicircle):
    cfg, m = semicircle
    pb = sample_paths(ensemble_spec(cfg, m, 2), n_bundles=500, steps=64, seed=1)
    assert pb.acceptance == 1.0
    assert np.all(pb.slices[:, 0] > pb.slices[:, 1])


def test_sampler_reproducible(two_by_two):
    cfg, m = two_by_two
    spec = ensemble_spec(cfg, m, 3)
    a = sample_paths(spec, n_bundles=50, steps=32, seed=11)
    b = sample_paths(spec, n_bundles=50, steps=32, seed=11)
    c = sample_paths(spec, n_bundles=50, steps=32, seed=12)
    assert a.slices.tobytes() == b.slices.tobytes() and a.paths.tobytes() == b.paths.tobytes()
    assert (a.accepted, a.rejected) == (b.accepted, b.rejected)
    assert a.slices.tobytes() != c.slices.tobytes()
    assert a.paths.shape[1:] == (3, 33)
    # endpoints are pinned
    assert np.allclose(a.paths[:, :, 0], [1, -1, -1]) and np.allclose(a.paths[:, :, -1], [1, 1, -1])


def test_sampler_matches_kernel(semicircle):
    cfg, m = semicircle
    spec = ensemble_spec(cfg, m, 2)
    pb = sample_paths(spec, n_bundles=3000, steps=128, seed=7)
    # one uniformly chosen path per bundle has density K(x, x) / n
    pick = np.random.default_rng(0).integers(0, 2, pb.accepted)
    xs = pb.slices[np.arange(pb.accepted), pick]
    ke = gram_matrix(spec)
    grid = np.linspace(-4, 4, 2001)
    cdf = np.concatenate([[0], np.cumsum(0.5 * (ke.kxx(grid[1:]) + ke.kxx(grid[:-1])) * np.diff(grid))]) / 2
    assert cdf[-1] == pytest.approx(1, abs=1e-6)
    assert stats.kstest(xs, lambda x: np.interp(x, grid, cdf)).pvalue > 1e-3


def test_rejection_budget(two_by_two):
    cfg, m = two_by_two
    with pytest.raises(RejectionBudgetExhausted):
        sample_paths(ensemble_spec(cfg, m, 6), n_bundles=10, steps=32, max_rejects=0)


def test_sampler_size_cap():
    cfg = ProblemConfig((0.0,), (0.0,), 0.5, 1.0)
    with pytest.raises(ValueError):
        sample_paths(ensemble_spec(cfg, TransitionMatrix([["1"]]), 11))
