"""End-to-end acceptance checks: interval containment across the LO sweep,
the universal inequality suite on random states, channel sanity, cross-backend
agreement, the appendix verification suite, and the entanglement demo."""

import time

import numpy as np

from verihom import verifier
from verihom.applications import duan_witness, entanglement_demo, estimate_covariance
from verihom.bounds import (
    certified_interval,
    check_theorem1,
    check_theorem2,
    check_theorem3_6,
    check_theorem4,
)
from verihom.detection import (
    HOM_THETAS,
    Backend,
    CoherentPair,
    SignalWithLO,
    expected_statistic,
    het_statistics,
    hom_statistics,
    shd_distribution,
    shed_distribution,
)
from verihom.fock import ModeSpace, PureState, coherent_state, fock_state, tensor_product
from verihom.squash import squash, squash_adjoint, squash_kraus, squashed_moments_coherent_lo


def random_sector_state(rng, n_modes, total):
    space = ModeSpace((total,) * n_modes, total_cutoff=total)
    amps = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    amps /= np.linalg.norm(amps)
    return PureState(space, amps)


# -- LO-intensity sweep with certified intervals ------------------------------

def test_sweep_certified_intervals():
    t0 = time.monotonic()
    alpha = 1.4
    sig = coherent_state(alpha).to_density()
    halfwidth_400 = None
    for mean in range(10, 401, 10):
        beta = np.sqrt(float(mean))
        stats = hom_statistics(CoherentPair(alpha, beta), Backend.POISSON_PRODUCT)
        d = stats["d_hom"]
        iv1 = certified_interval(stats["z"][0.0], d, "LH_1")
        iv2 = certified_interval(stats["z2"][0.0], d, "LH_2")
        target1, target2 = squashed_moments_coherent_lo(sig, beta, 0.0)
        assert iv1.contains(target1, tol=1e-9), mean
        assert iv2.contains(target2, tol=1e-9), mean
        if mean == 400:
            halfwidth_400 = 0.525 * d
            # the correction statistic decays like ~8.1 / |beta|^2
            assert 6.0 < d * 400.0 < 10.0
    assert halfwidth_400 < 0.015
    # the targets approach the ideal values 1.4 and 1.4^2 + 1/4
    np.testing.assert_allclose(target1, 1.4, atol=5e-3)
    np.testing.assert_allclose(target2, 2.21, atol=5e-3)
    assert time.monotonic() - t0 < 120.0


# -- universal inequality suite on random states ------------------------------

def test_universal_inequality_suite():
    t0 = time.monotonic()
    rng = np.random.default_rng(2024)
    for i in range(100):
        state = random_sector_state(rng, 2, 4)
        theta = float(rng.uniform(0.0, 2.0 * np.pi))
        for mc in check_theorem1(state, theta) + check_theorem4(state, theta):
            assert mc.slack >= -1e-9, (i, mc)
    for i in range(50):
        state = random_sector_state(rng, 4, 4)
        thetas = tuple(rng.uniform(0.0, 2.0 * np.pi, size=2))
        for kinds in (("hom", "hom"), ("het", "het"), ("hom", "het")):
            mc = check_theorem2(state, kinds, thetas)
            assert mc.slack >= -1e-9, (i, kinds, mc)
    for i in range(50):
        state = random_sector_state(rng, 3, 3)
        phi, theta = rng.uniform(0.0, 2.0 * np.pi, size=2)
        for first in ("hom", "het"):
            for second in ("shd", "shed"):
                mc = check_theorem3_6(state, (first, float(phi)), (second, float(theta)))
                assert mc.slack >= -1e-9, (i, first, second, mc)
    assert time.monotonic() - t0 < 600.0


# -- channel completeness and duality -----------------------------------------

def test_kraus_completeness_and_duality():
    space = ModeSpace((6, 6))
    ops = squash_kraus(space)
    total = sum(M.T @ M for M in ops)
    assert np.abs(total - np.eye(space.dim)).max() <= 1e-12
    rng = np.random.default_rng(7)
    cv = 12
    for _ in range(50):
        A = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
        rho = A @ A.conj().T
        rho /= np.trace(rho).real
        from verihom.fock import DensityOperator

        rho = DensityOperator(space, rho)
        X = rng.normal(size=(cv + 1, cv + 1)) + 1j * rng.normal(size=(cv + 1, cv + 1))
        X = X + X.conj().T
        lhs = np.einsum("ij,ji->", X, squash(rho).matrix)
        rhs = np.einsum("ij,ji->", squash_adjoint(X, space), rho.matrix)
        assert abs(lhs - rhs) <= 1e-11


# -- cross-backend agreement --------------------------------------------------

def _dist_dict(dist):
    return {tuple(c): p for c, p in zip(map(tuple, dist.counts.tolist()), dist.probs)}


def _max_prob_diff(d1, d2):
    keys = set(d1) | set(d2)
    return max(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in keys)


def test_cross_backend_distributions():
    rng = np.random.default_rng(21)
    beta = 3.0  # |beta|^2 = 9
    sc = 5
    amps = rng.normal(size=sc + 1) + 1j * rng.normal(size=sc + 1)
    amps /= np.linalg.norm(amps)
    sig = PureState(ModeSpace((sc,)), amps)
    # Poisson(9) mass above 34 is ~4e-11, well inside the 1e-8 budget
    lo_cut = 34
    exact_state = tensor_product(sig, coherent_state(beta, cutoff=lo_cut))
    for theta in (0.0, 0.7):
        d_exact = shd_distribution(exact_state, theta)
        d_colo = shd_distribution(SignalWithLO(sig, beta), theta, backend=Backend.COHERENT_LO)
        assert _max_prob_diff(_dist_dict(d_exact), _dist_dict(d_colo)) <= 1e-8
    d_exact = shed_distribution(exact_state)
    d_colo = shed_distribution(SignalWithLO(sig, beta), backend=Backend.COHERENT_LO)
    assert _max_prob_diff(_dist_dict(d_exact), _dist_dict(d_colo)) <= 1e-8


def test_cross_backend_poisson():
    alpha, beta = 0.9 - 0.4j, 3.0
    lo_cut = 34
    exact_state = tensor_product(coherent_state(alpha, cutoff=14), coherent_state(beta, cutoff=lo_cut))
    pair = CoherentPair(alpha, beta)
    d_exact = shd_distribution(exact_state, 0.0)
    d_pois = shd_distribution(pair, 0.0, backend=Backend.POISSON_PRODUCT)
    assert _max_prob_diff(_dist_dict(d_exact), _dist_dict(d_pois)) <= 1e-8
    s_exact = het_statistics(exact_state, Backend.EXACT_FOCK)
    s_pois = het_statistics(pair, Backend.POISSON_PRODUCT)
    for name in ("alpha_re", "alpha_im", "re2", "im2", "reim", "d_het", "g_het"):
        np.testing.assert_allclose(s_pois[name], s_exact[name], atol=1e-8)


# -- full verification suite --------------------------------------------------

def test_appendix_verification_suite():
    t0 = time.monotonic()
    reports = verifier.verify_appendix()
    failed = [r for r in reports if not r.passed]
    assert not failed, failed
    assert time.monotonic() - t0 < 300.0


# -- entanglement demo --------------------------------------------------------

def test_entanglement_demo_grid():
    out = entanglement_demo(0.5, 10.0, Backend.COHERENT_LO)
    assert out["witness"].verdict == "entangled-certified"
    # no squeezing: must stay inconclusive
    out = entanglement_demo(0.0, 10.0, Backend.COHERENT_LO)
    assert out["witness"].verdict == "inconclusive"
    # separable product states across a grid: zero false certifications
    for a1, a2 in ((0.0, 0.0), (0.5, 0.5), (0.8, -0.8), (0.0, 1.2)):
        for mean in (25.0, 100.0):
            sig = tensor_product(coherent_state(a1, cutoff=8), coherent_state(a2, cutoff=8))
            cm = estimate_covariance(sig, Backend.COHERENT_LO, lo_betas=(np.sqrt(mean), np.sqrt(mean)))
            res = duan_witness(cm)
            assert res.verdict == "inconclusive", (a1, a2, mean, res)


# -- hand-computed micro-oracles ----------------------------------------------

def test_micro_oracles():
    space = ModeSpace((2, 2))
    vac = fock_state(space, (0, 0))
    dists = {th: shd_distribution(vac, th) for th in HOM_THETAS}
    np.testing.assert_allclose(expected_statistic(dists, "d_hom"), 0.5, atol=1e-12)
    s01 = fock_state(space, (0, 1))
    dists = {th: shd_distribution(s01, th) for th in HOM_THETAS}
    np.testing.assert_allclose(expected_statistic(dists, "d_hom"), 5.0 / 8.0, atol=1e-12)
