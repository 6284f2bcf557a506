import numpy as np
import pytest

from verihom.detection import (
    Backend,
    CoherentPair,
    SignalWithLO,
    het_statistics,
    hom_statistics,
    pair_statistics,
)
from verihom.fock import ModeSpace, PureState, coherent_state, tensor_product

TOL = 1e-8


def random_signal(rng, cutoff):
    amps = rng.normal(size=cutoff + 1) + 1j * rng.normal(size=cutoff + 1)
    amps /= np.linalg.norm(amps)
    return PureState(ModeSpace((cutoff,)), amps)


def lo_cutoff_for(beta):
    return int(np.ceil(abs(beta) ** 2 + 12.0 * np.sqrt(abs(beta) ** 2 + 1.0)))


def test_hom_exact_vs_coherent_lo():
    rng = np.random.default_rng(10)
    beta = 2.0
    sig = random_signal(rng, 4)
    exact_state = tensor_product(sig, coherent_state(beta, cutoff=lo_cutoff_for(beta)))
    s_exact = hom_statistics(exact_state, Backend.EXACT_FOCK, thetas=(0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4))
    s_colo = hom_statistics(SignalWithLO(sig, beta), Backend.COHERENT_LO)
    for name in ("z", "z2", "f4", "g"):
        for th in s_exact[name]:
            np.testing.assert_allclose(s_colo[name][th], s_exact[name][th], atol=TOL)
    np.testing.assert_allclose(s_colo["d_hom"], s_exact["d_hom"], atol=TOL)


def test_het_exact_vs_coherent_lo():
    rng = np.random.default_rng(11)
    beta = 1.8
    sig = random_signal(rng, 4)
    exact_state = tensor_product(sig, coherent_state(beta, cutoff=lo_cutoff_for(beta)))
    s_exact = het_statistics(exact_state, Backend.EXACT_FOCK)
    s_colo = het_statistics(SignalWithLO(sig, beta), Backend.COHERENT_LO)
    for name in ("alpha_re", "alpha_im", "re2", "im2", "reim", "d_het", "g_het"):
        np.testing.assert_allclose(s_colo[name], s_exact[name], atol=TOL)


def test_hom_exact_vs_poisson_product():
    alpha, beta = 0.8 + 0.3j, 2.2
    pair = CoherentPair(alpha, beta)
    exact_state = tensor_product(
        coherent_state(alpha, cutoff=14), coherent_state(beta, cutoff=lo_cutoff_for(beta))
    )
    s_exact = hom_statistics(exact_state, Backend.EXACT_FOCK)
    s_pois = hom_statistics(pair, Backend.POISSON_PRODUCT)
    for name in ("z", "z2", "f4", "g"):
        for th in s_pois[name]:
            np.testing.assert_allclose(s_pois[name][th], s_exact[name][th], atol=TOL)


def test_het_exact_vs_poisson_product():
    alpha, beta = 0.6, 1.9
    pair = CoherentPair(alpha, beta)
    exact_state = tensor_product(
        coherent_state(alpha, cutoff=12), coherent_state(beta, cutoff=lo_cutoff_for(beta))
    )
    s_exact = het_statistics(exact_state, Backend.EXACT_FOCK)
    s_pois = het_statistics(pair, Backend.POISSON_PRODUCT)
    for name in ("alpha_re", "alpha_im", "re2", "im2", "reim", "d_het", "g_het"):
        np.testing.assert_allclose(s_pois[name], s_exact[name], atol=TOL)


def test_pair_statistics_cross_backend():
    rng = np.random.default_rng(12)
    beta = 1.0
    sp = ModeSpace((2, 2))
    amps = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
    amps /= np.linalg.norm(amps)
    sig2 = PureState(sp, amps)
    lo = coherent_state(beta, cutoff=14)
    # interleave to (s1, r1, s2, r2)
    from verihom.applications import _interleave_pairs

    state4 = _interleave_pairs(sig2, lo)
    for kinds in (("hom", "hom"), ("het", "het"), ("hom", "het")):
        exact = pair_statistics(state4, kinds, (0.3, 1.1), Backend.EXACT_FOCK)
        colo = pair_statistics(sig2, kinds, (0.3, 1.1), Backend.COHERENT_LO, lo_betas=(beta, beta))
        for key in ("corr", "mean_k", "mean_l", "d"):
            np.testing.assert_allclose(colo[key], exact[key], atol=TOL)
