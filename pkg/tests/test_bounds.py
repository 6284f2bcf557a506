import numpy as np
from hypothesis import given, settings, strategies as st

from verihom.bounds import (
    BOUND_CONSTANTS,
    certified_interval,
    check_theorem1,
    check_theorem2,
    check_theorem3_6,
    check_theorem4,
)
from verihom.detection import Backend, CoherentPair, SignalWithLO
from verihom.fock import ModeSpace, PureState, coherent_state, fock_state
from verihom.squash import squashed_moments_coherent_lo


def rand_state(seed, n_modes, total):
    rng = np.random.default_rng(seed)
    sp = ModeSpace((total,) * n_modes, total_cutoff=total)
    amps = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
    amps /= np.linalg.norm(amps)
    return PureState(sp, amps), rng


def test_bound_constants_table():
    # every entry is a (lower, upper) pair of positive coefficients
    for key, (lo, hi) in BOUND_CONSTANTS.items():
        assert lo > 0 and hi > 0
        assert hi >= lo
    assert BOUND_CONSTANTS["LH_2"] == (0.162, 1.085)
    assert BOUND_CONSTANTS["LE_2"] == (0.084, 1.0)


def test_vacuum_comparisons_satisfied():
    vac = fock_state(ModeSpace((2, 2)), (0, 0))
    for mc in check_theorem1(vac) + check_theorem4(vac):
        assert mc.verdict == "satisfied"
        assert mc.slack >= -1e-9


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(deadline=None, max_examples=15)
def test_theorem1_and_4_random_states(seed):
    state, rng = rand_state(seed, 2, 3)
    theta = float(rng.uniform(0.0, 2.0 * np.pi))
    for mc in check_theorem1(state, theta) + check_theorem4(state, theta):
        assert mc.slack >= -1e-9, (seed, mc)


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(deadline=None, max_examples=8)
def test_theorem2_random_states(seed):
    state, rng = rand_state(seed, 4, 3)
    thetas = tuple(rng.uniform(0.0, 2.0 * np.pi, size=2))
    for kinds in (("hom", "hom"), ("het", "het"), ("hom", "het")):
        mc = check_theorem2(state, kinds, thetas)
        assert mc.slack >= -1e-9, (seed, kinds, mc)


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(deadline=None, max_examples=8)
def test_theorem3_6_random_states(seed):
    state, rng = rand_state(seed, 3, 3)
    phi, theta = rng.uniform(0.0, 2.0 * np.pi, size=2)
    for first in ("hom", "het"):
        for second in ("shd", "shed"):
            mc = check_theorem3_6(state, (first, float(phi)), (second, float(theta)))
            assert mc.slack >= -1e-9, (seed, first, second, mc)


def test_coherent_lo_backend_checks():
    rng = np.random.default_rng(3)
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    sig = PureState(ModeSpace((3,)), amps)
    state = SignalWithLO(sig, 2.5)
    for mc in check_theorem1(state, 0.4, Backend.COHERENT_LO):
        assert mc.slack >= -1e-9
    for mc in check_theorem4(state, 0.4, Backend.COHERENT_LO):
        assert mc.slack >= -1e-9


def test_certified_interval_asymmetric():
    iv = certified_interval(1.0, 0.1, "LH_2")
    np.testing.assert_allclose(iv.lower, 1.0 - 0.162 * 0.1)
    np.testing.assert_allclose(iv.upper, 1.0 + 1.085 * 0.1)
    assert iv.contains(1.0)
    assert not iv.contains(2.0)


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(deadline=None, max_examples=15)
def test_interval_coverage_property(seed):
    # the certified interval built from measured statistics always contains
    # the squashed ideal moment
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    sig = PureState(ModeSpace((3,)), amps)
    beta = float(rng.uniform(1.0, 4.0))
    state = SignalWithLO(sig, beta)
    from verihom.detection import hom_statistics

    stats = hom_statistics(state, Backend.COHERENT_LO)
    ideal1, ideal2 = squashed_moments_coherent_lo(sig.to_density(), beta, 0.0)
    iv1 = certified_interval(stats["z"][0.0], stats["d_hom"], "LH_1")
    iv2 = certified_interval(stats["z2"][0.0], stats["d_hom"], "LH_2")
    assert iv1.contains(ideal1, tol=1e-9)
    assert iv2.contains(ideal2, tol=1e-9)


def test_poisson_backend_theorem1():
    pair = CoherentPair(1.4, 5.0)
    sq1, sq2 = squashed_moments_coherent_lo(coherent_state(1.4).to_density(), 5.0, 0.0)
    from verihom.detection import hom_statistics

    stats = hom_statistics(pair, Backend.POISSON_PRODUCT)
    iv1 = certified_interval(stats["z"][0.0], stats["d_hom"], "LH_1")
    iv2 = certified_interval(stats["z2"][0.0], stats["d_hom"], "LH_2")
    assert iv1.contains(sq1, tol=1e-9)
    assert iv2.contains(sq2, tol=1e-9)
