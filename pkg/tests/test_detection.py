import numpy as np
import pytest

from verihom.detection import (
    HOM_THETAS,
    Backend,
    CoherentPair,
    InvalidInputError,
    alpha_theta_moment,
    expected_statistic,
    f_het,
    f_hom,
    g_het,
    g_hom,
    het_statistics,
    hom_statistics,
    pair_statistics,
    rotate_lo_phase,
    sample_counts,
    shd_distribution,
    shed_distribution,
    statistic_operators,
    z_value,
)
from verihom.fock import ModeSpace, PureState, coherent_state, fock_state, tensor_product


def test_functional_spot_values():
    # hand-evaluated values of the correction functionals
    np.testing.assert_allclose(z_value((0, 1, 0)), 1.0 / np.sqrt(2.0 * 2.0))
    np.testing.assert_allclose(f_hom(0, 0, 0), 0.5)
    np.testing.assert_allclose(f_hom(1, 0, 0), 0.75 + 7.0 / 6.0 + 0.5 + 1.0 / 12.0)
    np.testing.assert_allclose(f_hom(1, 0, 2), 1.0 / (6.0 * 3.0 * 4.0))
    np.testing.assert_allclose(g_hom(0, 0, 0), 0.5)
    np.testing.assert_allclose(g_hom(1, 0, 0), 0.5 * 2.0 + 0.5)
    np.testing.assert_allclose(g_hom(2, 1, 1), 1.0 / (2.0 * 2.0))
    np.testing.assert_allclose(f_het(0, 0, 0, 0, 0), 2.0)
    np.testing.assert_allclose(g_het(1, 0, 1, 0, 0), 1.0 + (1.0 + 1.0) / 1.0)
    np.testing.assert_allclose(f_het(1, 0, 0, 0, 1), 1.0 / (2.0 * 3.0))


def test_distributions_normalized():
    sp = ModeSpace((2, 3))
    st = fock_state(sp, (1, 2))
    d = shd_distribution(st, 0.3)
    assert d.probs.min() >= -1e-14
    np.testing.assert_allclose(d.probs.sum(), 1.0, atol=1e-12)
    d = shed_distribution(st)
    np.testing.assert_allclose(d.probs.sum(), 1.0, atol=1e-12)


def test_micro_oracle_d_hom():
    sp = ModeSpace((2, 2))
    vac = fock_state(sp, (0, 0))
    dists = {th: shd_distribution(vac, th) for th in HOM_THETAS}
    np.testing.assert_allclose(expected_statistic(dists, "d_hom"), 0.5, atol=1e-12)
    s01 = fock_state(sp, (0, 1))
    dists = {th: shd_distribution(s01, th) for th in HOM_THETAS}
    np.testing.assert_allclose(expected_statistic(dists, "d_hom"), 0.625, atol=1e-12)


def test_statistic_operators_match_distribution():
    # O = A^dag diag(w) A reproduces the distribution expectations
    rng = np.random.default_rng(5)
    sp = ModeSpace((3, 3))
    amps = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
    amps /= np.linalg.norm(amps)
    st = PureState(sp, amps)
    rho = st.to_density().matrix
    ops = statistic_operators("shd", sp)
    dist = shd_distribution(st, 0.0)
    for name in ("z", "z2", "f4", "g"):
        direct = expected_statistic(dist, name)
        via_op = np.einsum("ij,ji->", ops[name], rho).real
        np.testing.assert_allclose(via_op, direct, atol=1e-11)


def test_rotate_lo_phase_matches_theta_setting():
    rng = np.random.default_rng(6)
    sp = ModeSpace((3, 3))
    amps = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
    amps /= np.linalg.norm(amps)
    st = PureState(sp, amps)
    theta = 0.9
    ops = statistic_operators("shd", sp)
    dist = shd_distribution(st, theta)
    rho = st.to_density().matrix
    for name in ("z", "z2"):
        rotated = rotate_lo_phase(ops[name], sp, theta)
        np.testing.assert_allclose(
            np.einsum("ij,ji->", rotated, rho).real,
            expected_statistic(dist, name),
            atol=1e-11,
        )


def test_het_statistics_coherent():
    # bright LO: <alpha_theta> approaches the signal quadrature
    alpha = 0.9 + 0.4j
    stats = het_statistics(CoherentPair(alpha, 15.0), Backend.COHERENT_LO)
    np.testing.assert_allclose(stats["alpha_re"], alpha.real, atol=5e-3)
    np.testing.assert_allclose(stats["alpha_im"], alpha.imag, atol=5e-3)
    second = alpha_theta_moment(stats, 0.0, order=2)
    np.testing.assert_allclose(second, alpha.real ** 2 + 0.5, atol=2e-2)


def test_sampling_deterministic_and_consistent():
    dist = shd_distribution(CoherentPair(0.5, 3.0), backend=Backend.POISSON_PRODUCT)
    a = sample_counts(dist, seed=11, shots=200)
    b = sample_counts(dist, seed=11, shots=200)
    assert a == b
    # empirical z with many shots is near the exact mean
    big = sample_counts(dist, seed=1, shots=40000)
    zs = [z_value(c) for c in big]
    np.testing.assert_allclose(np.mean(zs), expected_statistic(dist, "z"), atol=0.02)


def test_backend_input_validation():
    sp = ModeSpace((2, 2))
    st = fock_state(sp, (0, 0))
    with pytest.raises(InvalidInputError):
        hom_statistics(st, Backend.POISSON_PRODUCT)
    with pytest.raises(InvalidInputError):
        het_statistics(st, Backend.COHERENT_LO)


def test_pair_statistics_product_state_factorizes():
    # product input: correlation equals the product of the means
    a = coherent_state(0.5, cutoff=3)
    b = coherent_state(-0.4, cutoff=3)
    lo = coherent_state(1.5, cutoff=15)
    # renormalize so truncation tails do not spoil exact factorization
    for st in (a, b, lo):
        st.amplitudes /= np.linalg.norm(st.amplitudes)
    pair1 = tensor_product(a, lo)
    pair2 = tensor_product(b, lo)
    state = tensor_product(pair1, pair2)
    out = pair_statistics(state, ("hom", "hom"), (0.0, 0.0))
    np.testing.assert_allclose(out["corr"], out["mean_k"] * out["mean_l"], atol=1e-10)
