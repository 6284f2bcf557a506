import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from verihom.fock import (
    MIXER,
    ModeSpace,
    PureState,
    TruncationOverflowError,
    annihilation_operator,
    apply_beamsplitter,
    apply_phase_shift,
    beamsplitter_sector_unitary,
    coherent_state,
    displaced_fock_overlap,
    expectation,
    fock_state,
    number_operator,
    partial_trace,
    quadrature_operator,
    tensor_product,
    tmsv_state,
)


def test_coherent_state_moments():
    alpha = 0.7 - 0.3j
    st_ = coherent_state(alpha)
    c = st_.space.cutoffs[0]
    np.testing.assert_allclose(st_.norm_sq(), 1.0, atol=1e-12)
    n_mean = expectation(st_, number_operator(c)).real
    np.testing.assert_allclose(n_mean, abs(alpha) ** 2, atol=1e-12)
    # <alpha|gamma> = exp(-|a|^2/2 - |g|^2/2 + conj(a) g)
    gamma = -0.2 + 0.5j
    other = coherent_state(gamma, cutoff=c)
    overlap = np.vdot(coherent_state(alpha, cutoff=c).amplitudes, other.amplitudes)
    expected = np.exp(-abs(alpha) ** 2 / 2 - abs(gamma) ** 2 / 2 + np.conj(alpha) * gamma)
    np.testing.assert_allclose(overlap, expected, atol=1e-12)


def test_vacuum_quadrature_variance():
    # convention check: vacuum variance of every x(theta) is 1/4
    sp = ModeSpace((6,))
    vac = fock_state(sp, (0,))
    for theta in (0.0, 0.3, np.pi / 2):
        x = quadrature_operator(theta, 6)
        np.testing.assert_allclose(expectation(vac, x).real, 0.0, atol=1e-14)
        np.testing.assert_allclose(expectation(vac, x @ x).real, 0.25, atol=1e-14)


def test_quadrature_commutator():
    # [x, p] = i/2 away from the truncation edge
    c = 10
    x = quadrature_operator(0.0, c)
    p = quadrature_operator(np.pi / 2, c)
    comm = x @ p - p @ x
    np.testing.assert_allclose(comm[:c, :c], 1j / 2 * np.eye(c + 1)[:c, :c], atol=1e-12)


def test_phase_shift_on_coherent():
    alpha, theta = 0.9, 0.8
    st_ = coherent_state(alpha, cutoff=25)
    sp2 = ModeSpace((25,))
    shifted = apply_phase_shift(PureState(sp2, st_.amplitudes), 0, theta)
    target = coherent_state(alpha * np.exp(1j * theta), cutoff=25)
    np.testing.assert_allclose(shifted.amplitudes, target.amplitudes, atol=1e-12)


def test_beamsplitter_on_coherent_pair():
    # gamma_out = U gamma_in on coherent amplitudes
    a, b = 0.6, -0.4 + 0.2j
    cut = 18
    joint = tensor_product(coherent_state(a, cut), coherent_state(b, cut))
    out = apply_beamsplitter(joint, 0, 1, MIXER, on_overflow="record")
    ga, gb = MIXER @ np.array([a, b])
    target = tensor_product(coherent_state(ga, cut), coherent_state(gb, cut))
    fid = abs(np.vdot(target.amplitudes, out.amplitudes))
    np.testing.assert_allclose(fid, 1.0, atol=1e-9)


def test_beamsplitter_overflow_raises():
    sp = ModeSpace((1, 1))
    st_ = fock_state(sp, (1, 1))
    with pytest.raises(TruncationOverflowError):
        apply_beamsplitter(st_, 0, 1, MIXER)


@given(st.integers(min_value=1, max_value=6))
@settings(deadline=None, max_examples=10)
def test_sector_unitary_is_unitary(t):
    M = beamsplitter_sector_unitary(MIXER, t)
    np.testing.assert_allclose(M @ M.conj().T, np.eye(t + 1), atol=1e-12)


def test_sector_unitary_matches_generator():
    # compare with exp(i H) built from the bosonic representation on the
    # two-mode truncated space
    from scipy.linalg import logm

    U = MIXER
    t = 4
    a0 = np.kron(annihilation_operator(t), np.eye(t + 1))
    a1 = np.kron(np.eye(t + 1), annihilation_operator(t))
    # logm of the 2x2 gives the quadratic generator
    K = logm(U)
    G = K[0, 0] * a0.conj().T @ a0 + K[0, 1] * a0.conj().T @ a1 + K[1, 0] * a1.conj().T @ a0 + K[1, 1] * a1.conj().T @ a1
    big = expm(G)
    # restrict to the t-photon sector, basis |k, t-k>
    dim1 = t + 1
    idx = [k * dim1 + (t - k) for k in range(t + 1)]
    M_ref = big[np.ix_(idx, idx)]
    M = beamsplitter_sector_unitary(U, t)
    np.testing.assert_allclose(M, M_ref, atol=1e-10)


def test_partial_trace_and_tmsv():
    r = 0.6
    cut = 20
    st_ = tmsv_state(r, cut)
    rho1 = partial_trace(st_, (0,))
    # reduced state is thermal with mean sinh(r)^2
    n_mean = float(np.trace(rho1.matrix @ number_operator(cut)).real)
    np.testing.assert_allclose(n_mean, np.sinh(r) ** 2, atol=1e-9)
    probs = np.diag(rho1.matrix).real
    nbar = np.sinh(r) ** 2
    target = (nbar / (1 + nbar)) ** np.arange(cut + 1) / (1 + nbar)
    np.testing.assert_allclose(probs, target, atol=1e-9)


def test_partial_trace_of_product():
    a = coherent_state(0.5, cutoff=6)
    b = coherent_state(-0.3, cutoff=6)
    joint = tensor_product(a, b)
    red = partial_trace(joint, (1,))
    np.testing.assert_allclose(red.matrix, b.to_density().matrix, atol=1e-12)


def test_displaced_fock_overlap():
    gamma = 0.8 - 0.5j
    cut = 30
    a = annihilation_operator(cut)
    D = expm(gamma * a.conj().T - np.conj(gamma) * a)
    for m in (0, 1, 3):
        for k in (0, 2, 4):
            np.testing.assert_allclose(displaced_fock_overlap(m, gamma, k), D[m, k], atol=1e-10)
