"""The squashing map on (signal, LO) pairs, its adjoint, and ideal
detector moment operators.

The map acts within total-photon sectors: component |n, m-n><n', m-n'| of a
two-mode operator is sent to |n><n'| of a single-mode operator, summed over
the sector label m.
"""

from __future__ import annotations

import numpy as np

from .fock import (
    DensityOperator,
    ModeSpace,
    annihilation_operator,
    as_density,
    coherent_amplitudes,
    number_operator,
    poisson_bulk_range,
    quadrature_operator,
)

__all__ = [
    "squash",
    "squash_kraus",
    "squash_adjoint",
    "ideal_hom_moments",
    "quadrature_squared",
    "symmetrized_xp",
    "het_moment_operator",
    "ideal_het_moments",
    "coherent_lo_overlap_kernel",
    "squash_adjoint_coherent_lo",
    "squashed_moments_coherent_lo",
]


def _output_cutoff(space):
    if space.total_cutoff is not None:
        return space.total_cutoff
    return space.cutoffs[0] + space.cutoffs[1]


def squash(rho2):
    """Apply the squashing map to a two-mode (signal, LO) state."""
    rho2 = as_density(rho2)
    space = rho2.space
    if space.n_modes != 2:
        raise ValueError("squash expects a two-mode state")
    cv = _output_cutoff(space)
    out_space = ModeSpace((cv,))
    out = np.zeros((cv + 1, cv + 1), dtype=complex)
    basis = space.basis
    totals = basis.sum(axis=1)
    ns = basis[:, 0]
    for m in range(cv + 1):
        rows = np.where(totals == m)[0]
        n_idx = ns[rows]
        out[np.ix_(n_idx, n_idx)] += rho2.matrix[np.ix_(rows, rows)]
    return DensityOperator(out_space, out, trace_deficit=rho2.trace_deficit)


def squash_kraus(space):
    """Kraus operators M_m = sum_n |n>_v <n, m-n| on the given two-mode space."""
    cv = _output_cutoff(space)
    basis = space.basis
    totals = basis.sum(axis=1)
    ops = []
    for m in range(cv + 1):
        M = np.zeros((cv + 1, space.dim))
        rows = np.where(totals == m)[0]
        M[basis[rows, 0], rows] = 1.0
        ops.append(M)
    return ops


def squash_adjoint(X, space):
    """Adjoint map: operator on the squashed mode -> operator on (signal, LO).

    Satisfies Tr[X squash(rho)] = Tr[squash_adjoint(X) rho].
    """
    cv = _output_cutoff(space)
    X = np.asarray(X, dtype=complex)
    if X.shape[0] < cv + 1:
        raise ValueError("operator truncation too small for this input space")
    basis = space.basis
    totals = basis.sum(axis=1)
    ns = basis[:, 0]
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for m in range(cv + 1):
        rows = np.where(totals == m)[0]
        out[np.ix_(rows, rows)] = X[np.ix_(ns[rows], ns[rows])]
    return out


def quadrature_squared(theta, cutoff):
    """x(theta)^2 = (a^2 e^{-2i theta} + a^dag^2 e^{2i theta} + 2n + 1)/4,
    assembled from the closed form so the top diagonal entries are exact."""
    a = annihilation_operator(cutoff)
    a2 = np.zeros((cutoff + 1, cutoff + 1))
    n = np.arange(2, cutoff + 1)
    a2[np.arange(cutoff - 1), n] = np.sqrt(n * (n - 1.0))
    diag = np.diag(2.0 * np.arange(cutoff + 1) + 1.0)
    del a
    return (a2 * np.exp(-2j * theta) + a2.T * np.exp(2j * theta) + diag) / 4.0


def symmetrized_xp(cutoff):
    """(xp + px)/2 = i (a^dag^2 - a^2)/4."""
    a2 = np.zeros((cutoff + 1, cutoff + 1))
    n = np.arange(2, cutoff + 1)
    a2[np.arange(cutoff - 1), n] = np.sqrt(n * (n - 1.0))
    return 1j * (a2.T - a2) / 4.0


def ideal_hom_moments(rho_v, theta):
    """(first, second, cross) ideal homodyne moments of a single-mode state."""
    rho_v = as_density(rho_v)
    c = rho_v.space.cutoffs[0]
    first = np.einsum("ij,ji->", quadrature_operator(theta, c), rho_v.matrix)
    second = np.einsum("ij,ji->", quadrature_squared(theta, c), rho_v.matrix)
    cross = np.einsum("ij,ji->", symmetrized_xp(c), rho_v.matrix)
    return float(first.real), float(second.real), float(cross.real)


def het_moment_operator(kind, cutoff, theta=0.0):
    """Moment operators of the ideal heterodyne outcome distribution.

    kind: 'first' for the outcome component beta_theta, 'second' for
    beta_theta^2, 'cross' for beta_0 beta_{pi/2}, 'intensity' for |beta|^2.
    """
    if kind == "first":
        return quadrature_operator(theta, cutoff)
    if kind == "second":
        return quadrature_squared(theta, cutoff) + np.eye(cutoff + 1) / 4.0
    if kind == "cross":
        return symmetrized_xp(cutoff)
    if kind == "intensity":
        return number_operator(cutoff) + np.eye(cutoff + 1)
    raise ValueError(f"unknown heterodyne moment kind {kind!r}")


def ideal_het_moments(rho_v, theta):
    """(first, second, cross) ideal heterodyne moments of a single-mode state."""
    rho_v = as_density(rho_v)
    c = rho_v.space.cutoffs[0]
    vals = []
    for kind in ("first", "second", "cross"):
        op = het_moment_operator(kind, c, theta)
        vals.append(float(np.einsum("ij,ji->", op, rho_v.matrix).real))
    return tuple(vals)


def coherent_lo_overlap_kernel(beta, max_delta, n_sigmas=10.0):
    """g[Delta] = sum_k d_k conj(d_{k+Delta}) for the coherent LO amplitudes
    d, evaluated over the Poisson bulk.  Indexed Delta = -max_delta..max_delta."""
    mag2 = abs(beta) ** 2
    lo, hi = poisson_bulk_range(mag2, n_sigmas=n_sigmas, pad=max_delta)
    d = coherent_amplitudes(beta, hi + max_delta)
    out = np.zeros(2 * max_delta + 1, dtype=complex)
    k = np.arange(lo, hi + 1)
    for delta in range(-max_delta, max_delta + 1):
        kk = k[(k + delta >= 0)]
        out[delta + max_delta] = np.sum(d[kk] * np.conj(d[kk + delta]))
    return out


def squash_adjoint_coherent_lo(X, beta, signal_cutoff):
    """Pull an operator on the squashed mode back to the signal mode when
    the LO is the pure coherent state |beta>.

    Tr[X squash(rho_s (x) |beta><beta|)] = Tr[Xtilde rho_s] with
    Xtilde[a, b] = X[a, b] g[b - a].
    """
    X = np.asarray(X, dtype=complex)[: signal_cutoff + 1, : signal_cutoff + 1]
    g = coherent_lo_overlap_kernel(beta, signal_cutoff)
    a = np.arange(signal_cutoff + 1)
    return X * g[(a[None, :] - a[:, None]) + signal_cutoff]


def squashed_moments_coherent_lo(rho_s, beta, theta):
    """(first, second) squashed homodyne moments for signal rho_s with a
    coherent LO, without materializing the LO truncation."""
    rho_s = as_density(rho_s)
    c = rho_s.space.cutoffs[0]
    xt = squash_adjoint_coherent_lo(quadrature_operator(theta, c), beta, c)
    x2t = squash_adjoint_coherent_lo(quadrature_squared(theta, c), beta, c)
    first = float(np.einsum("ij,ji->", xt, rho_s.matrix).real)
    second = float(np.einsum("ij,ji->", x2t, rho_s.matrix).real)
    return first, second
