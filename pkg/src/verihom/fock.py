"""Truncated Fock-space states and passive linear optics.

Conventions used throughout the package:

* quadratures x(theta) = (a e^{-i theta} + a^dag e^{i theta}) / 2, so
  [x, p] = i/2 and the vacuum variance of every x(theta) is 1/4;
* a phase shift by theta multiplies the amplitude of |n> by e^{i theta n},
  i.e. coherent states transform as |alpha> -> |e^{i theta} alpha>;
* a beamsplitter is specified by a 2x2 unitary U acting on coherent
  amplitudes, gamma_out = U gamma_in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ModeSpace",
    "SectorBasis",
    "PureState",
    "DensityOperator",
    "TruncationOverflowError",
    "fock_state",
    "coherent_amplitudes",
    "coherent_state",
    "tmsv_state",
    "tensor_product",
    "partial_trace",
    "expectation",
    "embed_operator",
    "number_operator",
    "quadrature_operator",
    "annihilation_operator",
    "apply_phase_shift",
    "apply_beamsplitter",
    "beamsplitter_sector_unitary",
    "displaced_fock_overlap",
    "default_coherent_cutoff",
    "poisson_bulk_range",
    "MIXER",
    "SPLITTER",
]

# 50-50 beamsplitter conventions.  MIXER sends (s, r) to ((s+r)/sqrt2,
# (-s+r)/sqrt2); SPLITTER sends (r, a) to ((r-a)/sqrt2, (r+a)/sqrt2).
MIXER = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)
SPLITTER = np.array([[1.0, -1.0], [1.0, 1.0]]) / np.sqrt(2.0)
# Balanced coupler used inside the four-detector circuit:
# (s, c) -> ((s+c)/sqrt2, (s-c)/sqrt2).
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


class TruncationOverflowError(RuntimeError):
    """An operation would push probability amplitude past a mode cutoff."""

    def __init__(self, message, deficit=None):
        super().__init__(message)
        self.deficit = deficit


def _enumerate_basis(cutoffs, total_cutoff):
    """All occupation tuples within the cutoffs, lexicographic order."""
    occs = []
    for occ in _iproduct(*(range(c + 1) for c in cutoffs)):
        if total_cutoff is not None and sum(occ) > total_cutoff:
            continue
        occs.append(occ)
    return np.array(occs, dtype=np.int64).reshape(len(occs), len(cutoffs))


@dataclass(frozen=True)
class ModeSpace:
    """Product of truncated single-mode Fock spaces, optionally capped in
    total photon number."""

    cutoffs: tuple
    total_cutoff: int | None = None
    _basis: np.ndarray = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(int(c) for c in self.cutoffs))
        basis = _enumerate_basis(self.cutoffs, self.total_cutoff)
        object.__setattr__(self, "_basis", basis)
        index = {tuple(row): i for i, row in enumerate(basis.tolist())}
        object.__setattr__(self, "_index", index)

    @property
    def n_modes(self):
        return len(self.cutoffs)

    @property
    def dim(self):
        return self._basis.shape[0]

    @property
    def basis(self):
        return self._basis

    def index(self, occ):
        return self._index[tuple(int(n) for n in occ)]

    def totals(self):
        return self._basis.sum(axis=1)


@dataclass(frozen=True)
class SectorBasis:
    """Occupation tuples of ``n_modes`` modes with exactly ``total`` photons,
    lexicographic order."""

    n_modes: int
    total: int

    @property
    def occupations(self):
        return _sector_occupations(self.n_modes, self.total)

    @property
    def dim(self):
        return self.occupations.shape[0]

    def index(self, occ):
        return _sector_index_map(self.n_modes, self.total)[tuple(int(n) for n in occ)]


@lru_cache(maxsize=None)
def _sector_occupations(n_modes, total):
    occs = []

    def rec(prefix, remaining, modes_left):
        if modes_left == 1:
            occs.append(prefix + (remaining,))
            return
        for k in range(remaining + 1):
            rec(prefix + (k,), remaining - k, modes_left - 1)

    rec((), total, n_modes)
    arr = np.array(occs, dtype=np.int64)
    order = np.lexsort(arr.T[::-1])
    return arr[order]


@lru_cache(maxsize=None)
def _sector_index_map(n_modes, total):
    occ = _sector_occupations(n_modes, total)
    return {tuple(row): i for i, row in enumerate(occ.tolist())}


@dataclass
class PureState:
    space: ModeSpace
    amplitudes: np.ndarray
    norm_deficit: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.space.dim,):
            raise ValueError("amplitude vector does not match space dimension")

    def norm_sq(self):
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_density(self):
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityOperator(self.space, rho, trace_deficit=self.norm_deficit)


@dataclass
class DensityOperator:
    space: ModeSpace
    matrix: np.ndarray
    trace_deficit: float = 0.0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.space.dim
        if self.matrix.shape != (d, d):
            raise ValueError("matrix does not match space dimension")

    def trace(self):
        return float(np.trace(self.matrix).real)


def as_density(state):
    if isinstance(state, PureState):
        return state.to_density()
    return state


def fock_state(space, occ):
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.index(occ)] = 1.0
    return PureState(space, amps)


def coherent_amplitudes(alpha, cutoff):
    """Amplitudes <n|alpha> for n = 0..cutoff, stable for large |alpha|^2."""
    n = np.arange(cutoff + 1)
    mag2 = abs(alpha) ** 2
    if mag2 == 0.0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * mag2 + 0.5 * n * np.log(mag2) - 0.5 * gammaln(n + 1.0)
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(log_mag) * phase


def default_coherent_cutoff(alpha):
    mag2 = abs(alpha) ** 2
    return int(np.ceil(mag2 + 10.0 * np.sqrt(mag2 + 1.0)))


def poisson_bulk_range(mean, n_sigmas=10.0, pad=0):
    """Integer range [lo, hi] covering mean +- n_sigmas * sqrt(mean)."""
    lo = int(max(0, np.floor(mean - n_sigmas * np.sqrt(mean + 1.0)))) - pad
    hi = int(np.ceil(mean + n_sigmas * np.sqrt(mean + 1.0))) + pad
    return max(lo, 0), hi


def coherent_state(alpha, cutoff=None):
    if cutoff is None:
        cutoff = default_coherent_cutoff(alpha)
    space = ModeSpace((cutoff,))
    amps = coherent_amplitudes(alpha, cutoff)
    deficit = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    return PureState(space, amps, norm_deficit=deficit)


def tmsv_state(r, cutoff):
    """Two-mode squeezed vacuum, amplitudes tanh^n(r)/cosh(r) on |n, n>."""
    space = ModeSpace((cutoff, cutoff))
    amps = np.zeros(space.dim, dtype=complex)
    lam = np.tanh(r)
    for n in range(cutoff + 1):
        amps[space.index((n, n))] = lam**n / np.cosh(r)
    deficit = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    return PureState(space, amps, norm_deficit=deficit)


def tensor_product(a, b, total_cutoff=None):
    """Tensor product of two states (both pure or both density operators)."""
    space = ModeSpace(a.space.cutoffs + b.space.cutoffs, total_cutoff)
    na, nb = a.space.n_modes, b.space.n_modes
    ia = np.array([a.space.index(occ[:na]) for occ in space.basis])
    ib = np.array([b.space.index(occ[na : na + nb]) for occ in space.basis])
    if isinstance(a, PureState) and isinstance(b, PureState):
        amps = a.amplitudes[ia] * b.amplitudes[ib]
        kept = float(np.vdot(amps, amps).real)
        return PureState(space, amps, norm_deficit=max(a.norm_deficit + b.norm_deficit, 1.0 - kept))
    ra, rb = as_density(a), as_density(b)
    mat = ra.matrix[np.ix_(ia, ia)] * rb.matrix[np.ix_(ib, ib)]
    kept = float(np.trace(mat).real)
    return DensityOperator(space, mat, trace_deficit=max(ra.trace_deficit + rb.trace_deficit, 1.0 - kept))


def partial_trace(rho, keep):
    """Trace out all modes not listed in ``keep`` (order preserved)."""
    rho = as_density(rho)
    keep = tuple(keep)
    drop = tuple(i for i in range(rho.space.n_modes) if i not in keep)
    sub = ModeSpace(
        tuple(rho.space.cutoffs[i] for i in keep),
        rho.space.total_cutoff,
    )
    kept_occ = rho.space.basis[:, keep]
    drop_occ = rho.space.basis[:, drop] if drop else np.zeros((rho.space.dim, 0), dtype=np.int64)
    kept_idx = np.array([sub.index(occ) for occ in kept_occ])
    # group rows by dropped occupation, accumulate diagonal blocks
    out = np.zeros((sub.dim, sub.dim), dtype=complex)
    drop_keys = {}
    for i, occ in enumerate(map(tuple, drop_occ.tolist())):
        drop_keys.setdefault(occ, []).append(i)
    for rows in drop_keys.values():
        rows = np.array(rows)
        block = rho.matrix[np.ix_(rows, rows)]
        np.add.at(out, (kept_idx[rows][:, None], kept_idx[rows][None, :]), block)
    return DensityOperator(sub, out, trace_deficit=rho.trace_deficit)


def expectation(state, operator):
    """Tr[rho O] for an operator given as a matrix on the state's space."""
    rho = as_density(state)
    return complex(np.einsum("ij,ji->", operator, rho.matrix))


def embed_operator(space, ops):
    """Build the matrix of a product operator on ``space``.

    ``ops`` is a list of (modes, matrix_on_subspace, subspace) triples acting
    on disjoint mode sets; modes not covered get the identity.
    """
    d = space.dim
    out = np.ones((d, d), dtype=complex)
    covered = []
    for modes, mat, sub in ops:
        covered.extend(modes)
        idx = np.array([sub.index(occ) for occ in space.basis[:, list(modes)]])
        out *= mat[np.ix_(idx, idx)]
    rest = [i for i in range(space.n_modes) if i not in covered]
    if rest:
        rest_occ = space.basis[:, rest]
        key = np.array([hash(tuple(r)) for r in rest_occ.tolist()])
        out *= (key[:, None] == key[None, :]) & (rest_occ[:, None, :] == rest_occ[None, :, :]).all(axis=2)
    return out


def annihilation_operator(cutoff):
    n = np.arange(1, cutoff + 1)
    a = np.zeros((cutoff + 1, cutoff + 1))
    a[np.arange(cutoff), n] = np.sqrt(n)
    return a


def number_operator(cutoff):
    return np.diag(np.arange(cutoff + 1).astype(float))


def quadrature_operator(theta, cutoff):
    """x(theta) = (a e^{-i theta} + a^dag e^{i theta}) / 2 on |0..cutoff>."""
    a = annihilation_operator(cutoff)
    return (a * np.exp(-1j * theta) + a.T * np.exp(1j * theta)) / 2.0


def apply_phase_shift(state, mode, theta):
    """Multiply the amplitude of occupation n on ``mode`` by e^{i theta n}."""
    phases = np.exp(1j * theta * state.space.basis[:, mode])
    if isinstance(state, PureState):
        return PureState(state.space, state.amplitudes * phases, state.norm_deficit)
    mat = state.matrix * phases[:, None] * phases.conj()[None, :]
    return DensityOperator(state.space, mat, state.trace_deficit)


@lru_cache(maxsize=None)
def _bs_sector_unitary_cached(u_key, t):
    U = np.array(u_key[0]).reshape(2, 2) + 1j * np.array(u_key[1]).reshape(2, 2)
    # |k, t-k>_in -> sum_a M[a, k] |a, t-a>_out from the binomial expansion of
    # (U00 a1^dag + U10 a2^dag)^k (U01 a1^dag + U11 a2^dag)^(t-k)
    M = np.zeros((t + 1, t + 1), dtype=complex)
    logfact = gammaln(np.arange(t + 2) + 1.0)
    for k in range(t + 1):
        poly = np.zeros(t + 1, dtype=complex)  # coefficient of a1^dag^a a2^dag^(t-a)
        p1 = np.zeros(k + 1, dtype=complex)
        for j in range(k + 1):
            p1[j] = np.exp(gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)) * U[0, 0] ** j * U[1, 0] ** (k - j)
        q = t - k
        p2 = np.zeros(q + 1, dtype=complex)
        for j in range(q + 1):
            p2[j] = np.exp(gammaln(q + 1) - gammaln(j + 1) - gammaln(q - j + 1)) * U[0, 1] ** j * U[1, 1] ** (q - j)
        poly = np.convolve(p1, p2)
        a = np.arange(t + 1)
        M[:, k] = poly * np.exp(0.5 * (logfact[a] + logfact[t - a]) - 0.5 * (logfact[k] + logfact[t - k]))
    return M


def beamsplitter_sector_unitary(U, t):
    """(t+1)x(t+1) unitary block of a beamsplitter on the two-mode sector
    with t photons total."""
    U = np.asarray(U, dtype=complex)
    key = (tuple(np.round(U.real, 15).ravel()), tuple(np.round(U.imag, 15).ravel()))
    M = _bs_sector_unitary_cached(key, int(t))
    return M


def apply_beamsplitter(state, mode_i, mode_j, U, on_overflow="raise"):
    """Apply a two-mode beamsplitter to ``mode_i`` and ``mode_j``.

    ``U`` maps coherent amplitudes (gamma_i, gamma_j) to outputs on the same
    two modes.  If an occupied pair-total exceeds either cutoff the output
    block cannot be represented; depending on ``on_overflow`` this raises a
    TruncationOverflowError (with the lost probability attached) or truncates
    and records the deficit.
    """
    space = state.space
    pure = isinstance(state, PureState)
    basis = space.basis
    ti = basis[:, mode_i]
    t = ti + basis[:, mode_j]
    rest_cols = [c for c in range(space.n_modes) if c not in (mode_i, mode_j)]
    rest = basis[:, rest_cols]

    # Assemble the full transformation, block diagonal over groups with the
    # same rest occupations and pair total.  Blocks whose pair total exceeds
    # a cutoff lose their out-of-range rows and become contractions.
    keys = np.concatenate([rest, t[:, None]], axis=1)
    uniq, group = np.unique(keys, axis=0, return_inverse=True)
    group_t = uniq[:, -1]
    max_pair = min(space.cutoffs[mode_i], space.cutoffs[mode_j])

    U_full = np.zeros((space.dim, space.dim), dtype=complex)
    any_overflow = False
    for g in range(uniq.shape[0]):
        tv = int(group_t[g])
        rows = np.where(group == g)[0]
        pos = ti[rows]
        M = beamsplitter_sector_unitary(U, tv)
        if tv > max_pair:
            any_overflow = True
        U_full[np.ix_(rows, rows)] = M[np.ix_(pos, pos)]

    if pure:
        out = U_full @ state.amplitudes
        kept = float(np.vdot(out, out).real)
        deficit = max(0.0, float(np.vdot(state.amplitudes, state.amplitudes).real) - kept) if any_overflow else 0.0
        if deficit > 1e-15 and on_overflow == "raise":
            raise TruncationOverflowError(
                f"beamsplitter output exceeds cutoffs (lost probability {deficit:.3e})",
                deficit=deficit,
            )
        return PureState(space, out, state.norm_deficit + deficit)
    out = U_full @ state.matrix @ U_full.conj().T
    deficit = max(0.0, float(np.trace(state.matrix).real - np.trace(out).real)) if any_overflow else 0.0
    if deficit > 1e-15 and on_overflow == "raise":
        raise TruncationOverflowError(
            f"beamsplitter output exceeds cutoffs (lost probability {deficit:.3e})",
            deficit=deficit,
        )
    return DensityOperator(space, out, state.trace_deficit + deficit)


def displaced_fock_overlap(m, gamma, k):
    """<m| D(gamma) |k> with D the displacement operator."""
    mag2 = abs(gamma) ** 2
    if mag2 > 1.0e6:
        raise ValueError("displacement magnitude out of supported range")
    m, k = int(m), int(k)
    if m < 0 or k < 0:
        return 0.0
    from scipy.special import assoc_laguerre

    if m >= k:
        pref = np.exp(0.5 * (gammaln(k + 1) - gammaln(m + 1)) - mag2 / 2.0)
        return pref * gamma ** (m - k) * assoc_laguerre(mag2, k, m - k)
    pref = np.exp(0.5 * (gammaln(m + 1) - gammaln(k + 1)) - mag2 / 2.0)
    return pref * (-np.conj(gamma)) ** (k - m) * assoc_laguerre(mag2, m, k - m)
