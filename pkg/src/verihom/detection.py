"""Measurement models for the implemented homodyne and heterodyne schemes.

Three backends:

* ExactFock: evolve truncated Fock states through the detection circuits,
  sector by sector; exact for states representable in the truncation.
* CoherentLO: arbitrary signal with a pure coherent LO; amplitudes are
  computed semi-analytically from displaced-vacuum overlaps, so the LO is
  never truncated.  Scales to |beta|^2 in the hundreds.
* PoissonProduct: coherent signal and coherent LO; detector counts are
  independent Poisson variables with means from the propagated amplitudes.

Count tuple conventions: hom counts are (n0, n1, n2) with n0 the weak-port
detector; het counts are (n0p, n1p, n2p, n3p, n4p).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb, gammaln

from .circuits import sector_amplitudes
from .fock import (
    DensityOperator,
    ModeSpace,
    PureState,
    as_density,
    coherent_amplitudes,
    coherent_state,
    default_coherent_cutoff,
    embed_operator,
    poisson_bulk_range,
    tensor_product,
)

__all__ = [
    "Backend",
    "CountsHom",
    "CountsHet",
    "OutcomeDistribution",
    "CoherentPair",
    "SignalWithLO",
    "z_value",
    "alpha_value",
    "alpha_theta",
    "f_hom",
    "g_hom",
    "f_het",
    "g_het",
    "HOM_THETAS",
    "shd_distribution",
    "shed_distribution",
    "expected_statistic",
    "sample_counts",
    "statistic_operators",
    "rotate_lo_phase",
    "rotate_signal_phase",
    "povm_compile_coherent_lo",
    "shd_signal_ops",
    "shed_signal_ops",
    "contract_lo",
    "hom_statistics",
    "het_statistics",
    "alpha_theta_moment",
    "poisson_hom_moments",
    "pair_statistics",
    "hybrid_statistics",
]

HOM_THETAS = (0.0, np.pi / 4.0, np.pi / 2.0, 3.0 * np.pi / 4.0)


class Backend(enum.Enum):
    EXACT_FOCK = "exact_fock"
    COHERENT_LO = "coherent_lo"
    POISSON_PRODUCT = "poisson_product"


class InvalidInputError(ValueError):
    pass


class BackendFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class CountsHom:
    n0: int
    n1: int
    n2: int
    theta: float = 0.0


@dataclass(frozen=True)
class CountsHet:
    n0p: int
    n1p: int
    n2p: int
    n3p: int
    n4p: int


@dataclass(frozen=True)
class CoherentPair:
    """Coherent signal alpha with coherent LO beta."""

    alpha: complex
    beta: complex


@dataclass
class SignalWithLO:
    """Arbitrary single-mode signal state with a pure coherent LO."""

    signal: object
    beta: complex


@dataclass
class OutcomeDistribution:
    kind: str                      # 'shd' or 'shed'
    theta: float | None
    counts: np.ndarray             # (n_outcomes, 3 or 5) int array
    probs: np.ndarray
    mass_deficit: float = 0.0

    def __post_init__(self):
        self.probs = np.where(self.probs < 0.0, np.where(self.probs > -1e-12, 0.0, self.probs), self.probs)
        if np.any(self.probs < 0.0):
            raise ValueError("distribution has probabilities below -1e-12")

    def total_mass(self):
        return float(self.probs.sum())

    def as_dict(self):
        return {tuple(c): p for c, p in zip(map(tuple, self.counts.tolist()), self.probs)}


# ---------------------------------------------------------------------------
# outcome functionals

def z_value(c):
    n0, n1, n2 = (c.n0, c.n1, c.n2) if isinstance(c, CountsHom) else c
    return (n1 - n2) / np.sqrt(2.0 * (n1 + n2 + n0 + 1.0))


def alpha_value(c):
    n0, n1, n2, n3, n4 = (c.n0p, c.n1p, c.n2p, c.n3p, c.n4p) if isinstance(c, CountsHet) else c
    N = n0 + n1 + n2 + n3 + n4
    return np.sqrt(2.0) * ((n1 - n2) + 1j * (n3 - n4)) / np.sqrt(N + 1.0)


def alpha_theta(c, theta):
    a = alpha_value(c)
    return a.real * np.cos(theta) + a.imag * np.sin(theta)


def f_hom(n1, n2, n0):
    n1, n2, n0 = np.asarray(n1, float), np.asarray(n2, float), np.asarray(n0, float)
    delta = (n0 == 0)
    return delta * (0.75 * (n1 + n2) ** 2 + (7.0 / 6.0) * (n1 + n2) + 0.5) + (n1 - n2) ** 4 / (
        6.0 * (n0 + 1.0) * (n0 + 2.0)
    )


def g_hom(n1, n2, n0):
    n1, n2, n0 = np.asarray(n1, float), np.asarray(n2, float), np.asarray(n0, float)
    return 0.5 * (n0 == 0) * (n1 + n2 + 1.0) + (n1 - n2) ** 2 / (2.0 * (n0 + 1.0))


def f_het(n1, n2, n3, n4, n0):
    arrs = [np.asarray(v, float) for v in (n1, n2, n3, n4, n0)]
    n1, n2, n3, n4, n0 = arrs
    q = (n1 - n2) ** 2 + (n3 - n4) ** 2
    return (n0 == 0) * (3.5 * (n1 + n2 + n3 + n4) + 2.0) + q**2 / ((n0 + 1.0) * (n0 + 2.0))


def g_het(n1, n2, n3, n4, n0):
    arrs = [np.asarray(v, float) for v in (n1, n2, n3, n4, n0)]
    n1, n2, n3, n4, n0 = arrs
    return (n0 == 0) * 1.0 + ((n1 - n2) ** 2 + (n3 - n4) ** 2) / (n0 + 1.0)


HOM_STAT_NAMES = ("z", "z2", "f4", "g", "one")
HET_STAT_NAMES = ("alpha_re", "alpha_im", "re2", "im2", "reim", "d_het", "g_het", "one")


def _hom_weights(counts, names):
    n0, n1, n2 = (counts[:, 0].astype(float), counts[:, 1].astype(float), counts[:, 2].astype(float))
    N1 = n0 + n1 + n2 + 1.0
    out = {}
    for name in names:
        if name == "z":
            out[name] = (n1 - n2) / np.sqrt(2.0 * N1)
        elif name == "z2":
            out[name] = (n1 - n2) ** 2 / (2.0 * N1)
        elif name == "f4":
            out[name] = f_hom(n1, n2, n0) / (4.0 * N1)
        elif name == "f":
            out[name] = f_hom(n1, n2, n0)
        elif name == "g":
            out[name] = g_hom(n1, n2, n0)
        elif name == "one":
            out[name] = np.ones_like(n0)
        else:
            raise ValueError(f"unknown hom statistic {name!r}")
    return out


def _het_weights(counts, names):
    n0 = counts[:, 0].astype(float)
    n1, n2, n3, n4 = (counts[:, k].astype(float) for k in (1, 2, 3, 4))
    N1 = n0 + n1 + n2 + n3 + n4 + 1.0
    d12, d34 = n1 - n2, n3 - n4
    out = {}
    for name in names:
        if name == "alpha_re":
            out[name] = np.sqrt(2.0) * d12 / np.sqrt(N1)
        elif name == "alpha_im":
            out[name] = np.sqrt(2.0) * d34 / np.sqrt(N1)
        elif name == "re2":
            out[name] = 2.0 * d12**2 / N1
        elif name == "im2":
            out[name] = 2.0 * d34**2 / N1
        elif name == "reim":
            out[name] = 2.0 * d12 * d34 / N1
        elif name == "d_het":
            out[name] = f_het(n1, n2, n3, n4, n0) / N1
        elif name == "f":
            out[name] = f_het(n1, n2, n3, n4, n0)
        elif name == "g_het":
            out[name] = g_het(n1, n2, n3, n4, n0)
        elif name == "one":
            out[name] = np.ones_like(n0)
        else:
            raise ValueError(f"unknown het statistic {name!r}")
    return out


# ---------------------------------------------------------------------------
# ExactFock backend

_OP_CACHE = {}


def statistic_operators(kind, space, names=None):
    """Two-mode (signal, LO) operators whose expectations give the count
    statistics of the detection circuit (phase shifter at 0).

    Returns a dict name -> Hermitian matrix on ``space``.
    """
    if names is None:
        names = HOM_STAT_NAMES if kind == "shd" else HET_STAT_NAMES
    names = tuple(names)
    key = (kind, space.cutoffs, space.total_cutoff, names)
    if key in _OP_CACHE:
        return _OP_CACHE[key]
    weight_fn = _hom_weights if kind == "shd" else _het_weights
    ops = {name: np.zeros((space.dim, space.dim), dtype=complex) for name in names}
    totals = space.totals()
    for T in np.unique(totals):
        rows = np.where(totals == T)[0]
        occs = space.basis[rows]
        res = sector_amplitudes(kind, int(T), [tuple(o) for o in occs])
        ws = weight_fn(res.counts, names)
        A = res.matrix
        for name in names:
            ops[name][np.ix_(rows, rows)] = A.conj().T @ (ws[name][:, None] * A)
    _OP_CACHE[key] = ops
    return ops


def rotate_lo_phase(op, space, theta):
    """Statistic operator for phase-shifter setting theta from the theta=0
    operator: conjugation by the LO-mode phase."""
    if theta == 0.0:
        return op
    ph = np.exp(1j * theta * space.basis[:, 1])
    return op * ph.conj()[:, None] * ph[None, :]


def rotate_signal_phase(op, theta):
    """Same rotation expressed on a single (signal) mode operator."""
    if theta == 0.0:
        return op
    n = np.arange(op.shape[0])
    ph = np.exp(1j * theta * n)
    return op * ph[:, None] * ph.conj()[None, :]


def _materialize(state):
    """Turn any accepted input into a two-mode (signal, LO) DensityOperator."""
    if isinstance(state, CoherentPair):
        sig = coherent_state(state.alpha)
        lo = coherent_state(state.beta)
        return tensor_product(sig, lo).to_density()
    if isinstance(state, SignalWithLO):
        lo = coherent_state(state.beta)
        sig = state.signal
        if isinstance(sig, PureState) and isinstance(lo, PureState):
            return tensor_product(sig, lo).to_density()
        return tensor_product(as_density(sig), lo.to_density())
    rho = as_density(state)
    if rho.space.n_modes != 2:
        raise InvalidInputError("expected a two-mode (signal, LO) state")
    return rho


def _exact_distribution(state, kind, theta=0.0):
    rho = _materialize(state)
    space = rho.space
    mat = rho.matrix
    if kind == "shd" and theta != 0.0:
        ph = np.exp(1j * theta * space.basis[:, 1])
        mat = mat * ph[:, None] * ph.conj()[None, :]
    totals = space.totals()
    counts_parts, probs_parts = [], []
    for T in np.unique(totals):
        rows = np.where(totals == T)[0]
        occs = space.basis[rows]
        res = sector_amplitudes(kind, int(T), [tuple(o) for o in occs])
        block = mat[np.ix_(rows, rows)]
        probs = np.einsum("ci,ij,cj->c", res.matrix, block, res.matrix.conj()).real
        keep = probs > 0.0
        counts_parts.append(res.counts[keep])
        probs_parts.append(probs[keep])
    counts = np.concatenate(counts_parts, axis=0)
    probs = np.concatenate(probs_parts)
    return OutcomeDistribution(
        kind=kind,
        theta=theta if kind == "shd" else None,
        counts=counts,
        probs=probs,
        mass_deficit=rho.trace_deficit,
    )


# ---------------------------------------------------------------------------
# CoherentLO backend

def _raising_overlaps(gamma, jmax, n_lo, n_hi):
    """r[j, n - n_lo] = sqrt(n!/(n-j)!) <n-j|gamma> for n in [n_lo, n_hi]."""
    n = np.arange(n_lo, n_hi + 1)
    amps = coherent_amplitudes(gamma, n_hi)
    out = np.zeros((jmax + 1, len(n)), dtype=complex)
    for j in range(jmax + 1):
        ok = n - j >= 0
        fac = np.exp(0.5 * (gammaln(n[ok] + 1.0) - gammaln(n[ok] - j + 1.0)))
        out[j, ok] = fac * amps[n[ok] - j]
    return out


def _pair_difference_overlaps(g1, g2, kmax, r1_range, r2_range):
    """b[k, i, j] = <n1_i, n2_j| (a1^dag - a2^dag)^k |g1, g2>."""
    r1 = _raising_overlaps(g1, kmax, *r1_range)
    r2 = _raising_overlaps(g2, kmax, *r2_range)
    L1, L2 = r1.shape[1], r2.shape[1]
    b = np.zeros((kmax + 1, L1, L2), dtype=complex)
    for k in range(kmax + 1):
        acc = np.zeros((L1, L2), dtype=complex)
        for j in range(k + 1):
            coeff = np.exp(gammaln(k + 1.0) - gammaln(j + 1.0) - gammaln(k - j + 1.0))
            acc += coeff * (-1.0) ** (k - j) * np.outer(r1[j], r2[k - j])
        b[k] = acc
    return b


def _detector_range(mean, margin, n_sigmas=10.0):
    lo, hi = poisson_bulk_range(mean, n_sigmas=n_sigmas)
    return lo, hi + margin


def _log_poisson(mean, n):
    if mean == 0.0:
        return np.where(n == 0, 0.0, -np.inf)
    return -mean + n * np.log(mean) - gammaln(n + 1.0)


def povm_compile_coherent_lo(beta, theta=0.0, signal_cutoff=5, count_cutoffs=None, n_sigmas=10.0):
    """POVM of the two-detector scheme on the signal mode for a coherent LO.

    Returns (counts, povm) with povm[c] the positive operator for counts[c]
    = (n0, n1, n2).  Sum over c approximates the identity; the deficit is
    checked against 1e-6.
    """
    bphase = beta * np.exp(1j * theta)
    g0 = bphase / np.sqrt(2.0)
    g1 = g2 = bphase / 2.0
    sc = signal_cutoff
    if count_cutoffs is None:
        lo0, hi0 = _detector_range(abs(g0) ** 2, 0, n_sigmas)
        lo1, hi1 = _detector_range(abs(g1) ** 2, sc, n_sigmas)
        lo2, hi2 = _detector_range(abs(g2) ** 2, sc, n_sigmas)
    else:
        lo0, hi0 = 0, count_cutoffs[0]
        lo1, hi1 = 0, count_cutoffs[1]
        lo2, hi2 = 0, count_cutoffs[2]
    b = _pair_difference_overlaps(g1, g2, sc, (lo1, hi1), (lo2, hi2))
    norm = np.exp(-0.5 * (np.arange(sc + 1) * np.log(2.0) + gammaln(np.arange(sc + 1) + 1.0)))
    p0 = coherent_amplitudes(g0, hi0)[lo0:]
    n0v = np.arange(lo0, hi0 + 1)
    n1v = np.arange(lo1, hi1 + 1)
    n2v = np.arange(lo2, hi2 + 1)
    counts = np.stack(np.meshgrid(n0v, n1v, n2v, indexing="ij"), axis=-1).reshape(-1, 3)
    # amplitude tensor A[c, n]
    A12 = (b * norm[:, None, None]).reshape(sc + 1, -1).T          # (L1*L2, sc+1)
    A = (p0[:, None, None] * A12[None, :, :]).reshape(-1, sc + 1)  # (L0*L1*L2, sc+1)
    povm = np.einsum("cn,cm->cnm", A.conj(), A)
    total = povm.sum(axis=0)
    deficit = float(np.abs(total - np.eye(sc + 1)).max())
    if deficit > 1e-6:
        raise BackendFailure(f"POVM completeness deficit {deficit:.3e}")
    return counts, povm


def _colo_distribution(state, kind, theta=0.0, n_sigmas=10.0):
    if isinstance(state, CoherentPair):
        sig = coherent_state(state.alpha).to_density()
        beta = state.beta
    elif isinstance(state, SignalWithLO):
        sig = as_density(state.signal)
        beta = state.beta
    else:
        raise InvalidInputError("CoherentLO backend needs SignalWithLO or CoherentPair input")
    sc = sig.space.cutoffs[0]
    if kind == "shd":
        counts, povm = povm_compile_coherent_lo(beta, theta, sc, n_sigmas=n_sigmas)
        probs = np.einsum("cnm,mn->c", povm, sig.matrix).real
    else:
        counts, probs = _shed_colo_grid_probs(sig, beta, n_sigmas=n_sigmas)
    keep = probs > 0.0
    dist = OutcomeDistribution(
        kind=kind,
        theta=theta if kind == "shd" else None,
        counts=counts[keep],
        probs=probs[keep],
        mass_deficit=max(sig.trace_deficit, 1.0 - float(probs.sum())),
    )
    return dist


def _shed_colo_grid_probs(sig, beta, n_sigmas=10.0):
    """Enumerated outcome probabilities of the four-detector scheme for a
    signal density matrix with a coherent LO; the weak-port count factors
    out, so only the four-detector amplitude grid is materialized."""
    sc = sig.space.cutoffs[0]
    B = beta / np.sqrt(2.0)
    g0 = B
    g12 = B / 2.0
    g34 = 1j * B / 2.0
    lo0, hi0 = _detector_range(abs(g0) ** 2, 0, n_sigmas)
    lod, hid = _detector_range(abs(g12) ** 2, sc, n_sigmas)
    b12 = _pair_difference_overlaps(g12, g12, sc, (lod, hid), (lod, hid))
    b34 = _pair_difference_overlaps(g34, g34, sc, (lod, hid), (lod, hid))
    L = hid - lod + 1
    # A4[n, n1, n2, n3, n4] = 2^{-n}/sqrt(n!) sum_k C(n,k) b12_k b34_{n-k}
    A4 = np.zeros((sc + 1, L, L, L, L), dtype=complex)
    for n in range(sc + 1):
        pref = np.exp(-n * np.log(2.0) - 0.5 * gammaln(n + 1.0))
        for k in range(n + 1):
            coeff = pref * np.exp(gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0))
            A4[n] += coeff * b12[k][:, :, None, None] * b34[n - k][None, None, :, :]
    A4f = A4.reshape(sc + 1, -1)
    q = np.einsum("nc,nm,mc->c", A4f, sig.matrix, A4f.conj()).real
    p0 = np.abs(coherent_amplitudes(g0, hi0)[lo0:]) ** 2
    probs = (p0[:, None] * q[None, :]).ravel()
    n0v = np.arange(lo0, hi0 + 1)
    ndv = np.arange(lod, hid + 1)
    counts = np.stack(np.meshgrid(n0v, ndv, ndv, ndv, ndv, indexing="ij"), axis=-1).reshape(-1, 5)
    return counts, probs


def _hom_n0_kernels(mu0, M_vals, n_sigmas=10.0):
    """Fold the weak-port count n0 out of the hom statistics.

    Returns dict of arrays over M = n1 + n2: kernels for z, z2, the
    quartic part of f4, the quadratic part of g, plus the n0 = 0 weights."""
    lo, hi = poisson_bulk_range(mu0, n_sigmas=n_sigmas)
    lo = 0 if mu0 <= 400.0 else lo
    n0 = np.arange(lo, hi + 1)
    logp = _log_poisson(mu0, n0)
    P = np.exp(logp)
    M = M_vals[:, None].astype(float)
    n0f = n0[None, :].astype(float)
    denom = M + n0f + 1.0
    k = {}
    k["z"] = (P[None, :] / np.sqrt(2.0 * denom)).sum(axis=1)
    k["z2"] = (P[None, :] / (2.0 * denom)).sum(axis=1)
    k["f4_quartic"] = (P[None, :] / (24.0 * (n0f + 1.0) * (n0f + 2.0) * denom)).sum(axis=1)
    k["g_quad"] = float((P / (2.0 * (n0 + 1.0))).sum()) * np.ones(len(M_vals))
    k["one"] = float(P.sum()) * np.ones(len(M_vals))
    p00 = np.exp(-mu0)
    Mf = M_vals.astype(float)
    k["f4_delta"] = p00 * (0.75 * Mf**2 + (7.0 / 6.0) * Mf + 0.5) / (4.0 * (Mf + 1.0))
    k["g_delta"] = p00 * (Mf + 1.0) / 2.0
    return k


def shd_signal_ops(beta, signal_cutoff, names=None, theta=0.0, n_sigmas=10.0):
    """Signal-mode operators O with Tr[O rho_s] = <statistic> for the
    two-detector scheme with coherent LO beta, exact up to Poisson tails.

    Supported names: 'z', 'z2', 'f4', 'g', 'one', 'd_hom'.
    """
    if names is None:
        names = ("z", "z2", "f4", "g", "one")
    base = _shd_signal_ops_theta0(beta, signal_cutoff, n_sigmas)
    out = {}
    for name in names:
        if name == "d_hom":
            op = sum(rotate_signal_phase(base["f4"], th) for th in HOM_THETAS)
        else:
            op = rotate_signal_phase(base[name], theta)
        out[name] = op
    return out


_SHD_OPS_CACHE = {}


def _shd_signal_ops_theta0(beta, signal_cutoff, n_sigmas=10.0):
    key = (complex(beta), signal_cutoff, n_sigmas)
    if key in _SHD_OPS_CACHE:
        return _SHD_OPS_CACHE[key]
    sc = signal_cutoff
    g0 = beta / np.sqrt(2.0)
    g12 = beta / 2.0
    lod, hid = _detector_range(abs(g12) ** 2, sc, n_sigmas + 2.0)
    b = _pair_difference_overlaps(g12, g12, sc, (lod, hid), (lod, hid))
    nd = np.arange(lod, hid + 1)
    Mgrid = nd[:, None] + nd[None, :]
    Dgrid = (nd[:, None] - nd[None, :]).astype(float)
    M_vals = np.arange(2 * lod, 2 * hid + 1)
    kern = _hom_n0_kernels(abs(g0) ** 2, M_vals, n_sigmas + 2.0)
    Midx = Mgrid - 2 * lod
    norm = np.exp(-0.5 * (np.arange(sc + 1) * np.log(2.0) + gammaln(np.arange(sc + 1) + 1.0)))
    fields = {
        "z": Dgrid * kern["z"][Midx],
        "z2": Dgrid**2 * kern["z2"][Midx],
        "f4": kern["f4_delta"][Midx] + Dgrid**4 * kern["f4_quartic"][Midx],
        "g": kern["g_delta"][Midx] + Dgrid**2 * kern["g_quad"][Midx],
        "one": kern["one"][Midx],
    }
    ops = {}
    for name, W in fields.items():
        O = np.einsum("nij,ij,mij->nm", b.conj(), W, b)
        ops[name] = (norm[:, None] * norm[None, :]) * O
    _SHD_OPS_CACHE[key] = ops
    return ops


_SHED_OPS_CACHE = {}


def shed_signal_ops(beta, signal_cutoff, names=None, n_sigmas=10.0):
    """Signal-mode operators for the four-detector scheme with coherent LO.

    Supported names: 'alpha_re', 'alpha_im', 're2', 'im2', 'reim', 'd_het',
    'g_het', 'one'.  The four-detector grid is folded pairwise so the cost
    stays polynomial in |beta|.
    """
    key = (complex(beta), signal_cutoff, n_sigmas)
    if key not in _SHED_OPS_CACHE:
        _SHED_OPS_CACHE[key] = _shed_signal_ops_build(beta, signal_cutoff, n_sigmas)
    ops = _SHED_OPS_CACHE[key]
    if names is None:
        names = tuple(ops.keys())
    return {name: ops[name] for name in names}


def _het_n0_kernels(mu0, Mbar, n_sigmas):
    lo, hi = poisson_bulk_range(mu0, n_sigmas=n_sigmas)
    lo = 0 if mu0 <= 400.0 else lo
    n0 = np.arange(lo, hi + 1)
    P = np.exp(_log_poisson(mu0, n0))
    M = Mbar[:, None].astype(float)
    n0f = n0[None, :].astype(float)
    denom = M + n0f + 1.0
    k = {}
    k["sqrt"] = (P[None, :] / np.sqrt(denom)).sum(axis=1)
    k["inv"] = (P[None, :] / denom).sum(axis=1)
    k["quart"] = (P[None, :] / ((n0f + 1.0) * (n0f + 2.0) * denom)).sum(axis=1)
    k["g_quad"] = float((P / (n0 + 1.0)).sum()) * np.ones(len(Mbar))
    k["one"] = float(P.sum()) * np.ones(len(Mbar))
    p00 = np.exp(-mu0)
    Mf = Mbar.astype(float)
    k["d_delta"] = p00 * (3.5 * Mf + 2.0) / (Mf + 1.0)
    k["g_delta"] = p00 * np.ones(len(Mbar))
    return k


def _shed_signal_ops_build(beta, signal_cutoff, n_sigmas=10.0):
    sc = signal_cutoff
    B = beta / np.sqrt(2.0)
    g0 = B
    g12 = B / 2.0
    g34 = 1j * B / 2.0
    lod, hid = _detector_range(abs(g12) ** 2, sc, n_sigmas + 2.0)
    nd = np.arange(lod, hid + 1)
    b12 = _pair_difference_overlaps(g12, g12, sc, (lod, hid), (lod, hid))
    b34 = _pair_difference_overlaps(g34, g34, sc, (lod, hid), (lod, hid))
    Mgrid = nd[:, None] + nd[None, :]
    Dgrid = (nd[:, None] - nd[None, :]).astype(float)
    M_vals = np.arange(2 * lod, 2 * hid + 1)
    Midx = Mgrid - 2 * lod
    nM = len(M_vals)
    kk = sc + 1
    powers = (0, 1, 2, 3, 4)

    def moment_tensors(b):
        # R[k, k', a, M] = sum over the pair grid at fixed M of
        #                  b_k conj(b_{k'}) (n_i - n_j)^a
        R = np.zeros((kk, kk, len(powers), nM), dtype=complex)
        flatM = Midx.ravel()
        for k in range(kk):
            for kp in range(kk):
                prod = (b[k] * b[kp].conj()).ravel()
                for a in powers:
                    w = prod * (Dgrid.ravel() ** a)
                    R[k, kp, a] = np.bincount(flatM, weights=w.real, minlength=nM) + 1j * np.bincount(
                        flatM, weights=w.imag, minlength=nM
                    )
        return R

    R12 = moment_tensors(b12)
    R34 = moment_tensors(b34)

    Mbar = np.arange(4 * lod, 4 * hid + 1)
    kern = _het_n0_kernels(abs(g0) ** 2, Mbar, n_sigmas + 2.0)
    # Hankel kernels H[M12, M34] = S(M12 + M34)
    hankel_idx = (M_vals[:, None] - 2 * lod) + (M_vals[None, :] - 2 * lod)
    kernels = {
        name: kern[name][hankel_idx]
        for name in ("sqrt", "inv", "quart", "g_quad", "one", "d_delta", "g_delta")
    }

    # statistic = sum of terms coeff * d12^a * d34^b * S_kernel(Mbar)
    stat_terms = {
        "alpha_re": [(np.sqrt(2.0), 1, 0, "sqrt")],
        "alpha_im": [(np.sqrt(2.0), 0, 1, "sqrt")],
        "re2": [(2.0, 2, 0, "inv")],
        "im2": [(2.0, 0, 2, "inv")],
        "reim": [(2.0, 1, 1, "inv")],
        "d_het": [
            (1.0, 0, 0, "d_delta"),
            (1.0, 4, 0, "quart"),
            (2.0, 2, 2, "quart"),
            (1.0, 0, 4, "quart"),
        ],
        "g_het": [(1.0, 0, 0, "g_delta"), (1.0, 2, 0, "g_quad"), (1.0, 0, 2, "g_quad")],
        "one": [(1.0, 0, 0, "one")],
    }

    # O[n, n'] = sum_c w(c) conj(A_n(c)) A_{n'}(c) with
    # A_n(c) = p0(n0) pref_n sum_k C(n, k) b12_k b34_{n-k}; the n0 sum sits
    # in the kernels, the pair grids reduce to R12 / R34 per (k, k', power).
    flatR12 = {a: R12[:, :, a, :].reshape(kk * kk, nM).conj() for a in powers}
    flatR34 = {a: R34[:, :, a, :].reshape(kk * kk, nM).conj() for a in powers}
    n_arr = np.arange(kk)
    C = comb(n_arr[:, None], n_arr[None, :])
    pref = np.exp(-n_arr * np.log(2.0) - 0.5 * gammaln(n_arr + 1.0))
    ops = {}
    for name, terms in stat_terms.items():
        O = np.zeros((kk, kk), dtype=complex)
        for coeff, a, bpow, kname in terms:
            T = (flatR12[a] @ kernels[kname] @ flatR34[bpow].T).reshape(kk, kk, kk, kk)
            # T[k, kp, l, lp] = sum conj(R12[k,kp,a]) S conj(R34[l,lp,b])
            for n in range(kk):
                for npr in range(kk):
                    acc = 0.0 + 0.0j
                    for k2 in range(n + 1):
                        for kp in range(npr + 1):
                            acc += C[n, k2] * C[npr, kp] * T[k2, kp, n - k2, npr - kp]
                    O[n, npr] += coeff * pref[n] * pref[npr] * acc
        ops[name] = O
    return ops


def contract_lo(op_sr, space, beta, n_sigmas=10.0):
    """Partial expectation of a two-mode (signal, LO) operator in the
    coherent LO state: returns the effective signal-mode operator."""
    cs, cr = space.cutoffs
    d = coherent_amplitudes(beta, cr)
    out = np.zeros((cs + 1, cs + 1), dtype=complex)
    basis = space.basis
    for i, (n, m) in enumerate(basis.tolist()):
        row = op_sr[i]
        for j, (npr, mpr) in enumerate(basis.tolist()):
            out[n, npr] += np.conj(d[m]) * d[mpr] * row[j]
    return out


# ---------------------------------------------------------------------------
# PoissonProduct backend

def _shd_poisson_means(alpha, beta, theta):
    bp = beta * np.exp(1j * theta)
    g0 = bp / np.sqrt(2.0)
    g1 = alpha / np.sqrt(2.0) + bp / 2.0
    g2 = -alpha / np.sqrt(2.0) + bp / 2.0
    return abs(g0) ** 2, abs(g1) ** 2, abs(g2) ** 2


def _shed_poisson_means(alpha, beta):
    B = beta / np.sqrt(2.0)
    g0 = B
    g1 = (alpha + B) / 2.0
    g2 = (-alpha + B) / 2.0
    g3 = (alpha + 1j * B) / 2.0
    g4 = (-alpha + 1j * B) / 2.0
    return tuple(abs(g) ** 2 for g in (g0, g1, g2, g3, g4))


def _poisson_distribution(state, kind, theta=0.0, n_sigmas=10.0):
    if not isinstance(state, CoherentPair):
        raise InvalidInputError("PoissonProduct backend needs coherent signal and LO")
    means = _shd_poisson_means(state.alpha, state.beta, theta) if kind == "shd" else _shed_poisson_means(
        state.alpha, state.beta
    )
    ranges = []
    for m in means:
        lo, hi = poisson_bulk_range(m, n_sigmas)
        ranges.append(np.arange(lo, hi + 1))
    grids = np.meshgrid(*ranges, indexing="ij")
    counts = np.stack(grids, axis=-1).reshape(-1, len(means))
    logp = np.zeros(counts.shape[0])
    for k, m in enumerate(means):
        logp += _log_poisson(m, counts[:, k].astype(float))
    probs = np.exp(logp)
    return OutcomeDistribution(
        kind=kind,
        theta=theta if kind == "shd" else None,
        counts=counts,
        probs=probs,
        mass_deficit=max(0.0, 1.0 - float(probs.sum())),
    )


def poisson_hom_moments(alpha, beta, theta, n_sigmas=12.0):
    """<z>, <z^2>, <f4> for coherent (x) coherent inputs at one setting,
    by exact conditional-binomial summation over the Poisson bulk."""
    m0, m1, m2 = _shd_poisson_means(alpha, beta, theta)
    ms = m1 + m2
    p = m1 / ms
    q = 1.0 - p
    d = p - q
    loS, hiS = poisson_bulk_range(ms, n_sigmas)
    S = np.arange(loS, hiS + 1).astype(float)
    PS = np.exp(_log_poisson(ms, S))
    kern = _hom_n0_kernels(m0, np.arange(loS, hiS + 1), n_sigmas)
    E1 = S * d
    E2 = S**2 * d**2 + 4.0 * S * p * q
    mu = S * d
    c2 = 4.0 * S * p * q
    c3 = 8.0 * S * p * q * (q - p)
    c4 = 16.0 * S * p * q * (1.0 + (3.0 * S - 6.0) * p * q)
    E4 = mu**4 + 6.0 * mu**2 * c2 + 4.0 * mu * c3 + c4
    z = float((PS * E1 * kern["z"]).sum())
    z2 = float((PS * E2 * kern["z2"]).sum())
    f4 = float((PS * kern["f4_delta"]).sum() + (PS * E4 * kern["f4_quartic"]).sum())
    g = float((PS * kern["g_delta"]).sum() + (PS * E2 * kern["g_quad"]).sum())
    return {"z": z, "z2": z2, "f4": f4, "g": g}


# ---------------------------------------------------------------------------
# public distribution / statistics API

def shd_distribution(state, theta=0.0, backend=Backend.EXACT_FOCK, count_cutoffs=None, n_sigmas=10.0):
    if backend == Backend.EXACT_FOCK:
        return _exact_distribution(state, "shd", theta)
    if backend == Backend.COHERENT_LO:
        return _colo_distribution(state, "shd", theta, n_sigmas)
    if backend == Backend.POISSON_PRODUCT:
        return _poisson_distribution(state, "shd", theta, n_sigmas)
    raise InvalidInputError(f"unknown backend {backend}")


def shed_distribution(state, backend=Backend.EXACT_FOCK, count_cutoffs=None, n_sigmas=10.0):
    if backend == Backend.EXACT_FOCK:
        return _exact_distribution(state, "shed")
    if backend == Backend.COHERENT_LO:
        return _colo_distribution(state, "shed", n_sigmas=n_sigmas)
    if backend == Backend.POISSON_PRODUCT:
        return _poisson_distribution(state, "shed", n_sigmas=n_sigmas)
    raise InvalidInputError(f"unknown backend {backend}")


def expected_statistic(dist, statistic, theta=None):
    """Expectation of a named statistic.

    'd_hom' needs a dict {theta: OutcomeDistribution} over the four
    settings; everything else takes a single distribution.
    """
    if statistic == "d_hom":
        if not isinstance(dist, dict) or set(np.round(list(dist), 12)) != set(np.round(HOM_THETAS, 12)):
            raise InvalidInputError("d_hom needs distributions for all four settings")
        return sum(expected_statistic(dv, "f4") for dv in dist.values())
    if dist.kind == "shd":
        w = _hom_weights(dist.counts, (statistic,))[statistic]
        return float((w * dist.probs).sum())
    if statistic in ("alpha_theta", "alpha_theta2"):
        if theta is None:
            raise InvalidInputError("theta required for alpha statistics")
        c, s = np.cos(theta), np.sin(theta)
        names = ("alpha_re", "alpha_im") if statistic == "alpha_theta" else ("re2", "im2", "reim")
        ws = _het_weights(dist.counts, names)
        if statistic == "alpha_theta":
            w = c * ws["alpha_re"] + s * ws["alpha_im"]
        else:
            w = c * c * ws["re2"] + s * s * ws["im2"] + 2.0 * c * s * ws["reim"]
        return float((w * dist.probs).sum())
    if statistic == "alpha0_alphapi2":
        w = _het_weights(dist.counts, ("reim",))["reim"]
        return float((w * dist.probs).sum())
    w = _het_weights(dist.counts, (statistic,))[statistic]
    return float((w * dist.probs).sum())


def sample_counts(dist, seed, shots):
    if shots < 1:
        raise InvalidInputError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    p = dist.probs / dist.probs.sum()
    idx = rng.choice(len(p), size=shots, p=p)
    return [tuple(row) for row in dist.counts[idx].tolist()]


def hom_statistics(state, backend=Backend.EXACT_FOCK, thetas=HOM_THETAS, n_sigmas=10.0):
    """z, z2, f4, g per setting plus d_hom, via the requested backend."""
    thetas = tuple(thetas)
    out = {"z": {}, "z2": {}, "f4": {}, "g": {}, "mass_deficit": 0.0}
    if backend == Backend.EXACT_FOCK:
        for th in thetas:
            dist = _exact_distribution(state, "shd", th)
            for name in ("z", "z2", "f4", "g"):
                out[name][th] = expected_statistic(dist, name)
            out["mass_deficit"] = max(out["mass_deficit"], dist.mass_deficit)
    elif backend == Backend.COHERENT_LO:
        if isinstance(state, CoherentPair):
            sig = coherent_state(state.alpha).to_density()
            beta = state.beta
        elif isinstance(state, SignalWithLO):
            sig, beta = as_density(state.signal), state.beta
        else:
            raise InvalidInputError("CoherentLO backend needs SignalWithLO or CoherentPair input")
        sc = sig.space.cutoffs[0]
        for th in thetas:
            ops = shd_signal_ops(beta, sc, ("z", "z2", "f4", "g"), theta=th, n_sigmas=n_sigmas)
            for name in ("z", "z2", "f4", "g"):
                out[name][th] = float(np.einsum("ij,ji->", ops[name], sig.matrix).real)
        out["mass_deficit"] = sig.trace_deficit
    elif backend == Backend.POISSON_PRODUCT:
        if not isinstance(state, CoherentPair):
            raise InvalidInputError("PoissonProduct backend needs coherent signal and LO")
        for th in thetas:
            mom = poisson_hom_moments(state.alpha, state.beta, th, n_sigmas + 2.0)
            for name in ("z", "z2", "f4", "g"):
                out[name][th] = mom[name]
    else:
        raise InvalidInputError(f"unknown backend {backend}")
    if all(th in out["f4"] for th in HOM_THETAS):
        out["d_hom"] = sum(out["f4"][th] for th in HOM_THETAS)
    return out


def het_statistics(state, backend=Backend.EXACT_FOCK, n_sigmas=10.0):
    """First/second moment components of alpha plus d_het and g_het."""
    names = ("alpha_re", "alpha_im", "re2", "im2", "reim", "d_het", "g_het")
    out = {"mass_deficit": 0.0}
    if backend == Backend.EXACT_FOCK:
        dist = _exact_distribution(state, "shed")
        for name in names:
            out[name] = expected_statistic(dist, name)
        out["mass_deficit"] = dist.mass_deficit
    elif backend == Backend.COHERENT_LO:
        if isinstance(state, CoherentPair):
            sig = coherent_state(state.alpha).to_density()
            beta = state.beta
        elif isinstance(state, SignalWithLO):
            sig, beta = as_density(state.signal), state.beta
        else:
            raise InvalidInputError("CoherentLO backend needs SignalWithLO or CoherentPair input")
        sc = sig.space.cutoffs[0]
        ops = shed_signal_ops(beta, sc, names, n_sigmas=n_sigmas)
        for name in names:
            out[name] = float(np.einsum("ij,ji->", ops[name], sig.matrix).real)
        out["mass_deficit"] = sig.trace_deficit
    elif backend == Backend.POISSON_PRODUCT:
        dist = _poisson_distribution(state, "shed", n_sigmas=n_sigmas)
        for name in names:
            out[name] = expected_statistic(dist, name)
        out["mass_deficit"] = dist.mass_deficit
    else:
        raise InvalidInputError(f"unknown backend {backend}")
    return out


def alpha_theta_moment(stats, theta, order=1):
    """<alpha_theta> or <alpha_theta^2> from the het_statistics components."""
    c, s = np.cos(theta), np.sin(theta)
    if order == 1:
        return c * stats["alpha_re"] + s * stats["alpha_im"]
    return c * c * stats["re2"] + s * s * stats["im2"] + 2.0 * c * s * stats["reim"]


# ---------------------------------------------------------------------------
# joint statistics on multi-pair states

def _pair_subspace(space, modes):
    cut = tuple(space.cutoffs[m] for m in modes)
    return ModeSpace(cut, space.total_cutoff)


def _pair_ops_for(space, kind):
    return statistic_operators(kind, space)


def pair_statistics(state, kinds=("hom", "hom"), thetas=(0.0, 0.0), backend=Backend.EXACT_FOCK, lo_betas=None):
    """Joint moments for two (signal, LO) pairs measured independently.

    ExactFock: ``state`` is a 4-mode state on (s1, r1, s2, r2).
    CoherentLO: ``state`` is a two-mode signal state on (s1, s2) and
    ``lo_betas`` gives the two coherent LO amplitudes.

    Returns 'corr' = <o_k o_l>, 'd' = the matching correction statistic,
    and per-pair means.
    """
    if backend == Backend.EXACT_FOCK:
        rho = as_density(state)
        if rho.space.n_modes != 4:
            raise InvalidInputError("ExactFock pair_statistics needs a 4-mode state")
        sub1 = _pair_subspace(rho.space, (0, 1))
        sub2 = _pair_subspace(rho.space, (2, 3))
        ops1 = _two_mode_stat_ops(sub1, kinds[0], thetas[0])
        ops2 = _two_mode_stat_ops(sub2, kinds[1], thetas[1])

        def joint(O1, O2):
            full = embed_operator(rho.space, [((0, 1), O1, sub1), ((2, 3), O2, sub2)])
            return float(np.einsum("ij,ji->", full, rho.matrix).real)

        def single(O, which):
            modes, sub = ((0, 1), sub1) if which == 0 else ((2, 3), sub2)
            full = embed_operator(rho.space, [(modes, O, sub)])
            return float(np.einsum("ij,ji->", full, rho.matrix).real)

        deficit = rho.trace_deficit
    elif backend == Backend.COHERENT_LO:
        rho = as_density(state)
        if rho.space.n_modes != 2 or lo_betas is None:
            raise InvalidInputError("CoherentLO pair_statistics needs a 2-mode signal state and lo_betas")
        sc1, sc2 = rho.space.cutoffs
        ops1 = _signal_stat_ops(lo_betas[0], sc1, kinds[0], thetas[0])
        ops2 = _signal_stat_ops(lo_betas[1], sc2, kinds[1], thetas[1])
        sub1 = ModeSpace((sc1,))
        sub2 = ModeSpace((sc2,))

        def joint(O1, O2):
            full = embed_operator(rho.space, [((0,), O1, sub1), ((1,), O2, sub2)])
            return float(np.einsum("ij,ji->", full, rho.matrix).real)

        def single(O, which):
            modes, sub = ((0,), sub1) if which == 0 else ((1,), sub2)
            full = embed_operator(rho.space, [(modes, O, sub)])
            return float(np.einsum("ij,ji->", full, rho.matrix).real)

        deficit = rho.trace_deficit
    else:
        raise InvalidInputError("pair_statistics supports ExactFock and CoherentLO backends")

    o1, o2 = ops1["outcome"], ops2["outcome"]
    result = {
        "corr": joint(o1, o2),
        "mean_k": single(o1, 0),
        "mean_l": single(o2, 1),
        "mass_deficit": deficit,
    }
    # correction statistic matched to the kind combination
    d1, g1 = ops1["d"], ops1["gsum"]
    d2, g2 = ops2["d"], ops2["gsum"]
    if kinds == ("hom", "hom"):
        result["d"] = (joint(d1, g2) + joint(g1, d2)) / 4.0
    elif kinds == ("het", "het"):
        result["d"] = joint(d1, g2) + joint(g1, d2)
    elif kinds == ("hom", "het"):
        result["d"] = joint(d1, g2) + joint(g1, d2) / 4.0
    elif kinds == ("het", "hom"):
        result["d"] = joint(d1, g2) / 4.0 + joint(g1, d2)
    else:
        raise InvalidInputError(f"unknown kind combination {kinds}")
    return result


def _two_mode_stat_ops(space, kind, theta):
    """outcome / d / summed-g operators for one pair on its two-mode space."""
    if kind == "hom":
        base = statistic_operators("shd", space, ("z", "f4", "g"))
        outcome = rotate_lo_phase(base["z"], space, theta)
        d = sum(rotate_lo_phase(base["f4"], space, th) for th in HOM_THETAS)
        gsum = sum(rotate_lo_phase(base["g"], space, th) for th in HOM_THETAS)
        return {"outcome": outcome, "d": d, "gsum": gsum}
    base = statistic_operators("shed", space, ("alpha_re", "alpha_im", "d_het", "g_het"))
    c, s = np.cos(theta), np.sin(theta)
    return {
        "outcome": c * base["alpha_re"] + s * base["alpha_im"],
        "d": base["d_het"],
        "gsum": base["g_het"],
    }


def _signal_stat_ops(beta, signal_cutoff, kind, theta):
    if kind == "hom":
        z = shd_signal_ops(beta, signal_cutoff, ("z",), theta=theta)["z"]
        base = shd_signal_ops(beta, signal_cutoff, ("f4", "g"), theta=0.0)
        d = sum(rotate_signal_phase(base["f4"], th) for th in HOM_THETAS)
        gsum = sum(rotate_signal_phase(base["g"], th) for th in HOM_THETAS)
        return {"outcome": z, "d": d, "gsum": gsum}
    ops = shed_signal_ops(beta, signal_cutoff, ("alpha_re", "alpha_im", "d_het", "g_het"))
    c, s = np.cos(theta), np.sin(theta)
    return {
        "outcome": c * ops["alpha_re"] + s * ops["alpha_im"],
        "d": ops["d_het"],
        "gsum": ops["g_het"],
    }


def hybrid_statistics(state, first=("hom", 0.0), second=("shd", 0.0), backend=Backend.EXACT_FOCK, lo_beta=None):
    """Joint moments of an ideal detector on mode s1 and the implemented
    scheme on the (s2, r2) pair.

    ``first`` is ('hom', phi) or ('het', phi); ``second`` is ('shd', theta)
    or ('shed', theta).  The ideal detector enters through its moment
    operators.  Returns 'corr' plus the correction moments the matching
    bound needs.
    """
    from .squash import het_moment_operator, quadrature_squared
    from .fock import quadrature_operator

    fkind, phi = first
    skind, theta = second
    if backend == Backend.EXACT_FOCK:
        rho = as_density(state)
        if rho.space.n_modes != 3:
            raise InvalidInputError("ExactFock hybrid_statistics needs a 3-mode state")
        sub = _pair_subspace(rho.space, (1, 2))
        ops2 = _two_mode_stat_ops(sub, "hom" if skind == "shd" else "het", theta)
        c1 = rho.space.cutoffs[0]
        sub1 = ModeSpace((c1,), rho.space.total_cutoff)

        def joint(O1, O2):
            full = embed_operator(rho.space, [((0,), O1, sub1), ((1, 2), O2, sub)])
            return float(np.einsum("ij,ji->", full, rho.matrix).real)

        deficit = rho.trace_deficit
    elif backend == Backend.COHERENT_LO:
        rho = as_density(state)
        if rho.space.n_modes != 2 or lo_beta is None:
            raise InvalidInputError("CoherentLO hybrid_statistics needs a 2-mode signal state and lo_beta")
        sc2 = rho.space.cutoffs[1]
        ops2 = _signal_stat_ops(lo_beta, sc2, "hom" if skind == "shd" else "het", theta)
        c1 = rho.space.cutoffs[0]
        sub1 = ModeSpace((c1,))
        sub = ModeSpace((sc2,))

        def joint(O1, O2):
            full = embed_operator(rho.space, [((0,), O1, sub1), ((1,), O2, sub)])
            return float(np.einsum("ij,ji->", full, rho.matrix).real)

        deficit = rho.trace_deficit
    else:
        raise InvalidInputError("hybrid_statistics supports ExactFock and CoherentLO backends")

    if fkind == "hom":
        F1 = quadrature_operator(phi, c1)
    elif fkind == "het":
        F1 = het_moment_operator("first", c1, phi)
    else:
        raise InvalidInputError(f"unknown ideal detector kind {fkind!r}")

    out = {"corr": joint(F1, ops2["outcome"]), "mass_deficit": deficit}
    if fkind == "hom":
        x0sq = quadrature_squared(0.0, c1)
        xpsq = quadrature_squared(np.pi / 2.0, c1)
        out["x0sq_d"] = joint(x0sq, ops2["d"])
        out["xpi2sq_d"] = joint(xpsq, ops2["d"])
    else:
        inten = het_moment_operator("intensity", c1)
        out["gamma2_d"] = joint(inten, ops2["d"])
    return out
