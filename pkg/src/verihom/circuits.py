"""Beamsplitter circuits behind the two- and four-detector schemes.

The engine evolves a batch of Fock basis inputs through a sequence of
beamsplitters and phase shifters, keeping a sparse list of occupation
tuples with one amplitude column per input.  Photon number is conserved,
so inputs are processed one total-photon sector at a time and the result
is an amplitude matrix A with A[c, i] = <counts_c| circuit |input_i>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import HADAMARD, MIXER, SPLITTER, beamsplitter_sector_unitary

__all__ = [
    "shd_circuit_gates",
    "shed_circuit_gates",
    "SHD_COUNT_ORDER",
    "SHED_COUNT_ORDER",
    "CircuitAmplitudes",
    "evolve_basis_inputs",
    "sector_amplitudes",
]

# Two-detector circuit on modes (signal, lo, vac):
#   split the LO on mode pair (1, 2), then mix signal with the reflected LO.
# After the gates, mode 2 carries the weak port and modes (0, 1) the two
# detectors; counts are reported as (n0, n1, n2).
SHD_GATES = (("bs", 1, 2, "splitter"), ("bs", 0, 1, "mixer"))
SHD_COUNT_ORDER = (2, 0, 1)

# Four-detector circuit on modes (signal, lo, vac_a, vac_b, vac_c); counts
# are reported as (n0', n1', n2', n3', n4').
SHED_GATES = (
    ("bs", 1, 2, "splitter"),   # lo -> (r', weak port)
    ("bs", 0, 4, "hadamard"),   # signal with vac_c
    ("bs", 1, 3, "hadamard"),   # r' with vac_b
    ("ps", 3, np.pi / 2.0),
    ("bs", 0, 1, "mixer"),      # detectors 1', 2'
    ("bs", 4, 3, "mixer"),      # detectors 3', 4'
)
SHED_COUNT_ORDER = (2, 0, 1, 4, 3)

_BS_MATRICES = {"mixer": MIXER, "splitter": SPLITTER, "hadamard": HADAMARD}


def shd_circuit_gates():
    return SHD_GATES


def shed_circuit_gates():
    return SHED_GATES


@dataclass
class CircuitAmplitudes:
    """Sparse amplitude matrix of a circuit on a batch of basis inputs.

    ``counts`` has one row of detector occupations per output basis state
    (already reordered to the detector convention) and ``matrix[c, i]`` is
    the transition amplitude from input ``i``.
    """

    counts: np.ndarray
    matrix: np.ndarray


def _apply_bs_sparse(occ, amp, i, j, U):
    t = occ[:, i] + occ[:, j]
    rest_cols = [c for c in range(occ.shape[1]) if c not in (i, j)]
    keys = np.concatenate([occ[:, rest_cols], t[:, None]], axis=1)
    uniq, group = np.unique(keys, axis=0, return_inverse=True)
    group_t = uniq[:, -1]

    out_occ_parts = []
    out_amp_parts = []
    for tv in np.unique(group_t):
        g_sel = np.where(group_t == tv)[0]
        remap = -np.ones(uniq.shape[0], dtype=np.int64)
        remap[g_sel] = np.arange(len(g_sel))
        rows = np.where(remap[group] >= 0)[0]
        g_local = remap[group[rows]]
        pos = occ[rows, i]
        blocks = np.zeros((len(g_sel), tv + 1, amp.shape[1]), dtype=complex)
        blocks[g_local, pos] = amp[rows]
        M = beamsplitter_sector_unitary(U, int(tv))
        mixed = np.einsum("ab,gbc->gac", M, blocks)
        # emit the full output block for every group
        a = np.arange(tv + 1)
        rest = uniq[g_sel, :-1]
        n_g = len(g_sel)
        occ_out = np.empty((n_g, tv + 1, occ.shape[1]), dtype=np.int64)
        occ_out[:, :, rest_cols] = rest[:, None, :]
        occ_out[:, :, i] = a[None, :]
        occ_out[:, :, j] = (tv - a)[None, :]
        out_occ_parts.append(occ_out.reshape(-1, occ.shape[1]))
        out_amp_parts.append(mixed.reshape(-1, amp.shape[1]))
    occ_new = np.concatenate(out_occ_parts, axis=0)
    amp_new = np.concatenate(out_amp_parts, axis=0)
    return occ_new, amp_new


def evolve_basis_inputs(input_occs, gates, n_modes):
    """Run ``gates`` on the listed basis inputs jointly.

    Returns (occ, amp): occupation rows of the final support and the
    amplitude matrix with one column per input.
    """
    input_occs = [tuple(o) for o in input_occs]
    occ = np.array(input_occs, dtype=np.int64).reshape(len(input_occs), n_modes)
    occ, first_idx = np.unique(occ, axis=0, return_index=True)
    if occ.shape[0] != len(input_occs):
        raise ValueError("duplicate circuit inputs")
    amp = np.zeros((occ.shape[0], len(input_occs)), dtype=complex)
    col_of = {tuple(row): k for k, row in enumerate(input_occs)}
    for r, row in enumerate(map(tuple, occ.tolist())):
        amp[r, col_of[row]] = 1.0
    for gate in gates:
        if gate[0] == "bs":
            _, i, j, name = gate
            occ, amp = _apply_bs_sparse(occ, amp, i, j, _BS_MATRICES[name])
        elif gate[0] == "ps":
            _, mode, theta = gate
            amp = amp * np.exp(1j * theta * occ[:, mode])[:, None]
        else:
            raise ValueError(f"unknown gate {gate[0]}")
    return occ, amp


def sector_amplitudes(kind, total, signal_occs):
    """Amplitude matrix of a detection circuit on one photon-number sector.

    ``signal_occs`` lists the (n_s, n_r) inputs, all with n_s + n_r ==
    ``total``; ancilla modes start in vacuum.  Returns a CircuitAmplitudes
    whose counts follow the detector ordering of the scheme.
    """
    if kind == "shd":
        gates, n_modes, order = SHD_GATES, 3, SHD_COUNT_ORDER
    elif kind == "shed":
        gates, n_modes, order = SHED_GATES, 5, SHED_COUNT_ORDER
    else:
        raise ValueError(f"unknown detection kind {kind!r}")
    inputs = []
    for ns, nr in signal_occs:
        if ns + nr != total:
            raise ValueError("inputs must share the sector total")
        inputs.append((ns, nr) + (0,) * (n_modes - 2))
    occ, amp = evolve_basis_inputs(inputs, gates, n_modes)
    return CircuitAmplitudes(counts=occ[:, list(order)], matrix=amp)
