"""Deviation bounds between squashed ideal detectors and the implemented
beamsplitter schemes.

Each check evaluates both sides of one inequality on a concrete state: the
ideal side through the squashing map, the implemented side through the
detection statistics, and the correction term that bounds their deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import (
    HOM_THETAS,
    Backend,
    CoherentPair,
    SignalWithLO,
    alpha_theta_moment,
    het_statistics,
    hom_statistics,
    hybrid_statistics,
    pair_statistics,
)
from .fock import (
    ModeSpace,
    as_density,
    coherent_state,
    embed_operator,
    expectation,
    quadrature_operator,
    tensor_product,
)
from .squash import (
    het_moment_operator,
    quadrature_squared,
    squash,
    squash_adjoint,
    squash_adjoint_coherent_lo,
    symmetrized_xp,
)

__all__ = [
    "BOUND_CONSTANTS",
    "MomentComparison",
    "CertifiedInterval",
    "check_theorem1",
    "check_theorem4",
    "check_theorem2",
    "check_theorem3_6",
    "certified_interval",
]

SLACK_TOL = 1e-9
DEFICIT_TOL = 1e-6

# (lower, upper) coefficients of the correction statistic: the ideal-side
# moment minus the implemented-side moment lies in [-lower*d, +upper*d].
BOUND_CONSTANTS = {
    "LH_1": (0.525, 0.525),
    "LH_2": (0.162, 1.085),
    "LH_2_m": (0.622, 0.622),
    "LH_LH": (0.605, 0.605),
    "LE_1": (0.226, 0.226),
    "LE_2": (0.084, 1.0),
    "LE_2_m": (0.5, 0.5),
    "LE_LE": (0.160, 0.160),
    "LH_LE": (0.371, 0.371),
    "GH_LH": (0.605, 0.605),
    "GH_LE": (0.261, 0.261),
    "GE_LE": (0.160, 0.160),
    "GE_LH": (0.371, 0.371),
}


@dataclass
class MomentComparison:
    theorem: str
    lhs_deviation: float
    rhs_bound: float
    slack: float
    satisfied: bool
    truncation_deficit: float
    rhs_bound_lower: float | None = None
    verdict: str = "satisfied"


def _compare(theorem, deviation, d_value, deficit):
    lower, upper = BOUND_CONSTANTS[theorem]
    if lower == upper:
        rhs = upper * d_value
        slack = rhs - abs(deviation)
        lower_bound = None
    else:
        rhs = upper * d_value
        lower_bound = lower * d_value
        slack = min(rhs - deviation, deviation + lower_bound)
    satisfied = slack >= -SLACK_TOL
    if deficit > DEFICIT_TOL:
        verdict = "indeterminate"
    else:
        verdict = "satisfied" if satisfied else "violated"
    return MomentComparison(
        theorem=theorem,
        lhs_deviation=float(deviation),
        rhs_bound=float(rhs),
        slack=float(slack),
        satisfied=bool(satisfied),
        truncation_deficit=float(deficit),
        rhs_bound_lower=lower_bound if lower_bound is None else float(lower_bound),
        verdict=verdict,
    )


def _squashed_ideal_moments(state, theta, backend):
    """(first, second, cross) moments of the squashed state, where cross is
    the symmetrized xp moment; plus the deficit."""
    if backend == Backend.COHERENT_LO:
        if isinstance(state, CoherentPair):
            sig = coherent_state(state.alpha).to_density()
            beta = state.beta
        else:
            sig, beta = as_density(state.signal), state.beta
        c = sig.space.cutoffs[0]
        vals = []
        for op in (quadrature_operator(theta, c), quadrature_squared(theta, c), symmetrized_xp(c)):
            pulled = squash_adjoint_coherent_lo(op, beta, c)
            vals.append(float(np.einsum("ij,ji->", pulled, sig.matrix).real))
        return vals[0], vals[1], vals[2], sig.trace_deficit
    rho2 = _materialize_two_mode(state)
    rho_v = squash(rho2)
    c = rho_v.space.cutoffs[0]
    first = float(np.einsum("ij,ji->", quadrature_operator(theta, c), rho_v.matrix).real)
    second = float(np.einsum("ij,ji->", quadrature_squared(theta, c), rho_v.matrix).real)
    cross = float(np.einsum("ij,ji->", symmetrized_xp(c), rho_v.matrix).real)
    return first, second, cross, rho_v.trace_deficit


def _materialize_two_mode(state):
    if isinstance(state, CoherentPair):
        return tensor_product(coherent_state(state.alpha), coherent_state(state.beta)).to_density()
    if isinstance(state, SignalWithLO):
        return tensor_product(as_density(state.signal), coherent_state(state.beta).to_density())
    return as_density(state)


def check_theorem1(state, theta=0.0, backend=Backend.EXACT_FOCK):
    """First moment, second moment, and mixed-quadrature comparisons for the
    two-detector scheme.  Returns three MomentComparisons."""
    ideal_x, ideal_x2, ideal_cross, deficit_i = _squashed_ideal_moments(state, theta, backend)
    stats = hom_statistics(state, backend, thetas=(theta,) + HOM_THETAS)
    deficit = max(deficit_i, stats["mass_deficit"])
    d = stats["d_hom"]
    out = [
        _compare("LH_1", ideal_x - stats["z"][theta], d, deficit),
        _compare("LH_2", ideal_x2 - stats["z2"][theta], d, deficit),
    ]
    measured_cross = (stats["z2"][np.pi / 4.0] - stats["z2"][3.0 * np.pi / 4.0]) / 2.0
    out.append(_compare("LH_2_m", ideal_cross - measured_cross, d, deficit))
    return out


def check_theorem4(state, theta=0.0, backend=Backend.EXACT_FOCK):
    """Same comparisons for the four-detector scheme."""
    ideal_x, ideal_x2, ideal_cross, deficit_i = _squashed_ideal_moments(state, theta, backend)
    stats = het_statistics(state, backend)
    deficit = max(deficit_i, stats["mass_deficit"])
    d = stats["d_het"]
    # the ideal second-moment observable carries a vacuum offset of 1/4
    out = [
        _compare("LE_1", ideal_x - alpha_theta_moment(stats, theta), d, deficit),
        _compare("LE_2", (ideal_x2 + 0.25) - alpha_theta_moment(stats, theta, order=2), d, deficit),
        _compare("LE_2_m", ideal_cross - stats["reim"], d, deficit),
    ]
    return out


_PAIR_IDS = {
    ("hom", "hom"): "LH_LH",
    ("het", "het"): "LE_LE",
    ("hom", "het"): "LH_LE",
    ("het", "hom"): "LH_LE",
}


def check_theorem2(state, kinds=("hom", "hom"), thetas=(0.0, 0.0), backend=Backend.EXACT_FOCK, lo_betas=None):
    """Correlation comparison for two independently measured pairs.

    ExactFock: ``state`` is a 4-mode state on (s1, r1, s2, r2).
    CoherentLO: two-mode signal state plus ``lo_betas``.
    """
    stats = pair_statistics(state, kinds, thetas, backend, lo_betas=lo_betas)
    if backend == Backend.EXACT_FOCK:
        rho = as_density(state)
        sub1 = ModeSpace(tuple(rho.space.cutoffs[m] for m in (0, 1)), rho.space.total_cutoff)
        sub2 = ModeSpace(tuple(rho.space.cutoffs[m] for m in (2, 3)), rho.space.total_cutoff)
        x1 = squash_adjoint(_ideal_outcome_op(sub1, thetas[0]), sub1)
        x2 = squash_adjoint(_ideal_outcome_op(sub2, thetas[1]), sub2)
        full = embed_operator(rho.space, [((0, 1), x1, sub1), ((2, 3), x2, sub2)])
        ideal = float(np.einsum("ij,ji->", full, rho.matrix).real)
        deficit = max(rho.trace_deficit, stats["mass_deficit"])
    elif backend == Backend.COHERENT_LO:
        rho = as_density(state)
        sc1, sc2 = rho.space.cutoffs
        x1 = squash_adjoint_coherent_lo(quadrature_operator(thetas[0], sc1), lo_betas[0], sc1)
        x2 = squash_adjoint_coherent_lo(quadrature_operator(thetas[1], sc2), lo_betas[1], sc2)
        full = embed_operator(rho.space, [((0,), x1, ModeSpace((sc1,))), ((1,), x2, ModeSpace((sc2,)))])
        ideal = float(np.einsum("ij,ji->", full, rho.matrix).real)
        deficit = max(rho.trace_deficit, stats["mass_deficit"])
    else:
        raise ValueError("check_theorem2 supports ExactFock and CoherentLO backends")
    theorem = _PAIR_IDS[tuple(kinds)]
    return _compare(theorem, ideal - stats["corr"], stats["d"], deficit)


def _ideal_outcome_op(sub, theta):
    cv = sub.total_cutoff if sub.total_cutoff is not None else sub.cutoffs[0] + sub.cutoffs[1]
    return quadrature_operator(theta, cv)


def check_theorem3_6(state, first=("hom", 0.0), second=("shd", 0.0), backend=Backend.EXACT_FOCK, lo_beta=None):
    """Comparison for an ideal detector on mode 1 correlated with the
    implemented scheme on pair 2."""
    fkind, phi = first
    skind, theta = second
    stats = hybrid_statistics(state, first, second, backend, lo_beta=lo_beta)
    if backend == Backend.EXACT_FOCK:
        rho = as_density(state)
        c1 = rho.space.cutoffs[0]
        sub1 = ModeSpace((c1,), rho.space.total_cutoff)
        sub = ModeSpace(tuple(rho.space.cutoffs[m] for m in (1, 2)), rho.space.total_cutoff)
        xv = squash_adjoint(_ideal_outcome_op(sub, theta), sub)
        full = embed_operator(rho.space, [((0,), quadrature_operator(phi, c1), sub1), ((1, 2), xv, sub)])
        ideal = float(np.einsum("ij,ji->", full, rho.matrix).real)
        deficit = max(rho.trace_deficit, stats["mass_deficit"])
    elif backend == Backend.COHERENT_LO:
        rho = as_density(state)
        c1, sc2 = rho.space.cutoffs
        xv = squash_adjoint_coherent_lo(quadrature_operator(theta, sc2), lo_beta, sc2)
        full = embed_operator(
            rho.space, [((0,), quadrature_operator(phi, c1), ModeSpace((c1,))), ((1,), xv, ModeSpace((sc2,)))]
        )
        ideal = float(np.einsum("ij,ji->", full, rho.matrix).real)
        deficit = max(rho.trace_deficit, stats["mass_deficit"])
    else:
        raise ValueError("check_theorem3_6 supports ExactFock and CoherentLO backends")
    if fkind == "hom":
        theorem = "GH_LH" if skind == "shd" else "GH_LE"
        d = stats["x0sq_d"] + stats["xpi2sq_d"]
    else:
        theorem = "GE_LH" if skind == "shd" else "GE_LE"
        d = stats["gamma2_d"]
    return _compare(theorem, ideal - stats["corr"], d, deficit)


@dataclass
class CertifiedInterval:
    center: float
    lower: float
    upper: float
    bound_id: str
    truncation_deficit: float = 0.0

    def contains(self, value, tol=0.0):
        return self.lower - tol <= value <= self.upper + tol


def certified_interval(center, d_value, bound_id, truncation_deficit=0.0):
    """Interval guaranteed to contain the squashed ideal moment given the
    implemented moment ``center`` and correction statistic ``d_value``."""
    lower_c, upper_c = BOUND_CONSTANTS[bound_id]
    return CertifiedInterval(
        center=float(center),
        lower=float(center - lower_c * d_value),
        upper=float(center + upper_c * d_value),
        bound_id=bound_id,
        truncation_deficit=float(truncation_deficit),
    )
