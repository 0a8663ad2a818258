"""Exact density evolution for the binary vector message passing decoder.

Tracks the weight distribution p(w | X=0) of the vector messages over
decoding iterations under the all-zero-codeword, cycle-free assumption.  The
check-node step is an exact hypergeometric XOR fold (messages are uniform
over fixed-weight vectors, so the overlap of two vectors is hypergeometric);
the variable-node step convolves the discrete a-priori L-value atoms and
integrates the Gaussian channel L-value over the rounding intervals of the
weight mapping.  No Monte-Carlo noise enters the computed tables.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .channel import ChannelParams
from .messages import (
    DEFAULT_L_MAX,
    ROW_SEMANTICS_STATE,
    W2LTable,
    build_w2l_row,
    fill_from_nearest,
    quantize_state,
    syndrome_information,
)

I_S_CONVERGED = 1.0 - 1e-9

DEFAULT_ATOM_CAP = 1 << 20
DEFAULT_MERGE_TOL = 1e-12


@dataclass
class WeightDistribution:
    """Probability mass function over message weights 0..q, given X=0."""

    pmf: np.ndarray

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=float)
        if self.pmf.ndim != 1 or self.pmf.size < 1:
            raise ValueError("pmf must be a non-empty 1-d array")
        if np.any(self.pmf < 0):
            raise ValueError("pmf entries must be non-negative")
        if abs(self.pmf.sum() - 1.0) > 1e-9:
            raise ValueError(f"pmf not normalized: sum = {self.pmf.sum()!r}")
        self.pmf = self.pmf / self.pmf.sum()

    @property
    def q(self) -> int:
        return self.pmf.size - 1

    @classmethod
    def point_mass(cls, w: int, q: int) -> "WeightDistribution":
        pmf = np.zeros(q + 1)
        pmf[w] = 1.0
        return cls(pmf)


_XOR_KERNELS: dict = {}


def xor_fold_kernel(q: int) -> np.ndarray:
    """Kernel K[w1, w2, u] = P(weight of a XOR b = u | weights w1, w2).

    Both vectors are uniform over their fixed-weight sets, so the overlap k
    of their supports is hypergeometric and u = w1 + w2 - 2k.  Built from
    exact integer binomials.
    """
    if q in _XOR_KERNELS:
        return _XOR_KERNELS[q]
    k_tab = np.zeros((q + 1, q + 1, q + 1))
    for w1 in range(q + 1):
        for w2 in range(q + 1):
            denom = math.comb(q, w2)
            for k in range(max(0, w1 + w2 - q), min(w1, w2) + 1):
                u = w1 + w2 - 2 * k
                k_tab[w1, w2, u] += math.comb(w1, k) * math.comb(q - w1, w2 - k) / denom
    k_tab.setflags(write=False)
    _XOR_KERNELS[q] = k_tab
    return k_tab


def hypergeometric_xor_fold(
    p1: WeightDistribution, p2: WeightDistribution
) -> WeightDistribution:
    """Weight distribution of the XOR of two independent random vectors."""
    if p1.q != p2.q:
        raise ValueError(f"length mismatch: {p1.q} vs {p2.q}")
    k_tab = xor_fold_kernel(p1.q)
    out = np.einsum("i,j,iju->u", p1.pmf, p2.pmf, k_tab)
    out = np.clip(out, 0.0, None)
    return WeightDistribution(out / out.sum())


def cnd_de_step(v2c: WeightDistribution, dc: int) -> WeightDistribution:
    """Check-to-variable distribution: (dc-1)-fold XOR of the v2c input."""
    if dc < 2:
        raise ValueError("check degree must be at least 2")
    acc = v2c
    for _ in range(dc - 2):
        acc = hypergeometric_xor_fold(acc, v2c)
    return acc


def syndrome_de(v2c: WeightDistribution, dc: int):
    """Syndrome-message weight distribution (dc-fold XOR) and its information."""
    if dc < 1:
        raise ValueError("check degree must be at least 1")
    acc = v2c
    for _ in range(dc - 1):
        acc = hypergeometric_xor_fold(acc, v2c)
    return acc, syndrome_information(acc.pmf)


def weight_boundaries(q: int) -> np.ndarray:
    """Extrinsic L-value thresholds separating the output weights.

    The weight map w = rnd(q / (1 + exp(l))) is piecewise constant in l;
    boundary t[w] = ln(q/(w+0.5) - 1) separates weight w (above) from
    weight w+1 (below), for w = 0..q-1.
    """
    w = np.arange(q)
    return np.log(q / (w + 0.5) - 1.0)


def _interval_masses(shifts: np.ndarray, q: int, params: ChannelParams) -> np.ndarray:
    """P(output weight = w) per L-atom shift, integrating the channel Gaussian.

    Returns an array of shape (len(shifts), q+1); row i is the weight pmf for
    extrinsic L = l_ch + shifts[i] with l_ch ~ N(2/sigma2, 4/sigma2).
    """
    t = weight_boundaries(q)
    z = (t[None, :] - shifts[:, None] - params.llr_mean) / params.llr_std
    cdf = ndtr(z)
    out = np.empty((shifts.size, q + 1))
    out[:, 0] = 1.0 - cdf[:, 0]
    out[:, 1:q] = cdf[:, :-1] - cdf[:, 1:]
    out[:, q] = cdf[:, -1]
    return np.clip(out, 0.0, None)


def _merge_atoms(values, masses, tol):
    order = np.argsort(values, kind="stable")
    values, masses = values[order], masses[order]
    if values.size <= 1:
        return values, masses
    boundaries = np.flatnonzero(np.diff(values) > tol)
    starts = np.concatenate(([0], boundaries + 1))
    sums = np.add.reduceat(masses, starts)
    # mass-weighted representative keeps the merge deterministic and unbiased
    reps = np.add.reduceat(values * masses, starts) / np.where(sums > 0, sums, 1.0)
    return reps, sums


def vnd_de_step(
    c2v: WeightDistribution,
    table_row: np.ndarray,
    dv: int,
    params: ChannelParams,
    q_out: int,
    atom_cap: int = DEFAULT_ATOM_CAP,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> WeightDistribution:
    """Variable-to-check distribution after one variable-node update.

    The per-edge a-priori L-value is discrete with atoms
    {table_row[w]: c2v.pmf[w]}; dv-1 independent copies are convolved
    exactly, and for each atom the channel Gaussian mass of every output
    weight interval is accumulated.
    """
    table_row = np.asarray(table_row, dtype=float)
    if table_row.size != c2v.q + 1:
        raise ValueError(f"table row serves q={table_row.size - 1}, c2v has q={c2v.q}")
    values, masses = _merge_atoms(table_row.copy(), c2v.pmf.copy(), merge_tol)
    atoms_v = np.zeros(1)
    atoms_m = np.ones(1)
    for _ in range(dv - 1):
        v = np.add.outer(atoms_v, values).ravel()
        m = np.multiply.outer(atoms_m, masses).ravel()
        tol = merge_tol
        atoms_v, atoms_m = _merge_atoms(v, m, tol)
        while atoms_v.size > atom_cap:
            tol *= 10.0
            atoms_v, atoms_m = _merge_atoms(atoms_v, atoms_m, tol)
    pmf = atoms_m @ _interval_masses(atoms_v, q_out, params)
    return WeightDistribution(pmf / pmf.sum())


def channel_weight_distribution(params: ChannelParams, q: int) -> WeightDistribution:
    """Bootstrap v2c distribution when only the channel L-value is known."""
    pmf = _interval_masses(np.zeros(1), q, params)[0]
    return WeightDistribution(pmf / pmf.sum())


@dataclass
class DeState:
    """Density-evolution snapshot after one iteration."""

    iteration: int
    v2c: WeightDistribution
    c2v: WeightDistribution
    syndrome: WeightDistribution
    i_s: float
    q: int


@dataclass
class DeTrace:
    """Sequence of per-iteration DE states for one channel and ensemble."""

    states: list
    params: ChannelParams
    dv: int
    dc: int

    @property
    def converged(self) -> bool:
        return bool(self.states) and self.states[-1].i_s >= I_S_CONVERGED

    def to_json_dict(self) -> dict:
        return {
            "ebno_db": self.params.ebno_db,
            "rate": self.params.rate,
            "dv": self.dv,
            "dc": self.dc,
            "states": [
                {
                    "iteration": st.iteration,
                    "q": st.q,
                    "i_s": st.i_s,
                    "v2c_pmf": st.v2c.pmf.tolist(),
                    "c2v_pmf": st.c2v.pmf.tolist(),
                    "syndrome_pmf": st.syndrome.pmf.tolist(),
                }
                for st in self.states
            ],
        }

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, sort_keys=True, indent=1)


def _schedule_q(schedule, iteration: int) -> int:
    """Message length for a 1-based iteration under an int or sequence schedule."""
    if isinstance(schedule, (int, np.integer)):
        return int(schedule)
    seq = list(schedule)
    if not seq:
        raise ValueError("empty length schedule")
    return int(seq[min(iteration, len(seq)) - 1])


def run_de(
    params: ChannelParams,
    dv: int,
    dc: int,
    schedule,
    max_iterations: int = 100,
    l_max: float = DEFAULT_L_MAX,
) -> DeTrace:
    """Iterate exact DE from the channel-only bootstrap state.

    `schedule` is either a fixed message length (int) or a per-iteration
    sequence (repeating its last entry when exhausted).  Stops at
    max_iterations or when the syndrome information effectively reaches 1.
    """
    states = []
    c2v_prev = None
    for it in range(1, max_iterations + 1):
        q = _schedule_q(schedule, it)
        if c2v_prev is None:
            v2c = channel_weight_distribution(params, q)
        else:
            row = build_w2l_row(c2v_prev.pmf, l_max)
            v2c = vnd_de_step(c2v_prev, row, dv, params, q)
        c2v = cnd_de_step(v2c, dc)
        syndrome, i_s = syndrome_de(v2c, dc)
        states.append(DeState(it, v2c, c2v, syndrome, i_s, q))
        c2v_prev = c2v
        if i_s >= I_S_CONVERGED:
            break
    return DeTrace(states, params, dv, dc)


def build_iteration_tables(trace: DeTrace, l_max: float = DEFAULT_L_MAX) -> W2LTable:
    """One W2L row per iteration, from that iteration's c2v distribution."""
    if not trace.states:
        raise ValueError("empty DE trace")
    rows = [build_w2l_row(st.c2v.pmf, l_max) for st in trace.states]
    return W2LTable(
        rows=rows,
        row_semantics="iteration",
        l_max=l_max,
        design_snr_db=trace.params.ebno_db,
    )


def build_state_tables(
    trace: DeTrace, bins: int, l_max: float = DEFAULT_L_MAX
) -> W2LTable:
    """One W2L row per quantized syndrome-information bin.

    Each DE iteration contributes its c2v distribution to the bin of its
    i_s; colliding contributions are averaged with equal weights.  Bins DE
    never visited are filled from the nearest populated bin (lower
    preferred) so the live decoder degrades gracefully off the DE
    trajectory.
    """
    if bins < 2:
        raise ValueError("need at least 2 state bins")
    if not trace.states:
        raise ValueError("empty DE trace")
    collected: dict = {}
    for st in trace.states:
        collected.setdefault(quantize_state(st.i_s, bins), []).append(st.c2v.pmf)
    averaged = {
        b: build_w2l_row(np.mean(np.stack(pmfs), axis=0), l_max)
        for b, pmfs in collected.items()
    }
    rows = fill_from_nearest(averaged, bins)
    return W2LTable(
        rows=rows,
        row_semantics=ROW_SEMANTICS_STATE,
        l_max=l_max,
        bins=bins,
        design_snr_db=trace.params.ebno_db,
    )
