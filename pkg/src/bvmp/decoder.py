"""Iterative binary-vector message passing decoder on the Tanner graph.

Per iteration the variable nodes convert incoming vector weights to L-values
through a look-up table, add them to the channel L-value, and emit fresh
random vectors whose weight encodes the extrinsic reliability; check nodes
XOR bit-wise.  The syndrome information (mutual information between syndrome
bits and syndrome-message weights) is measured every iteration and drives,
depending on the mode, the table row selection, the message length, and an
additional stopping rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .code import LdpcCode, syndrome_check
from .messages import (
    W2LTable,
    prob_to_weight,
    quantize_state,
    sample_vector,
    syndrome_information,
)

MODE_ITERATION = "iteration_tables"
MODE_STATE_FIXED = "state_tables_fixed_Q"
MODE_STATE_ADAPTIVE = "state_tables_adaptive_Q"
MODES = (MODE_ITERATION, MODE_STATE_FIXED, MODE_STATE_ADAPTIVE)

STOP_SYNDROME = "syndrome"
STOP_STALL = "stall"
STOP_MAX_ITERATIONS = "max_iterations"

# resolution at which syndrome-information improvements are compared
STALL_RESOLUTION_DIGITS = 6


@dataclass
class DecoderState:
    """Measured syndrome information and its quantized bin."""

    i_s: float
    bin: int


@dataclass
class DecoderConfig:
    mode: str
    tables: W2LTable
    q_fixed: int | None = None
    schedule: "LengthSchedule | None" = None
    max_iterations: int = 100
    stall_window: int = 10
    state_bins: int = 20
    stall_enabled: bool | None = None
    record_edge_histograms: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown decoder mode {self.mode!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")
        if self.mode == MODE_STATE_ADAPTIVE:
            if self.schedule is None:
                raise ValueError("adaptive mode requires a length schedule")
            if self.schedule.bins != self.state_bins:
                raise ValueError("schedule bins disagree with state_bins")
            for b, q in enumerate(self.schedule.f_q):
                row = self.tables.row_for_bin(b)
                if row.size != q + 1:
                    raise ValueError(
                        f"state row {b} serves q={row.size - 1}, schedule wants {q}"
                    )
        else:
            if self.q_fixed is None or self.q_fixed < 1:
                raise ValueError("fixed-length modes require q_fixed >= 1")
            lengths = set(self.tables.row_lengths)
            if lengths != {self.q_fixed}:
                raise ValueError(f"table rows serve {lengths}, expected {{{self.q_fixed}}}")
        if self.mode == MODE_ITERATION:
            if self.tables.row_semantics != "iteration":
                raise ValueError("iteration mode requires an iteration-indexed table")
        else:
            if self.tables.row_semantics != "state":
                raise ValueError("state modes require a state-indexed table")
            if self.tables.bins != self.state_bins:
                raise ValueError("table bins disagree with state_bins")

    @property
    def stall_active(self) -> bool:
        """Stall stopping defaults to on for state modes, off for the baseline."""
        if self.stall_enabled is not None:
            return self.stall_enabled
        return self.mode != MODE_ITERATION


@dataclass
class DecodeResult:
    bits: np.ndarray
    success: bool
    iterations: int
    sub_iterations: int
    trace: list  # per-iteration (q, i_s)
    stop_reason: str
    v2c_weight_hists: list | None = field(default=None, repr=False)


def vnd_update(l_ch: float, incoming, table_row, q_out: int, rng):
    """Variable-node update for a single node.

    Converts each incoming vector's weight to an a-priori L-value via
    table_row, forms per-edge extrinsic L-values (channel plus all other
    edges), and emits one random vector of length q_out per edge.  Returns
    (outgoing messages, a-posteriori L-value).
    """
    incoming = np.asarray(incoming, dtype=np.uint8)
    if incoming.ndim != 2:
        raise ValueError("incoming must be (dv, q_in)")
    table_row = np.asarray(table_row, dtype=float)
    if table_row.size != incoming.shape[1] + 1:
        raise ValueError("table row does not serve the incoming message length")
    l_av = table_row[incoming.sum(axis=1)]
    app = l_ch + l_av.sum()
    l_ev = app - l_av
    weights = prob_to_weight(expit(-l_ev), q_out)
    outgoing = np.stack([sample_vector(int(w), q_out, rng) for w in weights])
    return outgoing, app


def cnd_update(incoming):
    """Check-node update: per-edge XOR of all other incoming messages.

    Implemented as total XOR followed by backing out each edge's own
    message, which equals the direct (dc-1)-fold XOR.
    """
    incoming = np.asarray(incoming, dtype=np.uint8)
    if incoming.ndim != 2:
        raise ValueError("incoming must be (dc, q)")
    total = np.bitwise_xor.reduce(incoming, axis=0)
    return total ^ incoming


def measure_state(messages, q: int, state_bins: int = 20) -> DecoderState:
    """Syndrome information of the a-priori messages at all check nodes.

    messages has shape (num_checks, dc, q).  The syndrome message of a check
    is the XOR of all its incoming vectors; its weight distribution over the
    checks yields the information measure.
    """
    messages = np.asarray(messages, dtype=np.uint8)
    if messages.ndim != 3 or messages.shape[0] == 0:
        raise ValueError("messages must be non-empty (num_checks, dc, q)")
    if messages.shape[2] != q:
        raise ValueError("message length disagrees with q")
    total = np.bitwise_xor.reduce(messages, axis=1)
    pmf = np.bincount(total.sum(axis=1), minlength=q + 1) / messages.shape[0]
    i_s = syndrome_information(pmf)
    return DecoderState(i_s=i_s, bin=quantize_state(i_s, state_bins))


# Messages travel bit-packed through the decoding loop: one integer per
# edge, XOR and popcount instead of per-bit array work.  For q <= _MASK_Q
# a uniform fixed-weight draw is a table lookup into all masks of that
# weight; longer messages fall back to rank-based sampling plus packing.
_MASK_Q = 20
_MAX_DECODE_Q = 64
_MASK_TABLES: dict = {}


def _mask_table(q: int):
    if q not in _MASK_TABLES:
        masks = np.arange(1 << q, dtype=np.uint64)
        weights = np.bitwise_count(masks)
        order = np.argsort(weights, kind="stable")
        counts = np.bincount(weights, minlength=q + 1).astype(np.int64)
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        _MASK_TABLES[q] = (masks[order], counts, starts)
    return _MASK_TABLES[q]


def _sample_packed(weights: np.ndarray, q: int, rng) -> np.ndarray:
    """Uniform random fixed-weight vectors for every edge, bit-packed."""
    flat = weights.ravel()
    if q <= _MASK_Q:
        masks, counts, starts = _mask_table(q)
        # floor(u * count) is uniform to ~2^-53, far below Monte-Carlo noise
        idx = starts[flat] + (rng.random(flat.size) * counts[flat]).astype(np.int64)
        return masks[idx]
    if q > _MAX_DECODE_Q:
        raise ValueError(f"decode supports message lengths up to {_MAX_DECODE_Q}")
    u = rng.random((flat.size, q))
    ranks = u.argsort(axis=1, kind="stable").argsort(axis=1, kind="stable")
    bits = (ranks < flat[:, None]).astype(np.uint64)
    return (bits << np.arange(q, dtype=np.uint64)).sum(axis=1)


def decode(code: LdpcCode, l_ch, config: DecoderConfig, rng) -> DecodeResult:
    """Run the iterative decoder on one frame of channel L-values."""
    rng = np.random.default_rng(rng)
    l_ch = np.asarray(l_ch, dtype=float)
    if l_ch.shape != (code.n,):
        raise ValueError(f"expected {code.n} channel L-values")
    n, dv, m, dc = code.n, code.dv, code.m, code.dc
    num_edges = code.num_edges
    perm = code.perm_cm
    tables = config.tables
    adaptive = config.mode == MODE_STATE_ADAPTIVE

    if adaptive:
        f_q = config.schedule.f_q
        q_cur = f_q[0]  # start state: no messages, zero syndrome information
        prev_bin = 0
    else:
        q_cur = config.q_fixed

    l_av = None  # (n, dv) a-priori L-values from the last table conversion
    best_i_s = -np.inf
    last_improve = 1
    trace = []
    hists = [] if config.record_edge_histograms else None
    sub_iterations = 0
    stop_reason = STOP_MAX_ITERATIONS
    success = False
    x_hat = (l_ch < 0).astype(np.uint8)

    for it in range(1, config.max_iterations + 1):
        # variable nodes: extrinsic L-values and fresh vector messages
        if l_av is None:
            app = l_ch
            l_ev = np.broadcast_to(l_ch[:, None], (n, dv))
        else:
            app = l_ch + l_av.sum(axis=1)
            l_ev = app[:, None] - l_av
        # rnd(p * q) with p in [0, 1]: half-away equals floor(x + 0.5)
        w_out = np.floor(expit(-l_ev) * q_cur + 0.5).astype(np.int64)
        v2c = _sample_packed(w_out, q_cur, rng)
        if hists is not None:
            hists.append(np.bincount(w_out.ravel(), minlength=q_cur + 1))

        # check nodes: total XOR, then back out each edge's own message
        cm = v2c[perm].reshape(m, dc)
        total = np.bitwise_xor.reduce(cm, axis=1)
        c2v = np.empty_like(v2c)
        c2v[perm] = (total[:, None] ^ cm).ravel()

        # decoder state from the syndrome messages (the CND inputs)
        pmf = np.bincount(np.bitwise_count(total), minlength=q_cur + 1) / m
        i_s = syndrome_information(pmf)
        cur_bin = quantize_state(i_s, config.state_bins)
        trace.append((q_cur, i_s))
        sub_iterations += q_cur

        x_hat = (app < 0).astype(np.uint8)
        if syndrome_check(code, x_hat):
            success = True
            stop_reason = STOP_SYNDROME
            break
        if it == config.max_iterations:
            stop_reason = STOP_MAX_ITERATIONS
            break
        if config.stall_active:
            rounded = round(i_s, STALL_RESOLUTION_DIGITS)
            if rounded > best_i_s:
                best_i_s = rounded
                last_improve = it
            elif it - last_improve >= config.stall_window:
                stop_reason = STOP_STALL
                break

        # select the row converting this iteration's c2v, and the next length
        if config.mode == MODE_ITERATION:
            row = tables.row_for_iteration(it)
        elif config.mode == MODE_STATE_FIXED:
            row = tables.row_for_bin(cur_bin)
        else:
            row = tables.row_for_bin(prev_bin)
            prev_bin = cur_bin
        assert row.size == q_cur + 1
        l_av = row[np.bitwise_count(c2v).reshape(n, dv)]
        if adaptive:
            q_cur = f_q[cur_bin]

    return DecodeResult(
        bits=x_hat,
        success=success,
        iterations=len(trace),
        sub_iterations=sub_iterations,
        trace=trace,
        stop_reason=stop_reason,
        v2c_weight_hists=hists,
    )
