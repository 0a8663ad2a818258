"""Trellis search over per-iteration message lengths.

Finds the sequence of message lengths minimizing the total number of
sub-iterations (sum of lengths) needed for density evolution to converge,
pruning paths per quantized syndrome-information state: among same-depth
paths in the same state bin only the cheapest survives.  Each surviving node
carries the full DE state of its path, not just the scalar state, because
two paths with equal quantized information can still evolve differently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams
from .messages import (
    DEFAULT_L_MAX,
    ROW_SEMANTICS_STATE,
    W2LTable,
    build_w2l_row,
    fill_from_nearest,
    quantize_state,
)
from .density import (
    I_S_CONVERGED,
    WeightDistribution,
    channel_weight_distribution,
    cnd_de_step,
    syndrome_de,
    vnd_de_step,
)


@dataclass
class LengthSchedule:
    """Optimized per-iteration message lengths and the live decoding policy.

    q_star is the optimal path found by the search; f_q maps a quantized
    syndrome-information bin to the message length chosen from that state.
    Bin 0 doubles as the start state (no messages carry zero information).
    """

    q_star: list
    f_q: list
    bins: int
    q_max: int
    design_snr_db: float
    total_cost: int
    converged: bool = True

    def __post_init__(self):
        self.q_star = [int(q) for q in self.q_star]
        self.f_q = [int(q) for q in self.f_q]
        if len(self.f_q) != self.bins:
            raise ValueError("f_q must cover every bin")
        if any(not 1 <= q <= self.q_max for q in self.q_star + self.f_q):
            raise ValueError("message lengths must lie in [1, q_max]")
        if self.total_cost != sum(self.q_star):
            raise ValueError("total_cost must equal sum(q_star)")

    def to_json_dict(self) -> dict:
        return {
            "q_star": self.q_star,
            "f_q": self.f_q,
            "bins": self.bins,
            "q_max": self.q_max,
            "design_snr_db": self.design_snr_db,
            "total_cost": self.total_cost,
            "converged": self.converged,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LengthSchedule":
        return cls(
            q_star=d["q_star"],
            f_q=d["f_q"],
            bins=d["bins"],
            q_max=d["q_max"],
            design_snr_db=d["design_snr_db"],
            total_cost=d["total_cost"],
            converged=d.get("converged", True),
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, sort_keys=True, indent=1)

    @classmethod
    def load(cls, path) -> "LengthSchedule":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


def _trellis_state(i_s: float, levels: int) -> int:
    """Search-state quantizer: uniform up to 0.9, logarithmic in the gap above.

    Uniform quantization cannot resolve the convergence end-game: every
    nearly-finished path (gap anywhere in [1e-9, 5e-2]) would share the top
    state and lose the cost contest against slow cheap paths.  Half the
    levels cover [0, 0.9) uniformly, the rest split the gap decades
    [1e-9, 1e-1] so fast-converging paths stay distinguishable.
    """
    low = levels // 2
    if i_s < 0.9:
        return int(i_s / 0.9 * low)
    gap = max(1.0 - i_s, 1e-9)
    frac = min(math.log10(0.1 / gap) / 8.0, 1.0)
    return low + int(frac * (levels - low - 1))


@dataclass
class _Node:
    """One surviving trellis node: quantized state plus full DE state."""

    bin: int
    cost: int
    i_s: float
    c2v: WeightDistribution | None  # None only at the root
    q_in: int  # length chosen on the incoming branch (0 at the root)
    parent: "_Node | None" = field(default=None, repr=False)
    depth: int = 0


def _expand(node: _Node, q: int, params: ChannelParams, dv: int, dc: int, l_max: float):
    """One DE iteration at length q from a node's carried state."""
    if node.c2v is None:
        v2c = channel_weight_distribution(params, q)
    else:
        row = build_w2l_row(node.c2v.pmf, l_max)
        v2c = vnd_de_step(node.c2v, row, dv, params, q)
    c2v = cnd_de_step(v2c, dc)
    _, i_s = syndrome_de(v2c, dc)
    return c2v, i_s


def optimize(
    params: ChannelParams,
    dv: int,
    dc: int,
    q_max: int,
    bins: int = 20,
    max_depth: int = 150,
    l_max: float = DEFAULT_L_MAX,
    trellis_levels: int = 200,
) -> LengthSchedule:
    """Search the length trellis for the cheapest path to convergence.

    Breadth-first over depth; per (depth, quantized state) only the
    least-cost node survives, with deterministic tie-breaking (smaller
    branch length, then smaller predecessor state).  The search ends once no
    surviving path could still beat the best terminal (every further branch
    costs at least 1), or at max_depth.  If no path converges within
    max_depth a best-effort schedule is returned with converged=False.

    The search itself quantizes the syndrome information to trellis_levels
    states: the runtime granularity (bins, typically 20) is far too coarse
    for pruning, because near convergence a whole range of nearly-finished
    paths would collapse into the top bin and lose cost contests against
    slow cheap paths.  The found path is then projected onto the `bins`
    runtime quantization to form f_q.
    """
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if trellis_levels < bins:
        raise ValueError("trellis_levels must be at least bins")
    root = _Node(bin=0, cost=0, i_s=0.0, c2v=None, q_in=0)
    frontier = {0: root}
    best_terminal = None
    best_effort = root
    for depth in range(1, max_depth + 1):
        candidates: dict = {}
        for prev_bin in sorted(frontier):
            node = frontier[prev_bin]
            if best_terminal is not None and node.cost + 1 >= best_terminal.cost:
                continue  # no extension of this node can beat the terminal
            for q in range(1, q_max + 1):
                c2v, i_s = _expand(node, q, params, dv, dc, l_max)
                child = _Node(
                    bin=_trellis_state(i_s, trellis_levels),
                    cost=node.cost + q,
                    i_s=i_s,
                    c2v=c2v,
                    q_in=q,
                    parent=node,
                    depth=depth,
                )
                if i_s >= I_S_CONVERGED:
                    if best_terminal is None or _terminal_key(child) < _terminal_key(best_terminal):
                        best_terminal = child
                    continue
                held = candidates.get(child.bin)
                if held is None or _prune_key(child) < _prune_key(held):
                    candidates[child.bin] = child
        # dominance: one survivor per bin, each at the bin's minimum cost
        assert len({c.bin for c in candidates.values()}) == len(candidates)
        frontier = candidates
        for node in frontier.values():
            if (node.i_s, -node.cost) > (best_effort.i_s, -best_effort.cost):
                best_effort = node
        if not frontier:
            break
        if best_terminal is not None:
            cheapest_alive = min(node.cost for node in frontier.values())
            if cheapest_alive + 1 >= best_terminal.cost:
                break

    if best_terminal is not None:
        chosen, converged = best_terminal, True
    else:
        chosen, converged = best_effort, False
    q_star = _backtrack(chosen)
    if not q_star:
        raise RuntimeError("optimizer found no usable path")
    f_q = _policy_from_path(chosen, bins)
    return LengthSchedule(
        q_star=q_star,
        f_q=f_q,
        bins=bins,
        q_max=q_max,
        design_snr_db=params.ebno_db,
        total_cost=sum(q_star),
        converged=converged,
    )


def _prune_key(node: _Node):
    return (node.cost, node.q_in, node.parent.bin if node.parent else -1)


def _terminal_key(node: _Node):
    return (node.cost, node.depth, node.q_in, node.parent.bin if node.parent else -1)


def _backtrack(node: _Node) -> list:
    path = []
    while node.parent is not None:
        path.append(node.q_in)
        node = node.parent
    return path[::-1]


def _path_nodes(node: _Node) -> list:
    nodes = []
    while node is not None:
        nodes.append(node)
        node = node.parent
    return nodes[::-1]


def _policy_from_path(leaf: _Node, bins: int) -> list:
    """Live-decoding policy f_q from the optimal path, shaped for robustness.

    The raw policy maps each visited bin (runtime quantization, latest visit
    wins) to the length chosen from it, with unvisited bins filled from the
    nearest populated one.  The raw map is then made monotone non-increasing
    in the bin (suffix maximum).  The shaping matters at finite length: the
    optimal path probes its first iterations with very short messages, so
    the raw map sends any frame whose measured state falls into a low bin
    back to those probe lengths -- but short messages cannot lift a stuck
    frame out of a low-information state (they sit below their own
    convergence threshold there), which turns the probe lengths into a
    deadlock.  A frame in a worse state never gets a shorter message than a
    frame in a better one.
    """
    nodes = _path_nodes(leaf)
    visits = {}
    for parent, child in zip(nodes, nodes[1:]):
        visits[quantize_state(parent.i_s, bins)] = child.q_in
    raw = fill_from_nearest(visits, bins)
    shaped = list(raw)
    for b in range(bins - 2, -1, -1):
        shaped[b] = max(shaped[b], shaped[b + 1])
    return shaped


def tables_for_schedule(
    schedule: LengthSchedule,
    params: ChannelParams,
    dv: int,
    dc: int,
    l_max: float = DEFAULT_L_MAX,
) -> W2LTable:
    """State-indexed W2L table for decoding with a length schedule.

    Each bin's row predicts the weight distribution of the messages
    produced by running one iteration at f_q(bin) from the bin's
    representative ensemble state: the latest state of the optimal path
    whose syndrome information falls in that bin (the channel-only
    pre-decoding state stands in for bin 0 when the path never visits it).
    A row's length is therefore f_q(bin)+1 -- exactly the messages the
    decoder converts after launching an iteration from that state.
    Unvisited bins inherit the representative state of the nearest
    populated bin, lower preferred.
    """
    # representative state per bin: the messages in flight (c2v), or None
    # for the channel-only state before any iteration
    rep: dict = {0: None}
    c2v = None
    for q in schedule.q_star:
        if c2v is None:
            v2c = channel_weight_distribution(params, q)
        else:
            row = build_w2l_row(c2v.pmf, l_max)
            v2c = vnd_de_step(c2v, row, dv, params, q)
        _, i_s = syndrome_de(v2c, dc)
        c2v = cnd_de_step(v2c, dc)
        rep[quantize_state(i_s, schedule.bins)] = c2v
    states = fill_from_nearest(rep, schedule.bins)
    rows = []
    for b, state in enumerate(states):
        q = schedule.f_q[b]
        if state is None:
            v2c = channel_weight_distribution(params, q)
        else:
            row = build_w2l_row(state.pmf, l_max)
            v2c = vnd_de_step(state, row, dv, params, q)
        produced = cnd_de_step(v2c, dc)
        rows.append(build_w2l_row(produced.pmf, l_max))
    return W2LTable(
        rows=rows,
        row_semantics=ROW_SEMANTICS_STATE,
        l_max=l_max,
        bins=schedule.bins,
        design_snr_db=schedule.design_snr_db,
    )
