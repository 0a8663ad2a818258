"""Binary vector message primitives and weight-to-LLR look-up tables.

Messages exchanged on the Tanner graph are binary vectors of length Q; only
the Hamming weight of a vector carries information.  This module provides the
weight/probability/L-value conversions, random fixed-weight vector
realization, bit-wise XOR, the weight-to-LLR (W2L) table type with its JSON
serialization, and the syndrome-information measure used as decoder state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import entr, expit

DEFAULT_L_MAX = 25.0

ROW_SEMANTICS_ITERATION = "iteration"
ROW_SEMANTICS_STATE = "state"


def l_to_prob(l):
    """Convert an L-value into the probability that the bit equals one.

    p = 1 / (1 + exp(l)); positive L-values favor bit value zero.
    """
    return expit(-np.asarray(l, dtype=float))


def round_half_away(x):
    """Round to the nearest integer, halves away from zero.

    numpy.round uses banker's rounding, which would make 2.5 -> 2; the
    decoder needs the deterministic half-away convention (2.5 -> 3).
    """
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def prob_to_weight(p_ev, q: int):
    """Map a bit-one probability to the target message weight rnd(p * q)."""
    w = round_half_away(np.asarray(p_ev, dtype=float) * q)
    return np.clip(w, 0, q).astype(np.int64)


def sample_vector(weight: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a uniform random binary vector of length q with the given weight."""
    if not 0 <= weight <= q:
        raise ValueError(f"weight {weight} out of range [0, {q}]")
    # A random permutation of 0..q-1 marks a uniform weight-sized subset.
    return (rng.permutation(q) < weight).astype(np.uint8)


def xor_vectors(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Bit-wise XOR of two equal-length binary vectors."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a ^ b


def w2l_from_distribution(pmf, l_max: float = DEFAULT_L_MAX) -> np.ndarray:
    """Convert a weight distribution p(w | X=0) into a row of L-values.

    l[w] = ln(p[w] / p[q-w]) clamped to [-l_max, l_max].  When both masses
    vanish the weight is never observed and l[w] is 0; when exactly one
    vanishes the ratio diverges and l[w] saturates at +/- l_max.  The row is
    antisymmetric bit-exactly: l[w] == -l[q-w].
    """
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("pmf must be a non-empty 1-d array")
    if np.any(p < 0):
        raise ValueError("pmf entries must be non-negative")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"pmf not normalized: sum = {p.sum()!r}")
    q = p.size - 1
    row = np.zeros(q + 1)
    for w in range(q // 2 + 1):
        a, b = p[w], p[q - w]
        if a == 0.0 and b == 0.0:
            val = 0.0
        elif b == 0.0:
            val = l_max
        elif a == 0.0:
            val = -l_max
        else:
            val = min(max(math.log(a / b), -l_max), l_max)
        row[w] = val
        row[q - w] = -val
    if q % 2 == 0:
        row[q // 2] = 0.0
    return row


def enforce_monotone_antisymmetric(row, l_max: float = DEFAULT_L_MAX) -> np.ndarray:
    """Project a W2L row onto the monotone non-increasing antisymmetric cone.

    Finite-precision density evolution can produce tiny order inversions in a
    row; the true mapping from a consistent message distribution is monotone.
    Applies a pooled-adjacent-violators pass, restores exact antisymmetry by
    averaging l[w] against -l[q-w], and re-clamps.  Both post-passes preserve
    monotonicity.
    """
    row = np.asarray(row, dtype=float)
    iso = isotonic_regression(row, increasing=False).x
    anti = 0.5 * (iso - iso[::-1])
    return np.clip(anti, -l_max, l_max)


def build_w2l_row(pmf, l_max: float = DEFAULT_L_MAX) -> np.ndarray:
    """Full table-row pipeline: ratio row, then the monotone/antisymmetric pass."""
    return enforce_monotone_antisymmetric(w2l_from_distribution(pmf, l_max), l_max)


_LN2 = math.log(2.0)


def entropy_bits(pmf) -> float:
    """Entropy of a pmf in bits, with 0*log(0) = 0."""
    return float(entr(np.asarray(pmf, dtype=float)).sum() / _LN2)


def syndrome_information(pmf) -> float:
    """Decoder-state scalar from a syndrome-message weight distribution.

    I_S = H( (p(w) + p(q-w)) / 2 ) - H( p(w) ), in bits: the average
    bit-wise mutual information between a syndrome bit and the weight of its
    syndrome message.  Always in [0, 1]; 1 means the weights identify the
    syndrome bits perfectly, 0 means they are uninformative.
    """
    p = np.asarray(pmf, dtype=float)
    if np.array_equal(p, p[::-1]):
        return 0.0
    sym = 0.5 * (p + p[::-1])
    val = entropy_bits(sym) - entropy_bits(p)
    return float(min(max(val, 0.0), 1.0))


def quantize_state(i_s: float, bins: int) -> int:
    """Uniformly quantize a syndrome-information value into a bin index."""
    return min(int(i_s * bins), bins - 1)


def fill_from_nearest(present: dict, bins: int) -> list:
    """Fill missing bin slots from the nearest populated bin, lower preferred.

    `present` maps bin index -> value for the populated bins.
    """
    if not present:
        raise ValueError("no populated bins to fill from")
    keys = sorted(present)
    out = []
    for b in range(bins):
        best = min(keys, key=lambda k: (abs(k - b), k))
        out.append(present.get(b, present[best]))
    return out


@dataclass
class W2LTable:
    """Look-up table from message weight to a-priori L-value.

    One row per iteration (row_semantics="iteration") or per quantized
    syndrome-information bin (row_semantics="state").  Rows may serve
    different message lengths q (length-optimized schedules); each row has
    length q_row + 1.  Rows are antisymmetric (l[w] == -l[q-w] bit-exactly),
    monotone non-increasing and bounded by l_max.
    """

    rows: list = field(default_factory=list)
    row_semantics: str = ROW_SEMANTICS_ITERATION
    l_max: float = DEFAULT_L_MAX
    bins: int | None = None
    design_snr_db: float | None = None

    def __post_init__(self):
        self.rows = [np.asarray(r, dtype=float) for r in self.rows]
        if self.row_semantics not in (ROW_SEMANTICS_ITERATION, ROW_SEMANTICS_STATE):
            raise ValueError(f"unknown row semantics {self.row_semantics!r}")
        if self.row_semantics == ROW_SEMANTICS_STATE:
            if self.bins is None:
                self.bins = len(self.rows)
            if self.bins != len(self.rows):
                raise ValueError("state table must carry one row per bin")

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def row_lengths(self) -> list:
        return [r.size - 1 for r in self.rows]

    @property
    def q(self):
        """Message length served: an int when uniform, else per-row lengths."""
        lengths = self.row_lengths
        if len(set(lengths)) == 1:
            return lengths[0]
        return lengths

    @property
    def bin_edges(self):
        if self.row_semantics != ROW_SEMANTICS_STATE:
            return None
        return np.linspace(0.0, 1.0, self.bins + 1)

    def row_for_iteration(self, iteration: int) -> np.ndarray:
        """Row for a 1-based decoding iteration; clamps past the last row."""
        if iteration < 1:
            raise ValueError("iterations are 1-based")
        return self.rows[min(iteration, self.num_rows) - 1]

    def row_for_bin(self, b: int) -> np.ndarray:
        if not 0 <= b < self.bins:
            raise ValueError(f"bin {b} out of range")
        return self.rows[b]

    def validate(self):
        """Re-check all table invariants; raises ValueError on violation."""
        for i, row in enumerate(self.rows):
            if not np.all(np.isfinite(row)):
                raise ValueError(f"row {i} has non-finite entries")
            if np.any(np.abs(row) > self.l_max):
                raise ValueError(f"row {i} exceeds l_max {self.l_max}")
            if not np.array_equal(row, -row[::-1]):
                raise ValueError(f"row {i} is not antisymmetric")
            if np.any(np.diff(row) > 0):
                raise ValueError(f"row {i} is not monotone non-increasing")

    def to_json_dict(self) -> dict:
        d = {
            "q": self.q,
            "row_semantics": self.row_semantics,
            "bin_edges": None,
            "rows": [r.tolist() for r in self.rows],
            "l_max": self.l_max,
            "design_snr_db": self.design_snr_db,
        }
        if self.row_semantics == ROW_SEMANTICS_STATE:
            d["bin_edges"] = self.bin_edges.tolist()
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "W2LTable":
        bins = None
        if d.get("bin_edges") is not None:
            bins = len(d["bin_edges"]) - 1
        return cls(
            rows=d["rows"],
            row_semantics=d["row_semantics"],
            l_max=d["l_max"],
            bins=bins,
            design_snr_db=d.get("design_snr_db"),
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, sort_keys=True, indent=1)

    @classmethod
    def load(cls, path) -> "W2LTable":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))
