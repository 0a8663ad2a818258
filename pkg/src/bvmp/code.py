"""Regular LDPC codes: construction, alist I/O, syndrome checks and encoding.

A code is stored as its Tanner graph adjacency (per-node neighbor lists with
explicit edge ordering) rather than a dense parity-check matrix; the decoder
works directly on the edge arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LdpcCode:
    """A regular (dv, dc) LDPC code of length n with m = n*dv/dc checks.

    var_neighbors[v] lists the check nodes of variable v (dv entries);
    check_neighbors[c] lists the variable nodes of check c (dc entries).
    Both orderings are preserved exactly through alist round-trips.
    """

    n: int
    dv: int
    dc: int
    var_neighbors: np.ndarray
    check_neighbors: np.ndarray
    m: int = field(init=False)

    def __post_init__(self):
        self.var_neighbors = np.asarray(self.var_neighbors, dtype=np.int64)
        self.check_neighbors = np.asarray(self.check_neighbors, dtype=np.int64)
        self.m = self.n * self.dv // self.dc
        if self.n * self.dv != self.m * self.dc:
            raise ValueError("edge count mismatch: n*dv must equal m*dc")
        if self.var_neighbors.shape != (self.n, self.dv):
            raise ValueError("var_neighbors must have shape (n, dv)")
        if self.check_neighbors.shape != (self.m, self.dc):
            raise ValueError("check_neighbors must have shape (m, dc)")
        if self.var_neighbors.min() < 0 or self.var_neighbors.max() >= self.m:
            raise ValueError("check index out of range in var_neighbors")
        if self.check_neighbors.min() < 0 or self.check_neighbors.max() >= self.n:
            raise ValueError("variable index out of range in check_neighbors")
        for v in range(self.n):
            if np.unique(self.var_neighbors[v]).size != self.dv:
                raise ValueError(f"duplicate edge at variable {v}")
        # The two adjacency views must describe the same edge multiset.
        a = np.sort(self._edge_pairs_from_vars())
        b = np.sort(self._edge_pairs_from_checks())
        if not np.array_equal(a, b):
            raise ValueError("var and check adjacency lists disagree")
        self._build_edge_arrays()

    def _edge_pairs_from_vars(self):
        v = np.repeat(np.arange(self.n), self.dv)
        return v * self.m + self.var_neighbors.ravel()

    def _edge_pairs_from_checks(self):
        c = np.repeat(np.arange(self.m), self.dc)
        return self.check_neighbors.ravel() * self.m + c

    def _build_edge_arrays(self):
        # Variable-major edge e = v*dv + j sits on check var_neighbors[v, j].
        # perm_cm[k] is the variable-major edge index of the k-th check-major
        # slot; slots are grouped by check (dc consecutive slots per check).
        edge_check = self.var_neighbors.ravel()
        self.perm_cm = np.lexsort((np.arange(self.num_edges), edge_check))
        self.edge_check = edge_check

    @property
    def num_edges(self) -> int:
        return self.n * self.dv

    def __eq__(self, other):
        if not isinstance(other, LdpcCode):
            return NotImplemented
        return (
            self.n == other.n
            and self.dv == other.dv
            and self.dc == other.dc
            and np.array_equal(self.var_neighbors, other.var_neighbors)
            and np.array_equal(self.check_neighbors, other.check_neighbors)
        )

    def parity_matrix(self) -> np.ndarray:
        """Dense parity-check matrix H, shape (m, n), dtype uint8."""
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        for c in range(self.m):
            h[c, self.check_neighbors[c]] = 1
        return h


def syndrome_check(code: LdpcCode, bits) -> bool:
    """True iff the bits of every check node XOR to zero."""
    bits = np.asarray(bits)
    if bits.shape != (code.n,):
        raise ValueError(f"expected {code.n} bits, got shape {bits.shape}")
    parity = bits[code.check_neighbors].sum(axis=1) & 1
    return not parity.any()


def count_four_cycles(code_or_adjacency, m: int | None = None) -> int:
    """Number of variable pairs sharing at least two checks (4-cycle pairs)."""
    if isinstance(code_or_adjacency, LdpcCode):
        var_neighbors = code_or_adjacency.var_neighbors
        m = code_or_adjacency.m
    else:
        var_neighbors = np.asarray(code_or_adjacency)
    n, dv = var_neighbors.shape
    # For each check, collect its variables, then count var pairs seen twice.
    pair_count = {}
    by_check = [[] for _ in range(m)]
    for v in range(n):
        for c in var_neighbors[v]:
            by_check[c].append(v)
    cycles = 0
    for members in by_check:
        members = sorted(members)
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                key = (members[i], members[j])
                if key in pair_count:
                    cycles += 1
                pair_count[key] = pair_count.get(key, 0) + 1
    return cycles


def generate_regular(
    n: int,
    dv: int,
    dc: int,
    seed: int,
    max_retries: int = 50,
    cycle_removal_passes: int = 60,
) -> LdpcCode:
    """Construct a random (dv, dc)-regular Tanner graph of length n.

    Uses the configuration model (socket permutation) with duplicate-edge
    rejection and best-effort 4-cycle removal by local edge swaps.
    4-cycle removal is best effort: the construction is accepted once
    duplicate-free even if some 4-cycles remain after the swap budget.
    """
    if n < 1 or dv < 1 or dc < 1:
        raise ValueError("n, dv, dc must be positive")
    if (n * dv) % dc != 0:
        raise ValueError(f"n*dv = {n * dv} is not divisible by dc = {dc}")
    if dc > n:
        raise ValueError("check degree cannot exceed the code length")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    edge_var = np.repeat(np.arange(n), dv)

    def swap(edge_check, i, j):
        edge_check[i], edge_check[j] = edge_check[j], edge_check[i]

    def duplicate_slots(edge_check):
        keys = edge_var * m + edge_check
        order = np.argsort(keys, kind="stable")
        dup = np.zeros(keys.size, dtype=bool)
        dup[order[1:]] = keys[order[1:]] == keys[order[:-1]]
        return np.flatnonzero(dup)

    last_error = None
    for _ in range(max_retries):
        edge_check = rng.permutation(np.repeat(np.arange(m), dc))
        # Resolve duplicate (variable, check) pairs by random socket swaps.
        ok = False
        for _ in range(20):
            dups = duplicate_slots(edge_check)
            if dups.size == 0:
                ok = True
                break
            for i in dups:
                for _ in range(50):
                    j = int(rng.integers(edge_check.size))
                    vi, vj = edge_var[i], edge_var[j]
                    ci, cj = edge_check[i], edge_check[j]
                    has_ij = np.any((edge_var == vi) & (edge_check == cj))
                    has_ji = np.any((edge_var == vj) & (edge_check == ci))
                    if not has_ij and not has_ji:
                        swap(edge_check, i, j)
                        break
        if not ok:
            last_error = "could not remove duplicate edges"
            continue
        var_neighbors = edge_check.reshape(n, dv)
        _remove_four_cycles(var_neighbors, m, rng, cycle_removal_passes)
        check_neighbors = _check_adjacency(var_neighbors, m, dc)
        return LdpcCode(n, dv, dc, var_neighbors, check_neighbors)
    raise RuntimeError(f"code construction failed after {max_retries} retries: {last_error}")


def _check_adjacency(var_neighbors, m, dc):
    n, dv = var_neighbors.shape
    edge_var = np.repeat(np.arange(n), dv)
    edge_check = var_neighbors.ravel()
    order = np.lexsort((edge_var, edge_check))
    return edge_var[order].reshape(m, dc)


def _remove_four_cycles(var_neighbors, m, rng, passes):
    """Greedy local-swap reduction of 4-cycles; edits var_neighbors in place."""
    n, dv = var_neighbors.shape
    for _ in range(passes):
        offenders = _four_cycle_edges(var_neighbors, m)
        if not offenders:
            return
        improved = False
        for v, j in offenders:
            for _ in range(30):
                v2 = int(rng.integers(n))
                j2 = int(rng.integers(dv))
                c1, c2 = var_neighbors[v, j], var_neighbors[v2, j2]
                if v == v2 or c1 == c2:
                    continue
                if c2 in var_neighbors[v] or c1 in var_neighbors[v2]:
                    continue
                var_neighbors[v, j], var_neighbors[v2, j2] = c2, c1
                improved = True
                break
        if not improved:
            return


def _four_cycle_edges(var_neighbors, m):
    """One (variable, slot) edge per variable pair sharing >= 2 checks."""
    n, dv = var_neighbors.shape
    seen = {}
    offenders = []
    flagged = set()
    by_check = [[] for _ in range(m)]
    for v in range(n):
        for j in range(dv):
            by_check[var_neighbors[v, j]].append((v, j))
    for entries in by_check:
        for a in range(len(entries)):
            for b in range(a + 1, len(entries)):
                (v1, j1), (v2, j2) = entries[a], entries[b]
                if v1 == v2:
                    continue
                key = (min(v1, v2), max(v1, v2))
                if key in seen and key not in flagged:
                    offenders.append((v1, j1))
                    flagged.add(key)
                else:
                    seen[key] = True
    return offenders


def to_alist(code: LdpcCode) -> str:
    """Serialize a code in the standard alist interchange format."""
    lines = [f"{code.n} {code.m}", f"{code.dv} {code.dc}"]
    lines.append(" ".join([str(code.dv)] * code.n))
    lines.append(" ".join([str(code.dc)] * code.m))
    for v in range(code.n):
        lines.append(" ".join(str(c + 1) for c in code.var_neighbors[v]))
    for c in range(code.m):
        lines.append(" ".join(str(v + 1) for v in code.check_neighbors[c]))
    return "\n".join(lines) + "\n"


def from_alist(text: str) -> LdpcCode:
    """Parse an alist document into a regular LdpcCode.

    Zero entries (padding emitted by some tools) are ignored.  Raises
    ValueError on inconsistent degree lists, irregular degrees or
    out-of-range indices.
    """
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if len(rows) < 4:
        raise ValueError("alist too short")
    try:
        parsed = [[int(x) for x in row] for row in rows]
    except ValueError as e:
        raise ValueError(f"non-integer token in alist: {e}") from None
    (n, m), (max_dv, max_dc) = parsed[0], parsed[1]
    var_degrees, check_degrees = parsed[2], parsed[3]
    if len(var_degrees) != n or len(check_degrees) != m:
        raise ValueError("degree list length disagrees with header")
    dvs, dcs = set(var_degrees), set(check_degrees)
    if len(dvs) != 1 or len(dcs) != 1:
        raise ValueError("irregular degree lists; regular code expected")
    dv, dc = dvs.pop(), dcs.pop()
    if dv > max_dv or dc > max_dc:
        raise ValueError("degree exceeds declared maximum")
    if len(parsed) != 4 + n + m:
        raise ValueError(f"expected {4 + n + m} lines, found {len(parsed)}")
    var_neighbors = np.zeros((n, dv), dtype=np.int64)
    for v in range(n):
        entries = [x for x in parsed[4 + v] if x != 0]
        if len(entries) != dv:
            raise ValueError(f"variable {v} lists {len(entries)} checks, expected {dv}")
        var_neighbors[v] = [c - 1 for c in entries]
    check_neighbors = np.zeros((m, dc), dtype=np.int64)
    for c in range(m):
        entries = [x for x in parsed[4 + n + c] if x != 0]
        if len(entries) != dc:
            raise ValueError(f"check {c} lists {len(entries)} variables, expected {dc}")
        check_neighbors[c] = [v - 1 for v in entries]
    if var_neighbors.size and (var_neighbors.min() < 0 or var_neighbors.max() >= m):
        raise ValueError("check index out of range")
    if check_neighbors.size and (check_neighbors.min() < 0 or check_neighbors.max() >= n):
        raise ValueError("variable index out of range")
    return LdpcCode(n, dv, dc, var_neighbors, check_neighbors)


class LdpcEncoder:
    """Systematic-style encoder from the reduced parity-check matrix.

    Gaussian elimination over GF(2) with column pivoting; tolerates rank
    deficiency (random constructions occasionally lose rank), in which case
    the code dimension n - rank(H) exceeds n - m and is reported as is.
    """

    def __init__(self, code: LdpcCode):
        self.code = code
        h = code.parity_matrix()
        m, n = h.shape
        pivots = []
        r = 0
        for col in range(n):
            hit = np.flatnonzero(h[r:, col])
            if hit.size == 0:
                continue
            p = r + hit[0]
            if p != r:
                h[[r, p]] = h[[p, r]]
            # clear this column everywhere else (straight to RREF)
            others = np.flatnonzero(h[:, col])
            others = others[others != r]
            h[others] ^= h[r]
            pivots.append(col)
            r += 1
            if r == m:
                break
        self.rank = r
        self.pivot_cols = np.array(pivots, dtype=np.int64)
        free = np.setdiff1d(np.arange(n), self.pivot_cols)
        self.info_positions = free
        self.dimension = free.size
        self._h_free = h[: self.rank][:, free]

    def encode(self, info_bits) -> np.ndarray:
        """Embed info bits at the free positions and solve the pivots."""
        info = np.asarray(info_bits, dtype=np.uint8)
        if info.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} info bits, got {info.shape}")
        x = np.zeros(self.code.n, dtype=np.uint8)
        x[self.info_positions] = info
        x[self.pivot_cols] = (self._h_free @ info.astype(np.int64)) & 1
        assert syndrome_check(self.code, x)
        return x


def encode(code: LdpcCode, info_bits):
    """One-shot encode; returns (codeword, info_positions)."""
    enc = LdpcEncoder(code)
    return enc.encode(info_bits), enc.info_positions
