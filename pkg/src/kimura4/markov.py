"""Fiber enumeration, fiber-graph connectivity, and generator censuses.

A fiber is the set of all degree-d tables sharing a column profile; a
binomial lies in the ideal exactly when its two tables share a fiber.  The
number of minimal generators in degree d equals, summed over degree-d
fibers, the number of connected components under moves replacing a proper
sub-multiset (degree <= d-1) minus one.

Two tables of a fiber are one such move apart iff they share at least one
row, and more generally one move of degree <= m apart iff they share a
sub-multiset of d-m rows.  The big censuses therefore never enumerate
moves: members are unioned through hashed shared sub-multisets, with a
vectorized min-label flood doing the union-find.  A small dict-based
reference route cross-checks the vectorized engine at toy scale.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import groups
from .groups import FaceSpec
from .tables import Table, profile_of_rows


# ---------------------------------------------------------------------------
# reference route (exact, small scale)
# ---------------------------------------------------------------------------

@dataclass
class Fiber:
    profile: tuple[int, ...]
    members: list[tuple[int, ...]]
    degree: int
    n: int

    def tables(self) -> list[Table]:
        return [Table(m, self.n) for m in self.members]


def fibers(n: int, degree: int, face: Optional[FaceSpec] = None,
           *, include_singletons: bool = True) -> Iterator[Fiber]:
    """Group every degree-d multiset of flows on the face by profile.

    Reference implementation; materializes everything, so keep
    C(V+d-1, d) small.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    flows = groups.enumerate_flows(n, face)
    groups_map: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for rows in itertools.combinations_with_replacement(flows, degree):
        groups_map.setdefault(profile_of_rows(rows, n), []).append(rows)
    for prof, members in groups_map.items():
        if include_singletons or len(members) > 1:
            yield Fiber(prof, members, degree, n)


def multiset_diff_size(a: Sequence[int], b: Sequence[int]) -> int:
    """|a \\ b| for sorted row multisets of equal size."""
    i = j = changed = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            i += 1
            j += 1
        elif a[i] < b[j]:
            changed += 1
            i += 1
        else:
            j += 1
    return changed + (len(a) - i)


def fiber_components(f: Fiber, move_degree: int,
                     *, census_mode: bool = False
                     ) -> tuple[int, list[tuple[int, ...]]]:
    """Component count and one representative per component.

    Edges are moves of degree <= move_degree; census mode additionally
    restricts to proper sub-multiset replacements (degree <= d-1), the
    convention under which components count minimal generators.
    """
    if move_degree < 2:
        # no degree-1 moves exist, so with bound < 2 everything is isolated
        bound = 1
    else:
        bound = move_degree
    if census_mode:
        bound = min(bound, f.degree - 1)
    m = len(f.members)
    parent = list(range(m))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(m):
        for j in range(i + 1, m):
            if multiset_diff_size(f.members[i], f.members[j]) <= bound:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    reps: dict[int, tuple[int, ...]] = {}
    for i in range(m):
        reps.setdefault(find(i), f.members[i])
    return len(reps), list(reps.values())


def census_reference(n: int, max_degree: int,
                     face: Optional[FaceSpec] = None) -> dict[int, int]:
    """Per-degree minimal generator counts via the dict route."""
    out = {}
    for d in range(2, max_degree + 1):
        total = 0
        for f in fibers(n, d, face, include_singletons=False):
            comps, _ = fiber_components(f, d - 1, census_mode=True)
            total += comps - 1
        out[d] = total
    return out


# ---------------------------------------------------------------------------
# vectorized engine
# ---------------------------------------------------------------------------

def _row_key_contributions(n: int, d: int,
                           face: Optional[FaceSpec]) -> tuple[np.ndarray, np.ndarray]:
    """(flows, per-flow additive profile-key contribution).

    A degree-d profile is keyed by, per column, the counts of a, b, c in
    base d+1; counts are sums over rows, so the key of a multiset is the
    sum of its rows' contributions.
    """
    flows = groups.flows_array(n, face)
    syms = groups.column_symbols(flows, n)
    base = d + 1
    col_weight = np.array([0, 1, base, base * base], dtype=np.int64)
    bits = int(math.ceil(math.log2(d * base * base + 1)))
    if n * bits > 62:
        raise ValueError("profile key too wide")
    shifts = (np.arange(n, dtype=np.int64) * bits)
    key1 = (col_weight[syms] << shifts[None, :]).sum(axis=1)
    return flows, key1


def _fill_combos(out: np.ndarray, start: int, v: int, col: int) -> None:
    """Fill `out` with combinations-with-repetition of range(start, v)."""
    d = out.shape[1]
    if col == d - 1:
        out[:, col] = np.arange(start, v, dtype=out.dtype)
        return
    offset = 0
    rest = d - col - 1
    for i in range(start, v):
        block = math.comb(v - i + rest - 1, rest)
        out[offset:offset + block, col] = i
        _fill_combos(out[offset:offset + block], i, v, col + 1)
        offset += block


def multiset_index_array(v: int, d: int) -> np.ndarray:
    """All nondecreasing index d-tuples over range(v), lex order."""
    m = math.comb(v + d - 1, d)
    dtype = np.int16 if v <= 32767 else np.int32
    out = np.empty((m, d), dtype=dtype)
    _fill_combos(out, 0, v, 0)
    return out


def _min_label_flood(labels: np.ndarray, incidences: list[np.ndarray],
                     n_nodes: int, max_iter: int = 200) -> np.ndarray:
    """Union members that share a hashed node, by min-label flooding.

    `incidences` holds, per slot, the node id each member touches.  After
    convergence two members have equal labels iff they are connected in
    the member-node bipartite graph.
    """
    node_lab = np.empty(n_nodes, dtype=labels.dtype)
    for _ in range(max_iter):
        node_lab.fill(np.iinfo(labels.dtype).max)
        for inc in incidences:
            np.minimum.at(node_lab, inc, labels)
        new = labels
        for inc in incidences:
            new = np.minimum(new, node_lab[inc])
        if np.array_equal(new, labels):
            return labels
        labels = new
    raise RuntimeError("label flood did not converge")


@dataclass
class DegreeCensus:
    degree: int
    generators: int
    fibers: int
    multisets: int
    elapsed_s: float


@dataclass
class CensusReport:
    n: int
    face: str
    max_degree: int
    rows: list[DegreeCensus] = field(default_factory=list)
    complete: bool = True
    note: str = ""

    def counts(self) -> dict[int, int]:
        return {r.degree: r.generators for r in self.rows}

    def to_json(self) -> dict:
        return {
            "n_leaves": self.n,
            "face": self.face,
            "max_degree": self.max_degree,
            "complete": self.complete,
            "note": self.note,
            "degrees": [
                {"degree": r.degree, "generators": r.generators,
                 "fibers": r.fibers, "multisets": r.multisets,
                 "elapsed_s": round(r.elapsed_s, 3)}
                for r in self.rows
            ],
        }


def _census_degree(n: int, d: int, face: Optional[FaceSpec],
                   member_budget: int) -> DegreeCensus:
    t0 = time.time()
    flows, key1 = _row_key_contributions(n, d, face)
    v = len(flows)
    m_total = math.comb(v + d - 1, d)
    if m_total > member_budget:
        raise MemoryError(
            f"degree {d}: {m_total} multisets exceed budget {member_budget}")
    if d == 2:
        # no proper moves exist below degree 2, so each fiber of size s
        # contributes s - 1 generators
        keys = np.empty(m_total, dtype=np.int64)
        off = 0
        for i in range(v):
            block = v - i
            keys[off:off + block] = key1[i] + key1[i:]
            off += block
        n_fibers = int(np.unique(keys).size)
        return DegreeCensus(d, m_total - n_fibers, n_fibers, m_total,
                            time.time() - t0)
    combos = multiset_index_array(v, d)
    keys = key1[combos[:, 0].astype(np.int64)]
    for c in range(1, d):
        keys += key1[combos[:, c].astype(np.int64)]
    uniq, fid = np.unique(keys, return_inverse=True)
    n_fibers = int(uniq.size)
    del keys, uniq
    fid = fid.astype(np.int64)
    # adjacency under proper moves (degree <= d-1) is exactly row sharing
    incidences = []
    for c in range(d):
        incidences.append(fid * v + combos[:, c].astype(np.int64))
    stacked = np.concatenate(incidences)
    nodes, codes = np.unique(stacked, return_inverse=True)
    del stacked
    codes = codes.astype(np.int64)
    m = combos.shape[0]
    incs = [codes[c * m:(c + 1) * m].astype(np.int32)
            if len(nodes) < 2**31 else codes[c * m:(c + 1) * m]
            for c in range(d)]
    del codes
    labels = np.arange(m, dtype=np.int64)
    labels = _min_label_flood(labels, incs, len(nodes))
    components = int(np.unique(labels).size)
    return DegreeCensus(d, components - n_fibers, n_fibers, m,
                        time.time() - t0)


def minimal_generator_census(n: int, max_degree: int,
                             face: Optional[FaceSpec] = None,
                             *, member_budget: int = 60_000_000,
                             shards: int = 0,
                             cache_dir: Optional[str] = None,
                             progress: Optional[Callable[[str], None]] = None
                             ) -> CensusReport:
    """Minimal-generator counts per degree 2..max_degree.

    Degrees whose multiset count exceeds member_budget go through the
    sharded spill path when shards > 0 (spill directory: cache_dir or
    KIMURA_CACHE_DIR or a tempdir), and otherwise stop the report early
    with a budget note.
    """
    if max_degree < 2:
        raise ValueError("max_degree must be >= 2")
    report = CensusReport(n, str(face or ""), max_degree)
    for d in range(2, max_degree + 1):
        try:
            v = len(groups.enumerate_flows(n, face))
            if math.comb(v + d - 1, d) > member_budget:
                if shards > 0:
                    row = _census_degree_sharded(n, d, face, shards,
                                                 cache_dir, progress)
                else:
                    raise MemoryError(
                        f"degree {d}: {math.comb(v + d - 1, d)} multisets "
                        f"exceed budget {member_budget}; rerun with shards")
            else:
                row = _census_degree(n, d, face, member_budget)
        except MemoryError as exc:
            report.complete = False
            report.note = str(exc)
            break
        report.rows.append(row)
        if progress:
            progress(f"degree {d}: {row.generators} generators over "
                     f"{row.fibers} fibers ({row.elapsed_s:.1f}s)")
    return report


# ---------------------------------------------------------------------------
# sharded census for degrees past the in-memory budget
# ---------------------------------------------------------------------------

_TRI_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _tri_arrays(m: int) -> tuple[np.ndarray, np.ndarray]:
    """All nondecreasing index pairs over range(m), as two columns."""
    hit = _TRI_CACHE.get(m)
    if hit is not None:
        return hit
    k = np.repeat(np.arange(m, dtype=np.int32), np.arange(m, 0, -1))
    l = np.concatenate([np.arange(t, m, dtype=np.int32) for t in range(m)]) \
        if m else np.empty(0, dtype=np.int32)
    if len(_TRI_CACHE) < 1024:
        _TRI_CACHE[m] = (k, l)
    return k, l


def _iter_keyed_chunks(v: int, d: int, key1: np.ndarray,
                       chunk: int = 2_000_000
                       ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Stream (profile keys, row index arrays) over all degree-d multisets."""
    buf_k: list[np.ndarray] = []
    buf_r: list[np.ndarray] = []
    size = 0

    def flush():
        nonlocal size
        keys = np.concatenate(buf_k)
        rows = np.concatenate(buf_r)
        buf_k.clear()
        buf_r.clear()
        size = 0
        return keys, rows

    for prefix in itertools.combinations_with_replacement(range(v), d - 2):
        start = prefix[-1] if prefix else 0
        tk, tl = _tri_arrays(v - start)
        if not len(tk):
            continue
        k_idx = tk + start
        l_idx = tl + start
        base = sum(int(key1[i]) for i in prefix)
        keys = key1[k_idx] + key1[l_idx] + base
        m = len(keys)
        rows = np.empty((m, d), dtype=np.int16)
        for c, i in enumerate(prefix):
            rows[:, c] = i
        rows[:, d - 2] = k_idx
        rows[:, d - 1] = l_idx
        buf_k.append(keys)
        buf_r.append(rows)
        size += m
        if size >= chunk:
            yield flush()
    if size:
        yield flush()


def _census_degree_sharded(n: int, d: int, face: Optional[FaceSpec],
                           shards: int, cache_dir: Optional[str],
                           progress: Optional[Callable[[str], None]]
                           ) -> DegreeCensus:
    import shutil
    import tempfile

    t0 = time.time()
    flows, key1 = _row_key_contributions(n, d, face)
    v = len(flows)
    base = cache_dir or os.environ.get("KIMURA_CACHE_DIR") or None
    tmpdir = tempfile.mkdtemp(prefix="kimura4-census-", dir=base)
    rec_dtype = np.dtype([("key", "<i8"), ("rows", "<i2", (d,))])
    handles = [open(os.path.join(tmpdir, f"shard{j:03d}.bin"), "wb")
               for j in range(shards)]
    written = 0
    try:
        for keys, rows in _iter_keyed_chunks(v, d, key1):
            sid = ((keys.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15))
                   >> np.uint64(40)).astype(np.int64) % shards
            order = np.argsort(sid, kind="stable")
            sid_s = sid[order]
            bounds = np.searchsorted(sid_s, np.arange(shards + 1))
            rec = np.empty(len(keys), dtype=rec_dtype)
            rec["key"] = keys[order]
            rec["rows"] = rows[order]
            for j in range(shards):
                lo, hi = bounds[j], bounds[j + 1]
                if hi > lo:
                    rec[lo:hi].tofile(handles[j])
            written += len(keys)
            if progress and written % 20_000_000 < len(keys):
                progress(f"degree {d}: spilled {written} multisets")
        for h in handles:
            h.close()
        expected = math.comb(v + d - 1, d)
        if written != expected:
            raise AssertionError(
                f"spilled {written} members, expected {expected}")
        components = 0
        fibers_total = 0
        for j in range(shards):
            path = os.path.join(tmpdir, f"shard{j:03d}.bin")
            rec = np.fromfile(path, dtype=rec_dtype)
            if not len(rec):
                continue
            order = np.argsort(rec["key"], kind="stable")
            keys = rec["key"][order]
            rows = rec["rows"][order]
            del rec
            if d == 2:
                # no proper moves below degree 2: every member is isolated
                fibers_total += int(np.unique(keys).size)
                components += len(keys)
                continue
            fid = np.empty(len(keys), dtype=np.int64)
            fid[0] = 0
            np.cumsum(keys[1:] != keys[:-1], out=fid[1:])
            fibers_total += int(fid[-1]) + 1
            incs_raw = [fid * v + rows[:, c].astype(np.int64)
                        for c in range(d)]
            stacked = np.concatenate(incs_raw)
            nodes, codes = np.unique(stacked, return_inverse=True)
            del stacked
            codes = codes.astype(np.int64)
            m = len(keys)
            incs = [codes[c * m:(c + 1) * m] for c in range(d)]
            del codes
            labels = _min_label_flood(np.arange(m, dtype=np.int64), incs,
                                      len(nodes))
            components += int(np.unique(labels).size)
            if progress:
                progress(f"degree {d}: shard {j + 1}/{shards} done")
        return DegreeCensus(d, components - fibers_total, fibers_total,
                            written, time.time() - t0)
    finally:
        for h in handles:
            if not h.closed:
                h.close()
        shutil.rmtree(tmpdir, ignore_errors=True)


# ---------------------------------------------------------------------------
# connectivity of fibers under degree-<=4 moves
# ---------------------------------------------------------------------------

@dataclass
class ConnectivityResult:
    ok: bool
    n: int
    face: str
    max_table_degree: int
    move_degree: int
    checked: list[int] = field(default_factory=list)
    witness: Optional[tuple[list[str], list[str]]] = None

    def to_json(self) -> dict:
        obj = {
            "connected": self.ok,
            "n_leaves": self.n,
            "face": self.face,
            "max_table_degree": self.max_table_degree,
            "move_degree": self.move_degree,
            "checked_degrees": self.checked,
        }
        if self.witness:
            obj["witness"] = {"t0": self.witness[0], "t1": self.witness[1]}
        return obj


def _connectivity_degree(n: int, d: int, move_degree: int,
                         face: Optional[FaceSpec]
                         ) -> Optional[tuple[list[str], list[str]]]:
    """None if every degree-d fiber is connected, else a witness pair."""
    flows, key1 = _row_key_contributions(n, d, face)
    v = len(flows)
    combos = multiset_index_array(v, d)
    m = combos.shape[0]
    keys = key1[combos[:, 0].astype(np.int64)]
    for c in range(1, d):
        keys += key1[combos[:, c].astype(np.int64)]
    uniq, fid = np.unique(keys, return_inverse=True)
    del keys, uniq
    fid = fid.astype(np.int64)
    t = d - move_degree  # members sharing t rows are one move apart
    # pack each size-t position subset of the sorted rows into a node key
    row_bits = max(1, (v - 1).bit_length())
    incidences = []
    for pos in itertools.combinations(range(d), t):
        sub = np.zeros(m, dtype=np.int64)
        for p in pos:
            sub = (sub << row_bits) | combos[:, p].astype(np.int64)
        incidences.append(fid << (row_bits * t) | sub)
    stacked = np.concatenate(incidences)
    nodes, codes = np.unique(stacked, return_inverse=True)
    del stacked
    codes = codes.astype(np.int64)
    incs = [codes[i * m:(i + 1) * m] for i in range(len(incidences))]
    del codes
    labels = _min_label_flood(np.arange(m, dtype=np.int64), incs, len(nodes))
    components = int(np.unique(labels).size)
    n_fibers = int(fid.max()) + 1 if m else 0
    if components == n_fibers:
        return None
    # some fiber is disconnected: find it and return two representatives
    order = np.lexsort((labels, fid))
    fid_s, lab_s, idx_s = fid[order], labels[order], order
    for lo in range(len(fid_s) - 1):
        if fid_s[lo] == fid_s[lo + 1] and lab_s[lo] != lab_s[lo + 1]:
            a = combos[idx_s[lo]]
            b = combos[idx_s[lo + 1]]
            ta = [groups.format_flow(int(flows[i]), n) for i in a]
            tb = [groups.format_flow(int(flows[i]), n) for i in b]
            return ta, tb
    raise AssertionError("component/fiber counts disagree but no witness found")


def connectivity_check(n: int, max_table_degree: int, move_degree: int = 4,
                       face: Optional[FaceSpec] = None,
                       *, progress: Optional[Callable[[str], None]] = None
                       ) -> ConnectivityResult:
    """True iff every fiber of degree <= max_table_degree is connected
    under moves of degree <= move_degree.

    Degrees d <= move_degree are connected outright (one full-table move);
    for larger d the shared-submultiset flood does the work.  On failure
    the witness is a compatible pair no degree-<=move_degree trace joins.
    """
    res = ConnectivityResult(True, n, str(face or ""), max_table_degree,
                             move_degree)
    for d in range(2, max_table_degree + 1):
        if d <= move_degree:
            res.checked.append(d)
            continue
        witness = _connectivity_degree(n, d, move_degree, face)
        res.checked.append(d)
        if progress:
            progress(f"degree {d}: {'ok' if witness is None else 'DISCONNECTED'}")
        if witness is not None:
            res.ok = False
            res.witness = witness
            return res
    return res
