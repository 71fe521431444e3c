"""Constructive reduction of compatible table pairs by degree-<=4 moves.

reduce_pair transforms a compatible pair (T0, T1) into equal tables,
recording every move.  The engine follows the induction leaves -> degree ->
Hamming distance: common rows are factored out, small tables are exchanged
in one move, pinned row pairs with large disagreement are pulled together
(ge-4 strings inside their four columns, then the abc string, then the
two-column case), and in the two-column case the bad pairs in two chosen
agreement columns are eliminated so the pair merges into one with n-1
columns and recurses.  Each named routine realizes its step with a scoped
best-first search over legal moves; a routine that dead-ends falls through
to an unscoped bounded search, and the failing case label is logged rather
than trusted silently.  Every returned trace is replay-validated; an
invalid trace is never returned.

Reduction itself is deterministic; randomness only enters the fuzz-pair
samplers, which draw everything from one seeded generator.
"""

from __future__ import annotations

import heapq
import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

from . import groups
from .moves import (FiberCache, FiberTooLarge, Move, TraceStep, apply_move,
                    profile_fiber, trace_is_valid)
from .tables import (Table, compatible, hamming, hamming_distance,
                     min_hamming_pair, profile_of_rows)


class BudgetExhausted(Exception):
    """The node budget ran out before the pair was reduced."""


class StrategyGap(Exception):
    """A strategy routine hit a dead end; carries the case label."""

    def __init__(self, label: str):
        super().__init__(label)
        self.label = label


@dataclass
class Budget:
    nodes: int

    def spend(self, k: int = 1) -> None:
        self.nodes -= k
        if self.nodes < 0:
            raise BudgetExhausted("node budget exhausted")


@dataclass
class Diagnostics:
    strategy_cases: Counter = field(default_factory=Counter)
    fallback_cases: Counter = field(default_factory=Counter)
    nodes_spent: int = 0

    def to_json(self) -> dict:
        return {
            "strategy_cases": dict(self.strategy_cases),
            "fallback_cases": dict(self.fallback_cases),
            "nodes_spent": self.nodes_spent,
        }


@dataclass
class ReduceResult:
    steps: list[TraceStep]
    success: bool
    diagnostics: Diagnostics
    message: str = ""


@dataclass
class BadPair:
    row: int
    x: int
    y: int


@dataclass
class PairState:
    """A compatible pair plus the pinned minimal-Hamming row pair."""

    t0: Table
    t1: Table
    pinned: Optional[tuple[int, int, int]] = None  # (row0, row1, k)

    def pin(self) -> tuple[int, int, int]:
        self.pinned = min_hamming_pair(self.t0, self.t1)
        return self.pinned


# ---------------------------------------------------------------------------
# basic helpers
# ---------------------------------------------------------------------------

def strip_common(a: Sequence[int], b: Sequence[int]) -> tuple[tuple[int, ...],
                                                              tuple[int, ...]]:
    """Remove the multiset intersection from both row tuples."""
    ca, cb = Counter(a), Counter(b)
    common = ca & cb
    ra = sorted((ca - common).elements())
    rb = sorted((cb - common).elements())
    return tuple(ra), tuple(rb)


def min_cross_k(ra: Sequence[int], rb: Sequence[int], n: int) -> int:
    if not ra:
        return 0
    return min(hamming_distance(x, y, n) for x in ra for y in rb)


def pair_potential(a: Table, b: Table) -> tuple[int, int]:
    """(stripped degree, min cross Hamming distance): the progress measure."""
    ra, rb = strip_common(a.rows, b.rows)
    return len(ra), min_cross_k(ra, rb, a.n)


def find_bad_pairs(t: Table, p: Optional[int] = None,
                   q: Optional[int] = None) -> list[BadPair]:
    """Rows whose entries in columns p and q (default: last two) are both
    nonzero."""
    if t.n < 2:
        raise ValueError("need at least two columns")
    if p is None:
        p, q = t.n - 2, t.n - 1
    out = []
    for v in t.rows:
        x = groups.entry(v, p, t.n)
        y = groups.entry(v, q, t.n)
        if x and y:
            out.append(BadPair(v, x, y))
    return out


def _bad_count(rows: Sequence[int], n: int, p: int, q: int) -> int:
    c = 0
    for v in rows:
        if groups.entry(v, p, n) and groups.entry(v, q, n):
            c += 1
    return c


# ---------------------------------------------------------------------------
# neighbor generation for searches
# ---------------------------------------------------------------------------

FIBER_CAP = 512


def _candidate_moves(rows: tuple[int, ...], n: int, max_degree: int,
                     cache: FiberCache,
                     cols: Optional[tuple[int, ...]] = None
                     ) -> Iterator[Move]:
    """Legal moves on a row multiset, optionally touching only `cols`.

    With a column scope, replacements act on the projection to those
    columns plus a virtual balancing column, so untouched columns are
    preserved row by row.
    """
    d = len(rows)
    seen_sub: set[tuple[int, ...]] = set()
    for s in range(2, min(max_degree, d) + 1):
        for idx in itertools.combinations(range(d), s):
            sub = tuple(rows[i] for i in idx)
            if sub in seen_sub:
                continue
            seen_sub.add(sub)
            if cols is None:
                try:
                    fiber = cache.fiber_for(sub, n, cap=FIBER_CAP)
                except FiberTooLarge:
                    continue
                for repl in fiber:
                    if repl != sub:
                        yield Move(sub, repl, n)
            else:
                yield from _scoped_replacements(sub, n, cols, cache)


def _scoped_replacements(sub: tuple[int, ...], n: int,
                         cols: tuple[int, ...],
                         cache: FiberCache) -> Iterator[Move]:
    """Moves exchanging entries of `sub` inside `cols` only.

    Project each row to (entries in cols, balancing sum); replacement
    mini-tables are the fiber of that projection; the balancing entry pins
    which original row's untouched part each new projected row extends.
    """
    w = len(cols)
    proj = []
    for v in sub:
        ent = [groups.entry(v, c, n) for c in cols]
        s = 0
        for g in ent:
            s ^= g
        proj.append(groups.pack(ent + [s]))
    proj_t = tuple(sorted(proj))
    try:
        fiber = cache.fiber_for(proj_t, w + 1, cap=FIBER_CAP)
    except FiberTooLarge:
        return
    # group original rows by balance value (projected last entry)
    by_balance: dict[int, list[int]] = {}
    for v, pv in zip(sub, proj):
        by_balance.setdefault(pv & 3, []).append(v)
    for repl in fiber:
        if repl == proj_t:
            continue
        pools = {k: list(vs) for k, vs in by_balance.items()}
        new_rows = []
        ok = True
        for pr in repl:
            bal = pr & 3
            pool = pools.get(bal)
            if not pool:
                ok = False
                break
            base = pool.pop()
            nv = base
            for j, c in enumerate(cols):
                nv = groups.set_entry(nv, c, n,
                                      groups.entry(pr, j, w + 1))
            new_rows.append(nv)
        if not ok:
            continue
        ins = tuple(sorted(new_rows))
        if ins != tuple(sorted(sub)):
            yield Move(tuple(sorted(sub)), ins, n)


SearchState = tuple[tuple[int, ...], tuple[int, ...]]


def pair_search(a: Table, b: Table, *,
                goal: Callable[[SearchState], bool],
                score: Callable[[SearchState], tuple],
                budget: Budget,
                max_degree: int = 4,
                cols: Optional[tuple[int, ...]] = None,
                beam: int = 64,
                cache: Optional[FiberCache] = None
                ) -> Optional[list[TraceStep]]:
    """Best-first search over pair states; returns the step path to the
    first goal state, or None when the frontier empties.

    Raises BudgetExhausted when the shared budget runs out.  Moves of
    degree <= max_degree apply to either side; `cols` scopes them.
    """
    cache = cache or FiberCache()
    start: SearchState = (a.rows, b.rows)
    n = a.n
    if goal(start):
        return []
    frontier: list[tuple[tuple, int, SearchState]] = []
    counter = itertools.count()
    heapq.heappush(frontier, (score(start), next(counter), start))
    parents: dict[SearchState, tuple[SearchState, TraceStep]] = {}
    seen = {start}
    while frontier:
        budget.spend()
        _, _, state = heapq.heappop(frontier)
        ra, rb = state
        children = []
        for side, rows in ((0, ra), (1, rb)):
            for mv in _candidate_moves(rows, n, max_degree, cache, cols):
                keep = list(rows)
                for v in mv.removed:
                    keep.remove(v)
                new_rows = tuple(sorted(keep + list(mv.inserted)))
                child = (new_rows, rb) if side == 0 else (ra, new_rows)
                if child in seen:
                    continue
                seen.add(child)
                step = TraceStep(side, mv)
                parents[child] = (state, step)
                if goal(child):
                    return _unwind(parents, start, child)
                children.append((score(child), next(counter), child))
        children.sort(key=lambda t: t[0])
        for item in children[:beam]:
            heapq.heappush(frontier, item)
    return None


def _unwind(parents, start: SearchState, state: SearchState) -> list[TraceStep]:
    path = []
    while state != start:
        state, step = parents[state]
        path.append(step)
    path.reverse()
    return path


# ---------------------------------------------------------------------------
# strategy routines
# ---------------------------------------------------------------------------

def _potential_of(state: SearchState, n: int) -> tuple[int, int]:
    ra, rb = strip_common(state[0], state[1])
    return len(ra), min_cross_k(ra, rb, n)


def _score_potential(state: SearchState, n: int) -> tuple:
    ra, rb = strip_common(state[0], state[1])
    if not ra:
        return (0, 0, 0)
    k = min_cross_k(ra, rb, n)
    spread = sum(min(hamming_distance(x, y, n) for y in rb) for x in ra)
    return (len(ra), k, spread)


def _quadratic_pinch(a: Table, b: Table) -> Optional[TraceStep]:
    """A same-table degree-2 move strictly decreasing the pair potential."""
    n = a.n
    pot0 = pair_potential(a, b)
    for side, t in ((0, a), (1, b)):
        rows = t.rows
        tried: set[tuple[int, int]] = set()
        for i, j in itertools.combinations(range(len(rows)), 2):
            u, v = rows[i], rows[j]
            if (u, v) in tried or u == v:
                continue
            tried.add((u, v))
            for repl in profile_fiber((u, v), n):
                if repl == (u, v) or repl == (min(u, v), max(u, v)):
                    continue
                keep = list(rows)
                keep.remove(u)
                keep.remove(v)
                new_rows = tuple(sorted(keep + list(repl)))
                state = (new_rows, b.rows) if side == 0 else (a.rows, new_rows)
                if _potential_of(state, n) < pot0:
                    return TraceStep(side, Move((min(u, v), max(u, v)),
                                                repl, n))
    return None


def reduce_hamming_ge4(state: PairState, budget: Budget,
                       cache: FiberCache,
                       max_degree: int = 4) -> list[TraceStep]:
    """Shrink a pinned disagreement string of length >= 4 to length <= 3.

    Only four disagreement columns at a time are exchanged (replacements
    act on their projection), matching the four-column reduction this
    implements; the loop re-pins until the minimal distance is <= 3.
    """
    r0, r1, k = state.pinned or state.pin()
    if k < 4:
        raise ValueError("reduce_hamming_ge4 needs disagreement >= 4")
    n = state.t0.n
    a, b = state.t0, state.t1
    steps: list[TraceStep] = []
    while True:
        ra, rb = strip_common(a.rows, b.rows)
        if not ra:
            break
        r0, r1, k = min_hamming_pair(Table(ra, n), Table(rb, n))
        if k <= 3:
            break
        _, _, agree = hamming(r0, r1, n)
        dis_cols = tuple(c for c in range(n) if c not in agree)[:4]
        pot0 = (len(ra), k)
        found = pair_search(
            Table(ra, n), Table(rb, n),
            goal=lambda s: _potential_of(s, n) < pot0,
            score=lambda s: _score_potential(s, n),
            budget=budget, max_degree=max_degree, cols=dis_cols,
            cache=cache)
        if found is None:
            raise StrategyGap(f"ge4:string-len-{k}")
        for st in found:
            if st.side == 0:
                a = apply_move(a, st.move)
            else:
                b = apply_move(b, st.move)
        steps.extend(found)
    return steps


def reduce_hamming_3(state: PairState, budget: Budget,
                     cache: FiberCache,
                     max_degree: int = 4) -> list[TraceStep]:
    """Reduce a pinned pair at distance 3 (string abc) to distance <= 2."""
    r0, r1, k = state.pinned or state.pin()
    if k != 3:
        raise ValueError("reduce_hamming_3 needs distance exactly 3")
    n = state.t0.n
    d0, k0 = pair_potential(state.t0, state.t1)
    steps = pair_search(
        state.t0, state.t1,
        goal=lambda s: _potential_of(s, n) < (d0, k0),
        score=lambda s: _score_potential(s, n),
        budget=budget, max_degree=max_degree, cache=cache)
    if steps is None:
        raise StrategyGap("abc")
    return steps


_CASE_BY_YZW = {
    (1, 2, 0): "I", (1, 2, 2): "II", (2, 2, 2): "III",
    (1, 3, 0): "IV", (1, 3, 3): "V", (1, 0, 3): "VI", (1, 0, 2): "VII",
    (2, 3, 3): "VIII", (2, 0, 0): "IX", (1, 0, 0): "X",
}


def classify_k2_case(t0: Table, t1: Table,
                     pinned: tuple[int, int, int]) -> str:
    """Best-effort case label (I..X) for a distance-2 pinned pair.

    Normalizes by the flow and automorphism actions the way the case table
    fixes x = beta; used for diagnostics only.
    """
    r0, r1, k = pinned
    if k != 2:
        return "k2:not-2"
    n = t0.n
    diff = r0 ^ r1
    cols = [c for c in range(n) if groups.entry(diff, c, n)]
    delta = groups.entry(diff, cols[0], n)
    for aut in groups.AUTOMORPHISMS:
        if aut[delta] != 1:
            continue
        a0 = [groups.apply_aut_flow(aut, v ^ r1, n) for v in t0.rows]
        a1 = [groups.apply_aut_flow(aut, v ^ r1, n) for v in t1.rows]
        c0, c1 = cols[0], cols[1]
        xs = [groups.entry(v, c1, n) for v in a0
              if groups.entry(v, c0, n) == 0 and groups.entry(v, c1, n)]
        ys = [groups.entry(v, c0, n) for v in a0
              if groups.entry(v, c1, n) == 0 and groups.entry(v, c0, n)]
        zs = [groups.entry(v, c1, n) for v in a1
              if groups.entry(v, c0, n) == 1]
        ws = [groups.entry(v, c0, n) for v in a1
              if groups.entry(v, c1, n) == 1 and groups.entry(v, c0, n) != 1]
        if 2 not in xs:
            continue
        for y in ys or [0]:
            for z in zs or [0]:
                for w in ws or [0]:
                    label = _CASE_BY_YZW.get((y, z, w))
                    if label:
                        return label
    return "unclassified"


def reduce_hamming_2(state: PairState, budget: Budget, cache: FiberCache,
                     diag: Diagnostics, max_degree: int,
                     depth: int) -> list[TraceStep]:
    """Distance-2 engine: reach a shared row, or clear the bad pairs in two
    agreement columns, merge them, and recurse on n-1 columns."""
    r0, r1, k = state.pinned or state.pin()
    n = state.t0.n
    d0, k0 = pair_potential(state.t0, state.t1)
    label = classify_k2_case(state.t0, state.t1, (r0, r1, k))
    diag.strategy_cases[f"k2:{label}"] += 1

    # phase A: go straight for a shared row
    steps = pair_search(
        state.t0, state.t1,
        goal=lambda s: _potential_of(s, n)[0] < d0,
        score=lambda s: _score_potential(s, n),
        budget=Budget(min(budget.nodes, 1500)), max_degree=max_degree,
        cache=cache)
    if steps is not None:
        budget.spend(0)
        return steps

    if n < 4 or depth > n:
        raise StrategyGap(f"k2:{label}:no-shared-row")

    # phase B: clear bad pairs in two agreement columns of the pinned pair
    _, _, agree = hamming(r0, r1, n)
    if len(agree) < 2:
        raise StrategyGap(f"k2:{label}:no-agreement-columns")
    best_pq = min(itertools.combinations(agree, 2),
                  key=lambda pq: _bad_count(state.t0.rows + state.t1.rows,
                                            n, *pq))
    p, q = best_pq

    def badness(s: SearchState) -> int:
        return _bad_count(s[0], n, p, q) + _bad_count(s[1], n, p, q)

    bad0 = badness((state.t0.rows, state.t1.rows))
    steps = []
    a, b = state.t0, state.t1
    if bad0:
        found = pair_search(
            a, b,
            goal=lambda s: badness(s) == 0 or _potential_of(s, n) < (d0, k0),
            score=lambda s: (badness(s),) + _score_potential(s, n),
            budget=budget, max_degree=max_degree, cache=cache)
        if found is None:
            raise StrategyGap(f"k2:{label}:bad-pairs-stuck")
        steps.extend(found)
        for st in found:
            if st.side == 0:
                a = apply_move(a, st.move)
            else:
                b = apply_move(b, st.move)
        if _potential_of((a.rows, b.rows), n) < (d0, k0):
            return steps  # progress made outright; outer loop continues

    merged = merge_columns(a, b, p, q)
    sub = reduce_pair(merged.t0, merged.t1, max_degree=max_degree,
                      node_budget=budget.nodes, _depth=depth + 1,
                      _diag=diag)
    budget.nodes = max(0, budget.nodes - sub.diagnostics.nodes_spent)
    if not sub.success:
        raise StrategyGap(f"k2:{label}:merged-pair-unreduced")
    lifted = merged.lift(sub.steps)
    steps.extend(lifted)
    return steps


# ---------------------------------------------------------------------------
# column merging and lifting
# ---------------------------------------------------------------------------

@dataclass
class MergedPair:
    """An (n-1)-column pair with the recipe to lift traces back.

    Columns p, q of the originals are removed and their rowwise sum is
    appended as the final merged column; with no bad pairs the merged pair
    is compatible and any trace on it lifts move by move, transplanting the
    (x, y) pairs between rows of equal merged sum, followed by quadratic
    swaps aligning the split of each pair.
    """

    t0: Table
    t1: Table
    n_orig: int
    p: int
    q: int
    orig0: Table
    orig1: Table

    def _merge_row(self, v: int) -> int:
        return _merge_row(v, self.n_orig, self.p, self.q)

    def lift(self, steps: Sequence[TraceStep]) -> list[TraceStep]:
        maps = [Counter(), Counter()]
        for v in self.orig0.rows:
            maps[0][v] += 1
        for v in self.orig1.rows:
            maps[1][v] += 1
        out: list[TraceStep] = []
        for step in steps:
            side = step.side
            cur = maps[side]
            removed_orig: list[int] = []
            pools: dict[int, list[int]] = {}
            for m in step.move.removed:
                v = _pop_preimage(cur, m, self.n_orig, self.p, self.q)
                removed_orig.append(v)
                s = groups.entry(v, self.p, self.n_orig) ^ \
                    groups.entry(v, self.q, self.n_orig)
                pools.setdefault(s, []).append(v)
            inserted_orig = []
            nm = self.n_orig - 1
            for m in step.move.inserted:
                s = groups.entry(m, nm - 1, nm)
                base = pools[s].pop()
                inserted_orig.append(_unmerge_row(
                    m, self.n_orig, self.p, self.q,
                    groups.entry(base, self.p, self.n_orig),
                    groups.entry(base, self.q, self.n_orig)))
            for v in inserted_orig:
                cur[v] += 1
            out.append(TraceStep(side, Move(tuple(sorted(removed_orig)),
                                            tuple(sorted(inserted_orig)),
                                            self.n_orig)))
        # the lifts agree up to the split of each (p, q) pair; align by
        # quadratic swaps on side 0
        rows0 = Counter()
        for v, c in maps[0].items():
            rows0[v] = c
        rows1 = maps[1]
        out.extend(self._alignment_moves(rows0, rows1))
        return out

    def _alignment_moves(self, rows0: Counter, rows1: Counter
                         ) -> list[TraceStep]:
        n, p, q = self.n_orig, self.p, self.q
        moves = []
        guard = 0
        while True:
            guard += 1
            if guard > 4 * (len(list(rows0.elements())) + 1):
                raise AssertionError("pair alignment did not terminate")
            extra = rows0 - rows1
            if not extra:
                break
            a1 = next(iter(extra.elements()))
            x = groups.entry(a1, p, n)
            s = x ^ groups.entry(a1, q, n)
            # a1 carries (x, y) with {x, y} = {s, 0}; find a partner in the
            # surplus with the opposite orientation of the same s
            partner = None
            for v in extra.elements():
                if v == a1:
                    continue
                vx = groups.entry(v, p, n)
                vs = vx ^ groups.entry(v, q, n)
                if vs == s and vx != x:
                    partner = v
                    break
            if partner is None:
                raise AssertionError("no alignment partner; merge invariant broken")
            na = _set_pair(a1, n, p, q, groups.entry(partner, p, n),
                           groups.entry(partner, q, n))
            nb = _set_pair(partner, n, p, q, x, groups.entry(a1, q, n))
            mv = Move(tuple(sorted((a1, partner))), tuple(sorted((na, nb))), n)
            moves.append(TraceStep(0, mv))
            rows0[a1] -= 1
            rows0[partner] -= 1
            rows0 += Counter((na, nb))
            rows0 = +rows0
        return moves


def _merge_row(v: int, n: int, p: int, q: int) -> int:
    ent = list(groups.unpack(v, n))
    s = ent[p] ^ ent[q]
    rest = [g for i, g in enumerate(ent) if i not in (p, q)]
    return groups.pack(rest + [s])


def _unmerge_row(m: int, n: int, p: int, q: int, x: int, y: int) -> int:
    ent = list(groups.unpack(m, n - 1))
    s = ent.pop()  # merged sum
    if (x ^ y) != s:
        raise ValueError("pair does not match merged sum")
    rest = iter(ent)
    out = []
    for i in range(n):
        if i == p:
            out.append(x)
        elif i == q:
            out.append(y)
        else:
            out.append(next(rest))
    return groups.pack(out)


def _set_pair(v: int, n: int, p: int, q: int, x: int, y: int) -> int:
    return groups.set_entry(groups.set_entry(v, p, n, x), q, n, y)


def _pop_preimage(pool: Counter, merged: int, n: int, p: int, q: int) -> int:
    for v in pool:
        if pool[v] > 0 and _merge_row(v, n, p, q) == merged:
            pool[v] -= 1
            return v
    raise ValueError("no preimage for merged row")


def merge_columns(t0: Table, t1: Table, p: Optional[int] = None,
                  q: Optional[int] = None) -> MergedPair:
    """Merge columns p and q (default: the last two) of a pair without bad
    pairs, returning the (n-1)-column pair plus the lifting recipe."""
    n = t0.n
    if p is None:
        p, q = n - 2, n - 1
    assert q is not None
    if p > q:
        p, q = q, p
    for t in (t0, t1):
        if find_bad_pairs(t, p, q):
            raise ValueError("bad pair present; columns cannot be merged")
    m0 = Table.make([_merge_row(v, n, p, q) for v in t0.rows], n - 1,
                    check=False)
    m1 = Table.make([_merge_row(v, n, p, q) for v in t1.rows], n - 1,
                    check=False)
    if not compatible(m0, m1):
        raise AssertionError("merged pair incompatible; precondition broken")
    return MergedPair(m0, m1, n, p, q, t0, t1)


# ---------------------------------------------------------------------------
# the reducer
# ---------------------------------------------------------------------------

def reduce_pair(t0: Table, t1: Table, *, max_degree: int = 4,
                node_budget: int = 10_000,
                _depth: int = 0,
                _diag: Optional[Diagnostics] = None) -> ReduceResult:
    """Produce a validated trace of degree-<=max_degree moves making the
    tables equal.

    Returns success=False with a partial trace and diagnostics when the
    budget runs out; the partial trace is still legal move by move.
    """
    if not compatible(t0, t1):
        raise ValueError("reduce_pair needs compatible tables")
    diag = _diag if _diag is not None else Diagnostics()
    budget = Budget(node_budget)
    cache = FiberCache()
    steps: list[TraceStep] = []
    a, b = t0, t1

    def apply_steps(new_steps: Sequence[TraceStep]) -> None:
        nonlocal a, b
        for st in new_steps:
            if st.side == 0:
                a = apply_move(a, st.move)
            else:
                b = apply_move(b, st.move)
            steps.append(st)

    guard = 0
    try:
        while True:
            guard += 1
            if guard > 500:
                raise BudgetExhausted("iteration guard tripped")
            ra, rb = strip_common(a.rows, b.rows)
            if not ra:
                break
            if len(ra) <= max_degree:
                apply_steps([TraceStep(0, Move(ra, rb, a.n))])
                continue
            sa, sb = Table(ra, a.n), Table(rb, a.n)
            pinch = _quadratic_pinch(sa, sb)
            if pinch is not None:
                apply_steps([pinch])
                continue
            state = PairState(sa, sb)
            r0, r1, k = state.pin()
            pot0 = pair_potential(sa, sb)
            try:
                if k >= 4:
                    diag.strategy_cases["ge4"] += 1
                    new_steps = reduce_hamming_ge4(state, budget, cache,
                                                   max_degree)
                elif k == 3:
                    diag.strategy_cases["abc"] += 1
                    new_steps = reduce_hamming_3(state, budget, cache,
                                                 max_degree)
                else:
                    new_steps = reduce_hamming_2(state, budget, cache, diag,
                                                 max_degree, _depth)
            except StrategyGap as gap:
                diag.fallback_cases[gap.label] += 1
                found = pair_search(
                    sa, sb,
                    goal=lambda s: _potential_of(s, sa.n) < pot0,
                    score=lambda s: _score_potential(s, sa.n),
                    budget=budget, max_degree=max_degree, cache=cache,
                    beam=128)
                if found is None:
                    raise BudgetExhausted(
                        f"strategy gap {gap.label} and fallback frontier "
                        "emptied") from gap
                new_steps = found
            apply_steps(new_steps)
    except BudgetExhausted as exc:
        diag.nodes_spent += node_budget - budget.nodes
        return ReduceResult(steps, False, diag, str(exc))
    diag.nodes_spent += node_budget - budget.nodes
    if _depth == 0 and not trace_is_valid(t0, t1, steps, max_degree):
        raise AssertionError("produced an invalid trace; refusing to return it")
    return ReduceResult(steps, True, diag)


# ---------------------------------------------------------------------------
# fuzz generation
# ---------------------------------------------------------------------------

def random_flow(n: int, rng: random.Random) -> int:
    prefix = rng.randrange(4 ** (n - 1))
    return (prefix << 2) | groups.word_sum(prefix, n - 1)


def random_table(n: int, d: int, rng: random.Random) -> Table:
    return Table.make([random_flow(n, rng) for _ in range(d)], n, check=False)


class _SampleCap(Exception):
    pass


def sample_fiber_member(t: Table, rng: random.Random,
                        max_nodes: int = 200_000) -> Table:
    """A random table with the profile of t, via randomized backtracking."""
    n, d = t.n, t.degree

    def attempt() -> Optional[list[int]]:
        counts = [list(col) for col in zip(*[iter(t.profile())] * 4)]
        nodes = 0

        def rec(rows: list[int]) -> Optional[list[int]]:
            if len(rows) == d:
                return rows

            def build(col: int, acc: int, s: int) -> Optional[list[int]]:
                nonlocal nodes
                nodes += 1
                if nodes > max_nodes:
                    raise _SampleCap
                if col == n - 1:
                    if counts[col][s] > 0:
                        v = (acc << 2) | s
                        for i in range(n):
                            counts[i][groups.entry(v, i, n)] -= 1
                        rows.append(v)
                        got = rec(rows)
                        if got is not None:
                            return got
                        rows.pop()
                        for i in range(n):
                            counts[i][groups.entry(v, i, n)] += 1
                    return None
                syms = [g for g in range(4) if counts[col][g] > 0]
                rng.shuffle(syms)
                for g in syms:
                    got = build(col + 1, (acc << 2) | g, s ^ g)
                    if got is not None:
                        return got
                return None

            return build(0, 0, 0)

        return rec([])

    for _ in range(8):
        try:
            got = attempt()
        except _SampleCap:
            continue
        if got is not None:
            return Table.make(got, n, check=False)
    raise RuntimeError("fiber sampling failed; profile too constrained")


def random_compatible_pair(n: int, d: int,
                           rng: random.Random) -> tuple[Table, Table]:
    t0 = random_table(n, d, rng)
    t1 = sample_fiber_member(t0, rng)
    return t0, t1


@dataclass
class FuzzReport:
    total: int
    reduced: int
    replay_valid: int
    fallbacks: Counter
    max_trace_len: int
    failures: list[dict]

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "reduced": self.reduced,
            "replay_valid": self.replay_valid,
            "fallback_cases": dict(self.fallbacks),
            "max_trace_len": self.max_trace_len,
            "failures": self.failures,
        }


def fuzz_reduce(n: int, max_d: int, count: int, seed: int,
                *, max_degree: int = 4, node_budget: int = 10_000,
                progress: Optional[Callable[[str], None]] = None
                ) -> FuzzReport:
    """Reduce `count` seeded random compatible pairs; every output trace is
    replayed independently."""
    rng = random.Random(seed)
    fallbacks: Counter = Counter()
    reduced = valid = 0
    max_len = 0
    failures = []
    for i in range(count):
        d = rng.randint(2, max_d)
        t0, t1 = random_compatible_pair(n, d, rng)
        res = reduce_pair(t0, t1, max_degree=max_degree,
                          node_budget=node_budget)
        fallbacks.update(res.diagnostics.fallback_cases)
        if res.success:
            reduced += 1
            if trace_is_valid(t0, t1, res.steps, max_degree):
                valid += 1
                max_len = max(max_len, len(res.steps))
            else:
                failures.append({"pair": i, "reason": "replay failed",
                                 "t0": t0.row_strings(),
                                 "t1": t1.row_strings()})
        else:
            failures.append({"pair": i, "reason": res.message,
                             "t0": t0.row_strings(),
                             "t1": t1.row_strings()})
        if progress and (i + 1) % 100 == 0:
            progress(f"{i + 1}/{count} pairs, {reduced} reduced")
    return FuzzReport(count, reduced, valid, fallbacks, max_len, failures)
