"""Degree-bounded moves between tables and fiber neighbor generation.

A move removes a sub-multiset of rows and inserts a compatible multiset of
the same size; applying it to a table leaves the profile (and degree)
untouched.  Replacing a single row is never possible non-trivially because
distinct flows have distinct profiles, so every real move has degree >= 2.
"""

from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from . import groups
from .tables import Table, profile_of_rows


@dataclass(frozen=True)
class Move:
    """An exchange of `removed` for the compatible multiset `inserted`."""

    removed: tuple[int, ...]
    inserted: tuple[int, ...]
    n: int

    @classmethod
    def make(cls, removed: Iterable[int], inserted: Iterable[int], n: int,
             *, check: bool = True) -> "Move":
        rem = tuple(sorted(removed))
        ins = tuple(sorted(inserted))
        if check:
            if len(rem) != len(ins):
                raise ValueError("move must exchange equally many rows")
            if rem == ins:
                raise ValueError("trivial move (removed == inserted)")
            for v in rem + ins:
                if not groups.is_flow(v, n):
                    raise ValueError(
                        f"{groups.format_flow(v, n)} is not a flow of length {n}")
            if profile_of_rows(rem, n) != profile_of_rows(ins, n):
                raise ValueError("removed and inserted rows are not compatible")
        return cls(rem, ins, n)

    @property
    def degree(self) -> int:
        return len(self.removed)

    def reversed(self) -> "Move":
        return Move(self.inserted, self.removed, self.n)

    def columns_touched(self) -> tuple[int, ...]:
        """Columns that change under the best row pairing.

        Moves are row multiset exchanges, so "touched" is defined relative to
        the pairing of removed with inserted rows minimizing the number of
        differing columns (brute force; move degrees here are tiny).
        """
        s = self.degree
        best: Optional[set[int]] = None
        for perm in itertools.permutations(range(s)):
            cols: set[int] = set()
            for i, j in enumerate(perm):
                diff = self.removed[i] ^ self.inserted[j]
                for c in range(self.n):
                    if (diff >> (2 * (self.n - 1 - c))) & 3:
                        cols.add(c)
            if best is None or len(cols) < len(best):
                best = cols
        assert best is not None
        return tuple(sorted(best))

    def to_json(self) -> dict:
        return {
            "remove": [groups.format_flow(v, self.n) for v in self.removed],
            "insert": [groups.format_flow(v, self.n) for v in self.inserted],
        }

    @classmethod
    def from_json(cls, obj) -> "Move":
        rem = [groups.parse_flow(s) for s in obj["remove"]]
        ins = [groups.parse_flow(s) for s in obj["insert"]]
        return cls.make(rem, ins, len(obj["remove"][0]))


def apply_move(t: Table, m: Move) -> Table:
    """Table with m.removed deleted and m.inserted added."""
    if t.n != m.n:
        raise ValueError("move length does not match table")
    remaining = t.without(m.removed)
    return Table.make(remaining + m.inserted, t.n, check=False)


# ---------------------------------------------------------------------------
# replacement fibers
# ---------------------------------------------------------------------------

def _pair_replacements(rows: Sequence[int], n: int) -> list[tuple[int, ...]]:
    """All 2-row multisets compatible with the given 2 rows (fast path).

    A replacement pair is obtained by moving a subset of the differing
    columns from one row to the other; the subset's deltas must sum to zero
    to keep rows flows.
    """
    a, b = rows
    diff = a ^ b
    deltas = []
    for i in range(n):
        d = (diff >> (2 * (n - 1 - i))) & 3
        if d:
            deltas.append((i, d))
    out = set()
    m = len(deltas)
    for mask in range(1 << m):
        s = 0
        for j in range(m):
            if mask >> j & 1:
                s ^= deltas[j][1]
        if s:
            continue
        na, nb = a, b
        for j in range(m):
            if mask >> j & 1:
                i, d = deltas[j]
                sh = 2 * (n - 1 - i)
                na ^= d << sh
                nb ^= d << sh
        out.add((na, nb) if na <= nb else (nb, na))
    return sorted(out)


def profile_fiber(rows: Sequence[int], n: int,
                  cap: Optional[int] = None) -> list[tuple[int, ...]]:
    """All sorted row multisets sharing the profile of `rows`.

    Enumerates by backtracking over rows in nondecreasing packed order,
    pruning on remaining per-column symbol counts.  `cap` bounds the number
    of members returned (None = exhaustive); hitting the cap raises
    FiberTooLarge so callers never mistake a truncation for the whole fiber.
    """
    s = len(rows)
    if s == 2 and cap is None:
        return _pair_replacements(rows, n)
    counts = [list(c) for c in _column_counts(rows, n)]
    out: list[tuple[int, ...]] = []

    def candidates(lo: int, rows_left: int) -> Iterator[int]:
        # enumerate flows >= lo consistent with remaining counts
        def rec(col: int, acc: int, ssum: int, tight: bool) -> Iterator[int]:
            if col == n - 1:
                g = ssum
                lo_g = (lo >> (2 * (n - 1 - col))) & 3 if tight else 0
                if g >= lo_g and counts[col][g] > 0:
                    yield (acc << 2) | g
                return
            lo_g = (lo >> (2 * (n - 1 - col))) & 3 if tight else 0
            for g in range(4):
                if counts[col][g] <= 0 or g < lo_g:
                    continue
                yield from rec(col + 1, (acc << 2) | g, ssum ^ g,
                               tight and g == lo_g)
        yield from rec(0, 0, 0, True)

    def rec_rows(chosen: list[int], lo: int) -> None:
        if len(chosen) == s:
            out.append(tuple(chosen))
            if cap is not None and len(out) > cap:
                raise FiberTooLarge(len(out))
            return
        for v in candidates(lo, s - len(chosen)):
            for i in range(n):
                counts[i][(v >> (2 * (n - 1 - i))) & 3] -= 1
            chosen.append(v)
            rec_rows(chosen, v)
            chosen.pop()
            for i in range(n):
                counts[i][(v >> (2 * (n - 1 - i))) & 3] += 1

    rec_rows([], 0)
    return out


class FiberTooLarge(Exception):
    """Raised when a replacement fiber exceeds the requested cap."""


def _column_counts(rows: Sequence[int], n: int) -> list[tuple[int, int, int, int]]:
    cols = []
    for i in range(n):
        c = [0, 0, 0, 0]
        for v in rows:
            c[(v >> (2 * (n - 1 - i))) & 3] += 1
        cols.append(tuple(c))
    return cols


class FiberCache:
    """Memo table from sub-multiset profile to its full replacement fiber.

    get_or_compute is atomic under a lock, so census/reduction workers can
    share one instance.  Keys are (sorted column-count tuples, size).
    """

    def __init__(self, max_entries: int = 1 << 18):
        self._data: dict = {}
        self._lock = threading.Lock()
        self._max = max_entries
        self.hits = 0
        self.misses = 0

    def fiber_for(self, rows: Sequence[int], n: int,
                  cap: Optional[int] = None) -> list[tuple[int, ...]]:
        key = (tuple(_column_counts(rows, n)), len(rows))
        with self._lock:
            hit = self._data.get(key)
            if hit is not None:
                self.hits += 1
                return hit
        members = profile_fiber(rows, n, cap=cap)
        with self._lock:
            self.misses += 1
            if len(self._data) < self._max:
                self._data[key] = members
        return members


def neighbors(t: Table, max_deg: int, cache: Optional[FiberCache] = None,
              *, fiber_cap: Optional[int] = None,
              min_deg: int = 2) -> Iterator[tuple[Move, Table]]:
    """All tables one legal move of degree <= max_deg away, each once.

    Sub-multisets are enumerated in canonical combination order and results
    deduplicated by the canonical table key.  Size-1 selections are skipped
    outright (no non-trivial single-row replacement exists).
    """
    if max_deg < 2:
        raise ValueError("moves need degree >= 2")
    cache = cache or FiberCache()
    seen: set[tuple[int, ...]] = set()
    rows = t.rows
    d = len(rows)
    for s in range(max(2, min_deg), min(max_deg, d) + 1):
        for idx in _distinct_index_combos(rows, s):
            sub = tuple(rows[i] for i in idx)
            try:
                fiber = cache.fiber_for(sub, t.n, cap=fiber_cap)
            except FiberTooLarge:
                continue
            keep = list(rows)
            for i in reversed(idx):
                del keep[i]
            for repl in fiber:
                if repl == sub:
                    continue
                new_rows = tuple(sorted(keep + list(repl)))
                if new_rows == rows or new_rows in seen:
                    continue
                seen.add(new_rows)
                yield Move(sub, repl, t.n), Table(new_rows, t.n)


def _distinct_index_combos(rows: Sequence[int], s: int) -> Iterator[tuple[int, ...]]:
    """Index combinations yielding distinct sub-multisets of the sorted rows."""
    seen: set[tuple[int, ...]] = set()
    for idx in itertools.combinations(range(len(rows)), s):
        sub = tuple(rows[i] for i in idx)
        if sub in seen:
            continue
        seen.add(sub)
        yield idx


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    side: int  # 0 applies to T0, 1 applies to T1
    move: Move

    def to_json(self) -> dict:
        obj = {"side": "T0" if self.side == 0 else "T1"}
        obj.update(self.move.to_json())
        return obj

    @classmethod
    def from_json(cls, obj) -> "TraceStep":
        side = {"T0": 0, "T1": 1}[obj["side"]]
        return cls(side, Move.from_json(obj))


def replay_trace(t0: Table, t1: Table, steps: Sequence[TraceStep],
                 max_degree: int = 4) -> tuple[Table, Table]:
    """Replay steps, validating every move; returns the transformed pair.

    Raises ValueError on any illegal step (bad degree, sub-multiset not
    present, incompatible exchange).
    """
    a, b = t0, t1
    for step in steps:
        if step.move.degree > max_degree:
            raise ValueError(
                f"move degree {step.move.degree} exceeds bound {max_degree}")
        if step.side == 0:
            a = apply_move(a, step.move)
        else:
            b = apply_move(b, step.move)
    return a, b


def trace_is_valid(t0: Table, t1: Table, steps: Sequence[TraceStep],
                   max_degree: int = 4) -> bool:
    try:
        a, b = replay_trace(t0, t1, steps, max_degree)
    except ValueError:
        return False
    return a == b


def write_trace(path: str, steps: Sequence[TraceStep]) -> None:
    with open(path, "w") as fh:
        for step in steps:
            fh.write(json.dumps(step.to_json()) + "\n")


def read_trace(path: str) -> list[TraceStep]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TraceStep.from_json(json.loads(line)))
    return out
