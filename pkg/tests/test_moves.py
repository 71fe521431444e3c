import itertools
import random

import pytest

from kimura4 import corpus, groups
from kimura4.moves import (FiberCache, Move, TraceStep, apply_move, neighbors,
                           profile_fiber, replay_trace, trace_is_valid)
from kimura4.tables import Table, compatible, profile_of_rows

T0_EX = Table.from_strings(["aa00", "0bb0", "c00c"])
T1_EX = Table.from_strings(["0000", "cab0", "ab0c"])
EXMOVE = Move.make([groups.parse_flow(s) for s in ("aa00", "0bb0", "c00c")],
                   [groups.parse_flow(s) for s in ("0000", "cab0", "ab0c")], 4)


def test_apply_move_example():
    out = apply_move(T0_EX, EXMOVE)
    assert out == T1_EX
    assert out.profile() == T0_EX.profile()
    assert out.degree == T0_EX.degree


def test_move_validation():
    rows = [groups.parse_flow("aa00")]
    with pytest.raises(ValueError):
        Move.make(rows, rows, 4)  # trivial
    with pytest.raises(ValueError):
        Move.make(rows, [groups.parse_flow("bb00")], 4)  # incompatible
    with pytest.raises(ValueError):
        apply_move(T1_EX, EXMOVE)  # removed rows absent


def test_move_reversibility():
    back = EXMOVE.reversed()
    assert apply_move(apply_move(T0_EX, EXMOVE), back) == T0_EX


def test_columns_touched():
    # the intro exchange lives in columns 1 and 2
    assert EXMOVE.columns_touched() == (0, 1)


def test_pair_replacement_fiber_complete():
    # brute force cross-check of the degree-2 fiber on random pairs
    rng = random.Random(3)
    flows = groups.enumerate_flows(4)
    for _ in range(40):
        a, b = rng.choice(flows), rng.choice(flows)
        fiber = profile_fiber((min(a, b), max(a, b)), 4)
        prof = profile_of_rows((a, b), 4)
        brute = sorted({
            (min(x, y), max(x, y))
            for x in flows for y in flows
            if profile_of_rows((x, y), 4) == prof
        })
        assert fiber == brute


def test_profile_fiber_contains_itself_and_matches_profile():
    rows = tuple(sorted(groups.parse_flow(s) for s in ("aa00", "0bb0", "c00c")))
    fiber = profile_fiber(rows, 4)
    assert rows in fiber
    prof = profile_of_rows(rows, 4)
    for member in fiber:
        assert profile_of_rows(member, 4) == prof
    assert tuple(sorted(T1_EX.rows)) in fiber


def test_apply_move_preserves_profile_on_corpus_and_random():
    for mv in corpus.corpus_moves():
        t = Table.make(mv.removed, mv.n, check=False)
        out = apply_move(t, mv)
        assert out.profile() == t.profile()
    rng = random.Random(11)
    flows = groups.enumerate_flows(5)
    checked = 0
    while checked < 2000:
        rows = tuple(sorted(rng.choice(flows) for _ in range(2)))
        for repl in profile_fiber(rows, 5):
            if repl != rows:
                t = Table.make(rows, 5, check=False)
                mv = Move.make(rows, repl, 5)
                assert apply_move(t, mv).profile() == t.profile()
                checked += 1
                break


def test_random_legal_moves_preserve_profile_bulk():
    # 100k random degree-2 exchanges via the subset-of-deltas fast path
    rng = random.Random(23)
    flows = groups.enumerate_flows(6)
    total = 0
    while total < 100_000:
        a, b = rng.choice(flows), rng.choice(flows)
        pair = (min(a, b), max(a, b))
        prof = profile_of_rows(pair, 6)
        for repl in profile_fiber(pair, 6):
            total += 1
            assert profile_of_rows(repl, 6) == prof
    assert total >= 100_000


def test_neighbors_example_reaches_target():
    cache = FiberCache()
    found = [t for _, t in neighbors(T0_EX, 3, cache)]
    assert T1_EX in found
    # neighbors are unique and stay in the fiber
    assert len(found) == len(set(found))
    for t in found:
        assert compatible(t, T0_EX)


def test_neighbors_rejects_degree_one():
    with pytest.raises(ValueError):
        next(neighbors(T0_EX, 1))


def test_singleton_fiber_has_no_neighbors():
    t = Table.from_strings(["abc"])
    assert list(neighbors(t, 4)) == []


def test_neighbors_symmetry_on_degree3_fibers_n4():
    # full symmetry check on tables drawn from real degree-3 fibers
    from kimura4.markov import fibers
    cache = FiberCache()
    checked = 0
    for fib in fibers(4, 3, include_singletons=False):
        tables = fib.tables()
        if len(tables) < 2 or len(tables) > 12:
            continue
        neigh = {t: {u for _, u in neighbors(t, 3, cache)} for t in tables}
        for t in tables:
            for u in neigh[t]:
                if u in neigh:
                    assert t in neigh[u]
        checked += 1
        if checked >= 8:
            break
    assert checked


def test_trace_round_trip(tmp_path):
    steps = [TraceStep(0, EXMOVE)]
    a, b = replay_trace(T0_EX, T1_EX, steps)
    assert a == b
    assert trace_is_valid(T0_EX, T1_EX, steps)
    path = tmp_path / "trace.jsonl"
    from kimura4.moves import read_trace, write_trace
    write_trace(str(path), steps)
    loaded = read_trace(str(path))
    assert loaded == steps
    assert not trace_is_valid(T0_EX, T1_EX, steps, max_degree=2)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

def test_corpus_passes_and_is_large_enough():
    report = corpus.verify_corpus()
    assert report.passed, report.summary()
    assert len(report.entries) >= 25
    for e in report.entries:
        assert e.degree <= 4


def test_corpus_covers_quoted_identities():
    ids = {e.id for e in corpus.load_corpus()}
    assert "intro-cubic-example" in ids
    assert "case8-quartic-1" in ids


def test_corpus_wildcards_expand():
    entries = {e.id: e for e in corpus.load_corpus()}
    diff = entries["difference-lemma-quadratic"]
    assert len(list(diff.assignments())) == 144
    bad = entries["badpair-ac-case12-quartic"]
    assert len(list(bad.assignments())) == 64


def test_corpus_negative_control():
    # corrupting a symbol must break compatibility
    entries = corpus.load_corpus()
    entry = next(e for e in entries if e.id == "intro-cubic-example")
    import copy
    broken = copy.deepcopy(entry)
    broken.lhs[0][0] = "b"
    rep = corpus.check_entry(broken)
    assert not rep.passed
    assert "column multisets differ" in rep.failures[0] or \
        "non-flow" in rep.failures[0]
