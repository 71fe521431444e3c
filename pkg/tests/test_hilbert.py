import math
from fractions import Fraction

import pytest

from kimura4 import groups, hilbert
from kimura4.hilbert import (bundled_hilbert_polynomial, bundled_series,
                             build_record, eval_poly, expand_series,
                             fit_ehrhart, h_numerator, hilbert_values,
                             polytope_dimension, regularity_bound)


def test_expand_series_geometric():
    assert expand_series([1], 1, 5) == [1] * 6
    # 1/(1-t)^2 = 1 + 2t + 3t^2 + ...
    assert expand_series([1], 2, 4) == [1, 2, 3, 4, 5]


def test_paper_series_t1_coefficients_match_vertex_counts():
    num, e, _ = bundled_series("n6_full")
    assert expand_series(num, e, 1)[1] == 1024 == 1005 + 19
    num, e, _ = bundled_series("n6_tilde")
    assert expand_series(num, e, 1)[1] == 512 == 495 + 17
    num, e, _ = bundled_series("n6_tilde_prime")
    assert expand_series(num, e, 1)[1] == 576 == 559 + 17


def test_h_numerator_round_trips_all_bundled():
    for name in ("n6_full", "n6_tilde", "n6_tilde_prime"):
        num, e, dim = bundled_series(name)
        values = expand_series(num, e, len(num) + 4)
        assert h_numerator(values, dim) == num


def test_h_numerator_point_polytope():
    assert h_numerator([1] * 6, 0) == [1]


def test_h_numerator_needs_termination():
    # truncating before the tail of zeros must raise
    num, e, dim = bundled_series("n6_full")
    values = expand_series(num, e, 10)
    with pytest.raises(ValueError):
        h_numerator(values, dim)


def test_regularity_bounds_from_paper_series():
    num, e, dim = bundled_series("n6_full")
    values = expand_series(num, e, len(num) + 3)
    rec = hilbert.HilbertRecord(6, "", dim, values,
                                h_coeffs=h_numerator(values, dim))
    assert rec.h_degree == 15
    assert regularity_bound(rec) == 16
    assert rec.a_invariant == 15 - 18 - 1 == -4
    for name in ("n6_tilde", "n6_tilde_prime"):
        num, e, dim = bundled_series(name)
        values = expand_series(num, e, len(num) + 3)
        rec = hilbert.HilbertRecord(6, name, dim, values,
                                    h_coeffs=h_numerator(values, dim))
        assert regularity_bound(rec) == 14
        assert rec.a_invariant < 0


def test_fit_ehrhart_constant():
    assert fit_ehrhart([1, 1, 1], 0) == [Fraction(1)]


def test_fit_ehrhart_rejects_non_polynomial():
    with pytest.raises(ValueError):
        fit_ehrhart([1, 2, 4, 8, 16], 2)


def test_fit_matches_paper_hilbert_polynomial():
    num, e, dim = bundled_series("n6_full")
    values = expand_series(num, e, 21)
    poly = fit_ehrhart(values, dim)
    assert poly == bundled_hilbert_polynomial()
    assert poly[-1] == Fraction(22261501, 4168212048000)


def test_hilbert_values_small():
    assert hilbert_values(3, None, 0) == [1]
    vals = hilbert_values(3, None, 2)
    assert vals == [1, 16, 136]  # no degree-2 relations at n=3
    assert hilbert_values(6, None, 1)[1] == 1024


def test_enumerated_h2_matches_series_n6():
    num, e, _ = bundled_series("n6_full")
    assert hilbert_values(6, None, 2)[2] == expand_series(num, e, 2)[2]


def test_polytope_dimensions():
    assert polytope_dimension(3) == 9
    assert polytope_dimension(4) == 12
    assert polytope_dimension(6, groups.FACE_P1) == 15
    assert polytope_dimension(6, groups.FACE_CODIM2_A) == 16


def test_n3_record_full():
    rec = build_record(3, None, 12)
    assert rec.dim == 9
    assert rec.values[1] == 16
    assert rec.h_coeffs[0] == 1
    assert all(c >= 0 for c in rec.h_coeffs)
    assert rec.a_invariant < 0
    assert rec.regularity_bound == 1 + rec.h_degree
    # leading coefficient times dim! is the normalized volume, an integer
    poly = [Fraction(c) for c in map(Fraction, rec.ehrhart)]
    vol = poly[-1] * math.factorial(9)
    assert vol.denominator == 1 and vol > 0
    assert vol == sum(rec.h_coeffs)
    # Ehrhart reciprocity zero pattern: vanishes at -1 .. a_invariant + 1
    for x in range(-1, rec.a_invariant, -1):
        assert eval_poly(poly, x) == 0
    assert eval_poly(poly, rec.a_invariant) != 0


def test_face_records_h1_and_dimension():
    for face, verts in ((groups.FACE_P1, 256), (groups.FACE_P2, 384),
                        (groups.FACE_P3, 432)):
        vals = hilbert_values(6, face, 1)
        assert vals[1] == verts


def test_dilation_budget():
    with pytest.raises(hilbert.DilationBudgetExceeded):
        hilbert_values(4, None, 8, max_layer=10_000)
