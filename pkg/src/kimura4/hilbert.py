"""Ehrhart/Hilbert computations for the model polytopes.

The polytope of the n-leaf model has the flows as vertices (under the
column-indicator embedding); it is normal, so the lattice-point count of
the k-th dilation equals the number of distinct degree-k table profiles and
coincides with the Hilbert function.  Dilation values are computed by
iterated sumset with deduplication on the profile key, never by facet
geometry.  All series and fitting arithmetic is exact (big integers and
Fractions): the numerator coefficients run to ~1e13 and convolutions
overflow 64 bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from . import groups
from .groups import FaceSpec


class DilationBudgetExceeded(Exception):
    """Sumset layer outgrew the configured budget; more dilations need RAM."""


# ---------------------------------------------------------------------------
# profile-key sumsets
# ---------------------------------------------------------------------------

def _vertex_keys(n: int, face: Optional[FaceSpec], bits: int) -> np.ndarray:
    """psi images as packed count vectors: per column, counts of a, b, c
    in `bits`-bit fields (the count of 0 is implied by the dilation)."""
    flows = groups.enumerate_flows(n, face)
    keys = []
    for v in flows:
        key = 0
        for i in range(n):
            g = groups.entry(v, i, n)
            if g:
                key += 1 << (bits * (3 * i + (g - 1)))
        keys.append(key)
    return np.array(keys, dtype=np.int64)


def hilbert_values(n: int, face: Optional[FaceSpec], kmax: int,
                   *, max_layer: int = 30_000_000,
                   chunk: int = 400_000) -> list[int]:
    """H(0..kmax): number of distinct degree-k table profiles.

    Valid as the Ehrhart/Hilbert function because the polytope is normal.
    Raises DilationBudgetExceeded when an intermediate layer would outgrow
    max_layer keys.
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    values = [1]
    if kmax == 0:
        return values
    bits = max(2, (kmax).bit_length())
    if 3 * n * bits > 63:
        raise ValueError(f"profile key needs {3 * n * bits} bits; "
                         "reduce kmax or n")
    deltas = _vertex_keys(n, face, bits)
    layer = np.array([0], dtype=np.int64)
    for _ in range(kmax):
        if len(layer) * len(deltas) > 50_000_000:
            # chunked expansion with progressive unique-merge
            parts = []
            for lo in range(0, len(layer), chunk):
                block = layer[lo:lo + chunk, None] + deltas[None, :]
                parts.append(np.unique(block.ravel()))
            layer = parts[0]
            for p in parts[1:]:
                layer = np.union1d(layer, p)
        else:
            layer = np.unique((layer[:, None] + deltas[None, :]).ravel())
        if len(layer) > max_layer:
            raise DilationBudgetExceeded(
                f"layer of {len(layer)} profiles exceeds budget {max_layer}")
        values.append(int(len(layer)))
    return values


def polytope_dimension(n: int, face: Optional[FaceSpec] = None) -> int:
    """Affine rank of the vertex set under the column-indicator embedding."""
    flows = groups.enumerate_flows(n, face)
    pts = np.zeros((len(flows), 4 * n))
    for r, v in enumerate(flows):
        for i in range(n):
            pts[r, 4 * i + groups.entry(v, i, n)] = 1.0
    return int(np.linalg.matrix_rank(pts - pts[0]))


# ---------------------------------------------------------------------------
# exact series arithmetic
# ---------------------------------------------------------------------------

def expand_series(numerator: Sequence[int], denom_exp: int, kmax: int) -> list[int]:
    """Power-series coefficients of numerator(t) / (1-t)**denom_exp up to t^kmax."""
    out = []
    e = denom_exp
    for k in range(kmax + 1):
        s = 0
        for i, c in enumerate(numerator):
            if i > k:
                break
            s += c * math.comb(k - i + e - 1, e - 1)
        out.append(s)
    return out


def h_numerator(values: Sequence[int], dim: int) -> list[int]:
    """Numerator h with sum H(j) t^j = h(t) / (1-t)**(dim+1).

    Convolves the values with the alternating binomials of (1-t)^(dim+1);
    the provided values must exhibit termination (trailing zero), otherwise
    more dilations are needed and ValueError is raised.
    """
    e = dim + 1
    coeffs = []
    for k in range(len(values)):
        s = 0
        for j in range(min(k, e) + 1):
            s += (-1) ** j * math.comb(e, j) * values[k - j]
        coeffs.append(s)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) == len(values) and coeffs[-1] != 0:
        raise ValueError(
            "h-numerator does not terminate within the provided dilations")
    return coeffs


def fit_ehrhart(values: Sequence[int], dim: int) -> list[Fraction]:
    """Monomial coefficients (ascending) of the degree-<=dim polynomial
    through H(0..), verified against every provided value exactly."""
    if len(values) < dim + 1:
        raise ValueError(f"need at least {dim + 1} values to fit degree {dim}")
    # Newton forward differences give the binomial-basis coordinates.
    diffs = [Fraction(v) for v in values[:dim + 1]]
    newton = [diffs[0]]
    for _ in range(dim):
        diffs = [b - a for a, b in zip(diffs, diffs[1:])]
        newton.append(diffs[0])
    # expand sum_j newton[j] * C(t, j) into monomials
    coeffs = [Fraction(0)] * (dim + 1)
    basis = [Fraction(1)]  # C(t, 0) = 1
    for j in range(dim + 1):
        for p, c in enumerate(basis):
            coeffs[p] += newton[j] * c
        # C(t, j+1) = C(t, j) * (t - j) / (j + 1)
        nxt = [Fraction(0)] * (len(basis) + 1)
        for p, c in enumerate(basis):
            nxt[p + 1] += c / (j + 1)
            nxt[p] -= c * j / (j + 1)
        basis = nxt
    poly = coeffs
    for k, v in enumerate(values):
        if eval_poly(poly, k) != v:
            raise ValueError(
                f"values are not polynomial of degree {dim}: mismatch at k={k}")
    return poly


def eval_poly(coeffs: Sequence[Fraction], x: int) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass
class HilbertRecord:
    n_leaves: int
    face: str
    dim: int
    values: list[int]
    h_coeffs: list[int] = field(default_factory=list)
    ehrhart: list[str] = field(default_factory=list)

    @property
    def h_degree(self) -> int:
        return len(self.h_coeffs) - 1

    @property
    def a_invariant(self) -> int:
        return self.h_degree - self.dim - 1

    @property
    def regularity_bound(self) -> int:
        """Generators of the ideal live in degree at most 1 + deg h."""
        return 1 + self.h_degree

    def to_json(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "face": self.face,
            "dim": self.dim,
            "values": self.values,
            "h_coeffs": self.h_coeffs,
            "h_degree": self.h_degree,
            "a_invariant": self.a_invariant,
            "regularity_bound": self.regularity_bound,
            "ehrhart": self.ehrhart,
        }


def build_record(n: int, face: Optional[FaceSpec], kmax: int,
                 *, fit: bool = True,
                 max_layer: int = 30_000_000) -> HilbertRecord:
    dim = polytope_dimension(n, face)
    values = hilbert_values(n, face, kmax, max_layer=max_layer)
    rec = HilbertRecord(n, str(face or ""), dim, values)
    try:
        rec.h_coeffs = h_numerator(values, dim)
    except ValueError:
        rec.h_coeffs = []
    if fit and kmax >= dim:
        poly = fit_ehrhart(values, dim)
        rec.ehrhart = [str(c) for c in poly]
    return rec


def regularity_bound(rec: HilbertRecord) -> int:
    if not rec.h_coeffs:
        raise ValueError("record has no fitted h-numerator")
    a = rec.a_invariant
    if a >= 0:
        raise ValueError(f"a-invariant {a} is not negative; data inconsistent")
    return rec.regularity_bound


# ---------------------------------------------------------------------------
# bundled series data
# ---------------------------------------------------------------------------

def load_series_data() -> dict:
    with resources.files("kimura4.data").joinpath("hilbert_series.json").open() as fh:
        return json.load(fh)


def bundled_series(name: str) -> tuple[list[int], int, int]:
    """(numerator ascending, denominator exponent, dim) for a bundled series."""
    data = load_series_data()["series"]
    if name not in data:
        raise KeyError(f"unknown series {name!r}; have {sorted(data)}")
    s = data[name]
    return list(s["numerator"]), int(s["denom_exp"]), int(s["dim"])


def bundled_hilbert_polynomial() -> list[Fraction]:
    """The n=6 Hilbert polynomial, ascending monomial coefficients."""
    data = load_series_data()["n6_full_hilbert_polynomial"]
    den = data["denominator"]
    desc = [Fraction(num, den) for num in data["numerators_desc"]]
    return [Fraction(data["constant_term"])] + list(reversed(desc))
