"""Moment keys and symbolic moment/localizing matrices.

A pseudo-moment sequence assigns a scalar y_{beta,gamma} to each exponent pair
with Hermitian symmetry y_{beta,gamma} = conj(y_{gamma,beta}).  We store one
scalar per unordered pair {(beta,gamma), (gamma,beta)} under a canonical
representative, plus an orientation telling whether a concrete (beta,gamma)
reads the stored value or its conjugate.

Symbolic matrices hold sparse linear forms in these keys; `instantiate` turns
them into numeric matrices once values for y are known.  `moments_of_measure`
produces the exact moments of a finitely-atomic measure and is the test oracle
for everything downstream.

Real-variable (non-complex) moment problems reuse the same machinery with
keys of the shape (0, alpha) standing for the single real moment y_alpha.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .basis import MonomialBasis
from .polynomials import CPoly, RPoly

__all__ = [
    "MomentKey",
    "canonical_key",
    "rpop_key",
    "key_sort_index",
    "Term",
    "SymbolicMatrix",
    "moment_matrix_symbolic",
    "localizing_matrix_symbolic",
    "rpop_moment_matrix_symbolic",
    "rpop_localizing_matrix_symbolic",
    "instantiate",
    "moments_of_measure",
    "AtomicMeasure",
]


class MomentKey(NamedTuple):
    """Canonical representative of the unordered pair {(beta,gamma),(gamma,beta)}."""

    beta: tuple[int, ...]
    gamma: tuple[int, ...]

    @property
    def total_degree(self) -> int:
        return sum(self.beta) + sum(self.gamma)

    def is_diagonal(self) -> bool:
        return self.beta == self.gamma


def canonical_key(beta: tuple[int, ...], gamma: tuple[int, ...]) -> tuple[MomentKey, int]:
    """Canonical key and orientation: +1 reads the stored value, -1 its conjugate."""
    if beta <= gamma:
        return MomentKey(beta, gamma), 1
    return MomentKey(gamma, beta), -1


def rpop_key(alpha: tuple[int, ...]) -> MomentKey:
    """Key for the real moment y_alpha of a real-variable moment problem."""
    key, _ = canonical_key(alpha, (0,) * len(alpha))
    return key


def key_sort_index(key: MomentKey) -> tuple:
    """Graded-lexicographic sort key (total degree, beta, gamma)."""
    return (key.total_degree, key.beta, key.gamma)


class Term(NamedTuple):
    """One term of a sparse linear form: coeff * y[key] (conjugated if orient=-1)."""

    key: MomentKey
    orient: int
    coeff: complex


@dataclass(frozen=True)
class SymbolicMatrix:
    """Upper-triangular symbolic matrix with sparse linear-form entries.

    Entry (i, j) with i <= j holds a tuple of :class:`Term`; the value at
    (j, i) is the conjugate of the value at (i, j).  ``const`` is an additive
    scalar shared by diagonal entries (zero for all moment-type matrices).
    """

    side: int
    basis: tuple[tuple[int, ...], ...]
    entries: Mapping[tuple[int, int], tuple[Term, ...]]
    const: float = 0.0

    def keys_used(self) -> set[MomentKey]:
        out: set[MomentKey] = set()
        for form in self.entries.values():
            for t in form:
                out.add(t.key)
        return out

    def entry(self, i: int, j: int) -> tuple[tuple[Term, ...], bool]:
        """Linear form at (i, j) and whether it must be conjugated."""
        if i <= j:
            return self.entries.get((i, j), ()), False
        return self.entries.get((j, i), ()), True


def _merge_terms(parts: list[tuple[MomentKey, int, complex]]) -> tuple[Term, ...]:
    acc: dict[tuple[MomentKey, int], complex] = {}
    for key, orient, coeff in parts:
        if key.is_diagonal():
            orient = 1  # value is real for consistent sequences; orientation moot
        slot = (key, orient)
        acc[slot] = acc.get(slot, 0.0) + coeff
    return tuple(Term(k, o, c) for (k, o), c in acc.items() if c != 0)


def moment_matrix_symbolic(basis: MonomialBasis) -> SymbolicMatrix:
    """Moment matrix: entry (beta-row, gamma-col) is the single variable y_{beta,gamma}."""
    exps = basis.exponents
    entries: dict[tuple[int, int], tuple[Term, ...]] = {}
    for i, bi in enumerate(exps):
        for j in range(i, len(exps)):
            key, orient = canonical_key(bi, exps[j])
            entries[(i, j)] = (Term(key, 1 if key.is_diagonal() else orient, 1.0),)
    return SymbolicMatrix(len(exps), exps, entries)


def localizing_matrix_symbolic(g: CPoly, basis: MonomialBasis) -> SymbolicMatrix:
    """Localizing matrix of g: entry (beta,gamma) = sum_d g_d * y_{beta+bd, gamma+gd}."""
    exps = basis.exponents
    gterms = [(p.beta, p.gamma, c) for p, c in g.terms.items()]
    entries: dict[tuple[int, int], tuple[Term, ...]] = {}
    for i, bi in enumerate(exps):
        for j in range(i, len(exps)):
            gj = exps[j]
            parts = []
            for gb, gg, c in gterms:
                beta = tuple(a + b for a, b in zip(bi, gb))
                gamma = tuple(a + b for a, b in zip(gj, gg))
                key, orient = canonical_key(beta, gamma)
                parts.append((key, orient, c))
            entries[(i, j)] = _merge_terms(parts)
    return SymbolicMatrix(len(exps), exps, entries)


def rpop_moment_matrix_symbolic(basis: MonomialBasis) -> SymbolicMatrix:
    """Real moment matrix: entry (alpha, alpha') is y_{alpha+alpha'}."""
    exps = basis.exponents
    entries: dict[tuple[int, int], tuple[Term, ...]] = {}
    for i, ai in enumerate(exps):
        for j in range(i, len(exps)):
            s = tuple(a + b for a, b in zip(ai, exps[j]))
            entries[(i, j)] = (Term(rpop_key(s), 1, 1.0),)
    return SymbolicMatrix(len(exps), exps, entries)


def rpop_localizing_matrix_symbolic(g: RPoly, basis: MonomialBasis) -> SymbolicMatrix:
    """Real localizing matrix: entry (alpha, alpha') = sum_d g_d * y_{alpha+alpha'+d}."""
    exps = basis.exponents
    gterms = list(g.terms.items())
    entries: dict[tuple[int, int], tuple[Term, ...]] = {}
    for i, ai in enumerate(exps):
        for j in range(i, len(exps)):
            aj = exps[j]
            parts = []
            for d, c in gterms:
                s = tuple(a + b + e for a, b, e in zip(ai, aj, d))
                parts.append((rpop_key(s), 1, complex(c)))
            entries[(i, j)] = _merge_terms(parts)
    return SymbolicMatrix(len(exps), exps, entries)


def _read(y: Mapping[MomentKey, complex], key: MomentKey, orient: int) -> complex:
    try:
        v = complex(y[key])
    except KeyError:
        raise KeyError(f"moment value missing for key {key}") from None
    return v if orient == 1 else v.conjugate()


def instantiate(sym: SymbolicMatrix, y: Mapping[MomentKey, complex]) -> np.ndarray:
    """Numeric matrix from a symbolic one and moment values.

    Returns a real symmetric array when every resolved entry is real (within
    1e-12 of the overall scale), otherwise a complex Hermitian array.
    """
    s = sym.side
    out = np.zeros((s, s), dtype=complex)
    for (i, j), form in sym.entries.items():
        v = sym.const if i == j else 0.0
        for t in form:
            v += t.coeff * _read(y, t.key, t.orient)
        out[i, j] = v
        if i != j:
            out[j, i] = np.conj(v)
    scale = max(1.0, float(np.abs(out).max()) if s else 1.0)
    if float(np.abs(out.imag).max()) <= 1e-12 * scale:
        m = out.real.copy()
        return 0.5 * (m + m.T)
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely-atomic measure: positive weights on points of C^n."""

    atoms: tuple[tuple[float, tuple[complex, ...]], ...]

    def __post_init__(self) -> None:
        atoms = tuple(
            (float(w), tuple(complex(v) for v in z)) for w, z in self.atoms
        )
        if not atoms:
            raise ValueError("measure needs at least one atom")
        if any(w <= 0 for w, _ in atoms):
            raise ValueError("weights must be positive")
        n = len(atoms[0][1])
        if any(len(z) != n for _, z in atoms):
            raise ValueError("atoms must share one dimension")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n(self) -> int:
        return len(self.atoms[0][1])

    def total_mass(self) -> float:
        return sum(w for w, _ in self.atoms)

    def is_conjugate_closed(self, tol: float = 1e-9) -> bool:
        pts = [(w, z) for w, z in self.atoms]
        for w, z in pts:
            zc = tuple(v.conjugate() for v in z)
            match = min(
                (abs(w - w2) + sum(abs(a - b) for a, b in zip(zc, z2)) for w2, z2 in pts),
                default=float("inf"),
            )
            if match > tol:
                return False
        return True


def moments_of_measure(measure: AtomicMeasure, r: int) -> dict[MomentKey, complex]:
    """Exact moments y_{beta,gamma} = sum_k w_k z_k^beta conj(z_k)^gamma, |beta|,|gamma| <= r."""
    basis = MonomialBasis.create(measure.n, r)
    exps = basis.exponents
    vand = np.empty((len(measure.atoms), len(exps)), dtype=complex)
    weights = np.empty(len(measure.atoms))
    for k, (w, z) in enumerate(measure.atoms):
        weights[k] = w
        zv = np.asarray(z, dtype=complex)
        for c, alpha in enumerate(exps):
            val = 1.0 + 0.0j
            for t, e in zip(zv, alpha):
                if e:
                    val *= t**e
            vand[k, c] = val
    gram = (vand.conj().T * weights) @ vand  # gram[g_idx, b_idx] = sum w conj(z^g) z^b
    out: dict[MomentKey, complex] = {}
    for i, bi in enumerate(exps):
        for j in range(i, len(exps)):
            key, orient = canonical_key(bi, exps[j])
            v = gram[j, i]  # y_{bi, bj}
            out[key] = v if orient == 1 else v.conjugate()
    return out
