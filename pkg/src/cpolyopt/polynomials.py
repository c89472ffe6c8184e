"""Polynomials in complex variables and their conjugates.

A polynomial in n complex variables is stored as a sparse map from exponent
pairs (beta, gamma) to complex coefficients, representing

    p(z, zbar) = sum_{beta,gamma} p_{beta,gamma} * z^beta * zbar^gamma .

The conjugate of p swaps the exponent slots and conjugates coefficients; a
polynomial equal to its own conjugate is *self-conjugate* and takes only real
values.  Self-conjugate polynomials with real coefficients are the objects the
real moment hierarchy operates on.

All values here are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ExponentPair",
    "CPoly",
    "RPoly",
    "CPOPInstance",
    "RPOPInstance",
    "DegreeStats",
    "conjugate",
    "is_self_conjugate",
    "evaluate",
    "degree_stats",
    "to_real_pop",
    "phase_invariance_lattice",
]

# Coefficients smaller than this fraction of the largest magnitude are pruned
# when a polynomial is put into canonical form (text round-trips reintroduce
# noise at roughly 1e-17 relative).
PRUNE_REL_TOL = 1e-14


@dataclass(frozen=True, order=True)
class ExponentPair:
    """Exponents (beta, gamma) of a monomial z^beta * zbar^gamma."""

    beta: tuple[int, ...]
    gamma: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.beta) != len(self.gamma):
            raise ValueError(
                f"beta and gamma must have equal length, got {len(self.beta)} != {len(self.gamma)}"
            )
        if len(self.beta) < 1:
            raise ValueError("exponent vectors must have length >= 1")
        if any(e < 0 for e in self.beta) or any(e < 0 for e in self.gamma):
            raise ValueError("exponents must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.beta)

    @property
    def half_degrees(self) -> tuple[int, int]:
        """(|beta|, |gamma|)."""
        return sum(self.beta), sum(self.gamma)

    @property
    def degree(self) -> int:
        """max(|beta|, |gamma|) — the half-degree bound used for orders."""
        return max(sum(self.beta), sum(self.gamma))

    def swapped(self) -> "ExponentPair":
        """The exponent pair of the conjugate monomial."""
        return ExponentPair(self.gamma, self.beta)

    def is_diagonal(self) -> bool:
        return self.beta == self.gamma

    def difference(self) -> tuple[int, ...]:
        """beta - gamma, the exponent of the monomial on the unit torus."""
        return tuple(b - g for b, g in zip(self.beta, self.gamma))


def _term_sort_key(pair: ExponentPair) -> tuple:
    return (sum(pair.beta) + sum(pair.gamma), pair.beta, pair.gamma)


def _canonicalize(
    n: int, raw: Mapping[ExponentPair, complex] | Iterable[tuple[ExponentPair, complex]]
) -> dict[ExponentPair, complex]:
    items = raw.items() if isinstance(raw, Mapping) else raw
    acc: dict[ExponentPair, complex] = {}
    for pair, coeff in items:
        if pair.n != n:
            raise ValueError(f"term arity {pair.n} does not match polynomial arity {n}")
        c = complex(coeff)
        if c == 0:
            continue
        acc[pair] = acc.get(pair, 0.0) + c
    if not acc:
        return {}
    scale = max(abs(c) for c in acc.values())
    pruned = {p: c for p, c in acc.items() if abs(c) >= PRUNE_REL_TOL * scale and c != 0}
    return {p: pruned[p] for p in sorted(pruned, key=_term_sort_key)}


@dataclass(frozen=True)
class CPoly:
    """Sparse polynomial in z and zbar with complex coefficients.

    ``terms`` maps :class:`ExponentPair` to a complex coefficient; the stored
    form is canonical (duplicates merged, relatively negligible coefficients
    pruned, graded-lexicographic term order).
    """

    n: int
    terms: Mapping[ExponentPair, complex]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("polynomial needs at least one variable")
        canon = _canonicalize(self.n, self.terms)
        object.__setattr__(self, "terms", MappingProxyType(canon))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(n: int) -> "CPoly":
        return CPoly(n, {})

    @staticmethod
    def constant(n: int, value: complex) -> "CPoly":
        zero = (0,) * n
        return CPoly(n, {ExponentPair(zero, zero): value})

    @staticmethod
    def variable(n: int, i: int) -> "CPoly":
        """z_i (0-based index)."""
        beta = tuple(1 if j == i else 0 for j in range(n))
        return CPoly(n, {ExponentPair(beta, (0,) * n): 1.0})

    @staticmethod
    def conj_variable(n: int, i: int) -> "CPoly":
        """zbar_i (0-based index)."""
        gamma = tuple(1 if j == i else 0 for j in range(n))
        return CPoly(n, {ExponentPair((0,) * n, gamma): 1.0})

    @staticmethod
    def modulus_squared(n: int, i: int) -> "CPoly":
        """|z_i|^2."""
        e = tuple(1 if j == i else 0 for j in range(n))
        return CPoly(n, {ExponentPair(e, e): 1.0})

    @staticmethod
    def from_terms(n: int, terms: Mapping[tuple[tuple[int, ...], tuple[int, ...]], complex]) -> "CPoly":
        return CPoly(n, {ExponentPair(b, g): c for (b, g), c in terms.items()})

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "CPoly | complex | float | int") -> "CPoly":
        if isinstance(other, (int, float, complex)):
            other = CPoly.constant(self.n, other)
        if self.n != other.n:
            raise ValueError("mixed-arity polynomial arithmetic")
        merged = dict(self.terms)
        for pair, c in other.terms.items():
            merged[pair] = merged.get(pair, 0.0) + c
        return CPoly(self.n, merged)

    __radd__ = __add__

    def __neg__(self) -> "CPoly":
        return CPoly(self.n, {p: -c for p, c in self.terms.items()})

    def __sub__(self, other: "CPoly | complex | float | int") -> "CPoly":
        return self + (-other if isinstance(other, CPoly) else -complex(other))

    def __rsub__(self, other: complex) -> "CPoly":
        return (-self) + other

    def __mul__(self, other: "CPoly | complex | float | int") -> "CPoly":
        if isinstance(other, (int, float, complex)):
            return CPoly(self.n, {p: c * other for p, c in self.terms.items()})
        if self.n != other.n:
            raise ValueError("mixed-arity polynomial arithmetic")
        acc: dict[ExponentPair, complex] = {}
        for p1, c1 in self.terms.items():
            for p2, c2 in other.terms.items():
                beta = tuple(a + b for a, b in zip(p1.beta, p2.beta))
                gamma = tuple(a + b for a, b in zip(p1.gamma, p2.gamma))
                key = ExponentPair(beta, gamma)
                acc[key] = acc.get(key, 0.0) + c1 * c2
        return CPoly(self.n, acc)

    __rmul__ = __mul__

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        """d^p = max over terms of max(|beta|, |gamma|); 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(p.degree for p in self.terms)

    def coefficient(self, pair: ExponentPair) -> complex:
        return self.terms.get(pair, 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def has_real_coeffs(self, tol: float = 0.0) -> bool:
        scale = self.max_abs_coeff() or 1.0
        return all(abs(c.imag) <= tol * scale for c in self.terms.values())

    def real_part_coeffs(self) -> "CPoly":
        """Polynomial with each coefficient replaced by its real part."""
        return CPoly(self.n, {p: complex(c.real, 0.0) for p, c in self.terms.items()})

    def term_differences(self) -> set[tuple[int, ...]]:
        """{beta - gamma} over stored terms (torus exponents of the support)."""
        return {p.difference() for p in self.terms}


def conjugate(p: CPoly) -> CPoly:
    """The conjugate polynomial: coefficients conjugated, exponent slots swapped."""
    return CPoly(p.n, {pair.swapped(): c.conjugate() for pair, c in p.terms.items()})


def is_self_conjugate(p: CPoly) -> bool:
    """True iff conjugate(p) equals p term-for-term on the canonical form."""
    for pair, c in p.terms.items():
        if p.terms.get(pair.swapped(), 0.0) != c.conjugate():
            return False
    return True


def evaluate(p: CPoly, point: Sequence[complex]) -> complex:
    """Evaluate p at a point in C^n."""
    if len(point) != p.n:
        raise ValueError(f"point has length {len(point)}, expected {p.n}")
    z = [complex(v) for v in point]
    zb = [v.conjugate() for v in z]
    total = 0.0 + 0.0j
    for pair, c in p.terms.items():
        val = c
        for j, e in enumerate(pair.beta):
            if e:
                val *= z[j] ** e
        for j, e in enumerate(pair.gamma):
            if e:
                val *= zb[j] ** e
        total += val
    return total


@dataclass(frozen=True)
class DegreeStats:
    """Degree profile of a constrained instance."""

    d_f: int
    d_g: tuple[int, ...]
    d_h: tuple[int, ...]
    d_K: int
    d_min: int


@dataclass(frozen=True)
class CPOPInstance:
    """A complex polynomial optimization problem over K = {g_i >= 0, h_i = 0}.

    ``sense`` is "min" or "max"; builders always minimize internally and
    un-negate reported values for "max" instances.
    """

    n: int
    objective: CPoly
    ineqs: tuple[CPoly, ...] = ()
    eqs: tuple[CPoly, ...] = ()
    sense: str = "min"
    name: str = ""
    conjectured_optimum: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ineqs", tuple(self.ineqs))
        object.__setattr__(self, "eqs", tuple(self.eqs))
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for label, poly in self._labeled_polys():
            if poly.n != self.n:
                raise ValueError(f"{label} has arity {poly.n}, instance has {self.n}")
            if not is_self_conjugate(poly):
                raise ValueError(f"{label} is not self-conjugate")

    def _labeled_polys(self) -> list[tuple[str, CPoly]]:
        out = [("objective", self.objective)]
        out += [(f"inequality {i}", g) for i, g in enumerate(self.ineqs)]
        out += [(f"equality {i}", h) for i, h in enumerate(self.eqs)]
        return out

    @property
    def self_conjugate(self) -> bool:
        return True  # enforced at construction

    @property
    def real_coefficients(self) -> bool:
        return all(p.has_real_coeffs() for _, p in self._labeled_polys())

    def all_polys(self) -> list[CPoly]:
        return [p for _, p in self._labeled_polys()]


def degree_stats(inst: CPOPInstance) -> DegreeStats:
    """Degrees d^f, d^g_i, d^h_i, d_K = max{2, d^g, d^h}, d_min = max{d^f, d^g, d^h}."""
    d_f = inst.objective.degree
    d_g = tuple(g.degree for g in inst.ineqs)
    d_h = tuple(h.degree for h in inst.eqs)
    d_K = max([2, *d_g, *d_h])
    d_min = max([d_f, *d_g, *d_h, 1])
    return DegreeStats(d_f=d_f, d_g=d_g, d_h=d_h, d_K=d_K, d_min=d_min)


# ---------------------------------------------------------------------------
# Real-variable image (z_j = x_j + i x_{n+j})
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RPoly:
    """Sparse real-coefficient polynomial in m real variables."""

    m: int
    terms: Mapping[tuple[int, ...], float]

    def __post_init__(self) -> None:
        acc: dict[tuple[int, ...], float] = {}
        for expo, coeff in dict(self.terms).items():
            if len(expo) != self.m:
                raise ValueError("exponent arity mismatch")
            c = float(coeff)
            if c != 0.0:
                acc[tuple(expo)] = acc.get(tuple(expo), 0.0) + c
        scale = max((abs(c) for c in acc.values()), default=0.0)
        canon = {
            e: c
            for e, c in acc.items()
            if c != 0.0 and abs(c) >= PRUNE_REL_TOL * scale
        }
        ordered = {e: canon[e] for e in sorted(canon, key=lambda t: (sum(t), t))}
        object.__setattr__(self, "terms", MappingProxyType(ordered))

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def evaluate(self, x: Sequence[float]) -> float:
        if len(x) != self.m:
            raise ValueError("point arity mismatch")
        total = 0.0
        for expo, c in self.terms.items():
            val = c
            for j, e in enumerate(expo):
                if e:
                    val *= x[j] ** e
            total += val
        return total

    def __add__(self, other: "RPoly | float | int") -> "RPoly":
        if isinstance(other, (int, float)):
            other = RPoly(self.m, {(0,) * self.m: float(other)})
        if self.m != other.m:
            raise ValueError("mixed-arity polynomial arithmetic")
        merged = dict(self.terms)
        for expo, c in other.terms.items():
            merged[expo] = merged.get(expo, 0.0) + c
        return RPoly(self.m, merged)

    def __neg__(self) -> "RPoly":
        return RPoly(self.m, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "RPoly | float | int") -> "RPoly":
        return self + (-other if isinstance(other, RPoly) else -float(other))

    def __mul__(self, other: "RPoly | float | int") -> "RPoly":
        if isinstance(other, (int, float)):
            return RPoly(self.m, {e: c * float(other) for e, c in self.terms.items()})
        if self.m != other.m:
            raise ValueError("mixed-arity polynomial arithmetic")
        acc: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, 0.0) + c1 * c2
        return RPoly(self.m, acc)

    __rmul__ = __mul__


@dataclass(frozen=True)
class RPOPInstance:
    """Real polynomial optimization problem produced by :func:`to_real_pop`."""

    m: int
    objective: RPoly
    ineqs: tuple[RPoly, ...] = ()
    eqs: tuple[RPoly, ...] = ()
    sense: str = "min"
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "ineqs", tuple(self.ineqs))
        object.__setattr__(self, "eqs", tuple(self.eqs))


def _real_image(p: CPoly, tol: float = 1e-12) -> RPoly:
    """Expand p(z, zbar) with z_j = x_j + i x_{n+j} into a real polynomial.

    Raises if any imaginary coefficient survives above ``tol`` relative to the
    largest coefficient (only self-conjugate inputs cancel exactly).
    """
    n = p.n
    m = 2 * n
    acc: dict[tuple[int, ...], complex] = {}

    def mono_expand(base: dict[tuple[int, ...], complex], var: int, power: int, conj: bool) -> dict:
        # multiply by (x_var + i x_{n+var})^power, conjugated if requested
        for _ in range(power):
            nxt: dict[tuple[int, ...], complex] = {}
            for expo, c in base.items():
                e1 = list(expo)
                e1[var] += 1
                k1 = tuple(e1)
                nxt[k1] = nxt.get(k1, 0.0) + c
                e2 = list(expo)
                e2[n + var] += 1
                k2 = tuple(e2)
                step = -1j if conj else 1j
                nxt[k2] = nxt.get(k2, 0.0) + c * step
            base = nxt
        return base

    for pair, coeff in p.terms.items():
        base: dict[tuple[int, ...], complex] = {(0,) * m: coeff}
        for j, e in enumerate(pair.beta):
            if e:
                base = mono_expand(base, j, e, conj=False)
        for j, e in enumerate(pair.gamma):
            if e:
                base = mono_expand(base, j, e, conj=True)
        for expo, c in base.items():
            acc[expo] = acc.get(expo, 0.0) + c

    scale = max((abs(c) for c in acc.values()), default=0.0) or 1.0
    bad = max((abs(c.imag) for c in acc.values()), default=0.0)
    if bad > tol * scale:
        raise ValueError(
            f"imaginary coefficients of size {bad:.3e} (relative {bad / scale:.3e}) "
            "survive the real-variable substitution; polynomial is not self-conjugate"
        )
    return RPoly(m, {e: c.real for e, c in acc.items()})


def to_real_pop(inst: CPOPInstance, tol: float = 1e-12) -> RPOPInstance:
    """Real-variable image of a CPOP under z_j = x_j + i x_{n+j}.

    The resulting POP over 2n variables has the same optimal value; feasible
    points map by z = x[:n] + i x[n:].
    """
    return RPOPInstance(
        m=2 * inst.n,
        objective=_real_image(inst.objective, tol),
        ineqs=tuple(_real_image(g, tol) for g in inst.ineqs),
        eqs=tuple(_real_image(h, tol) for h in inst.eqs),
        sense=inst.sense,
        name=inst.name,
    )


# ---------------------------------------------------------------------------
# Diagonal torus invariance of an instance
# ---------------------------------------------------------------------------


def _rational_nullspace(rows: list[tuple[int, ...]], n: int) -> list[tuple[int, ...]]:
    """Integer basis of {w in Q^n : row . w = 0 for all rows}, via exact elimination."""
    mat = [[Fraction(v) for v in row] for row in rows]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        sel = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if sel is None:
            continue
        mat[r], mat[sel] = mat[sel], mat[r]
        inv = mat[r][col]
        mat[r] = [v / inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(n) if c not in pivots]
    basis: list[tuple[int, ...]] = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            vec[pc] = -mat[ri][fc]
        denom = math.lcm(*(v.denominator for v in vec))
        ints = [int(v * denom) for v in vec]
        g = math.gcd(*(abs(x) for x in ints if x != 0))
        basis.append(tuple(x // g for x in ints))
    return basis


def phase_invariance_lattice(inst: CPOPInstance) -> list[tuple[int, ...]]:
    """Integer generators w of the diagonal torus symmetries of the instance.

    Each generator w gives an exact invariance z_k -> exp(i w_k t) z_k of every
    polynomial in the instance (w . (beta - gamma) = 0 for every stored term).
    An empty list means no continuous diagonal phase symmetry.
    """
    diffs: set[tuple[int, ...]] = set()
    for p in inst.all_polys():
        diffs |= p.term_differences()
    diffs.discard((0,) * inst.n)
    if not diffs:
        # every polynomial is a torus constant: full torus acts
        rows: list[tuple[int, ...]] = []
    else:
        rows = sorted(diffs)
    return _rational_nullspace(rows, inst.n)
