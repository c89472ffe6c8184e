"""Compile polynomial problems into linear matrix inequality (LMI) programs.

Three builders share one output shape:

* ``build_real_relaxation``  — moment hierarchy with one real scalar per
  unordered conjugate pair of exponents (requires real coefficients);
* ``build_complex_relaxation`` — Hermitian moment hierarchy; each Hermitian
  block is later embedded as a doubled real symmetric block;
* ``build_rpop_relaxation`` — classical real moment hierarchy on the
  real-variable image (2n real variables).

The program is symbolic: PSD blocks and equality rows are sparse linear forms
in moment keys.  Numeric compilation, exact eliminations, and symmetry
splitting happen in the solver front end, so the program here always exposes
the nominal block sizes of the hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable

from .basis import MonomialBasis, basis_size
from .moments import (
    MomentKey,
    SymbolicMatrix,
    Term,
    _merge_terms,
    canonical_key,
    key_sort_index,
    localizing_matrix_symbolic,
    moment_matrix_symbolic,
    rpop_key,
    rpop_localizing_matrix_symbolic,
    rpop_moment_matrix_symbolic,
)
from .polynomials import (
    CPOPInstance,
    CPoly,
    RPoly,
    degree_stats,
    phase_invariance_lattice,
    to_real_pop,
)

__all__ = [
    "LMIProgram",
    "ComplexityStats",
    "OrderTooSmallError",
    "HierarchyMismatchError",
    "build_real_relaxation",
    "build_complex_relaxation",
    "build_rpop_relaxation",
    "complexity_stats",
]


class OrderTooSmallError(ValueError):
    """Relaxation order below the minimum admissible for the instance."""


class HierarchyMismatchError(ValueError):
    """Instance data incompatible with the requested hierarchy."""


@dataclass(frozen=True)
class LMIProgram:
    """Feasibility region {y : blocks PSD, rows satisfied}; minimize the objective form.

    ``objective``/``eq_rows`` are linear forms in moment keys; ``negated``
    records that the source problem was a maximization and reported bounds
    must flip sign.  ``key_index`` registers every referenced key in
    graded-lexicographic order (for the complex hierarchy a key stands for one
    complex scalar, realified downstream).
    """

    hierarchy: str  # "real" | "complex" | "rpop"
    r: int
    ambient_dim: int  # n complex variables, or 2n real variables for "rpop"
    objective: tuple[Term, ...]
    obj_const: float
    negated: bool
    psd_blocks: tuple[SymbolicMatrix, ...]
    block_names: tuple[str, ...]
    eq_rows: tuple[tuple[tuple[Term, ...], complex], ...]
    key_index: dict[MomentKey, int]
    instance: object = None
    phase_lattice: tuple[tuple[int, ...], ...] = ()
    name: str = ""

    def block_sizes(self) -> tuple[int, ...]:
        if self.hierarchy == "complex":
            return tuple(2 * b.side for b in self.psd_blocks)
        return tuple(b.side for b in self.psd_blocks)

    def moment_block(self) -> SymbolicMatrix:
        return self.psd_blocks[0]

    def scalar_variable_count(self) -> int:
        """Real scalar unknowns of the hierarchy (before any elimination)."""
        if self.hierarchy == "complex":
            return sum(1 if k.is_diagonal() else 2 for k in self.key_index)
        return len(self.key_index)

    def eval_objective(self, y) -> float:
        total = complex(self.obj_const)
        for t in self.objective:
            v = complex(y[t.key])
            total += t.coeff * (v if t.orient == 1 else v.conjugate())
        return float(total.real)


def _linear_form_of_poly(f: CPoly) -> tuple[tuple[Term, ...], float]:
    """L_y(f) as a merged linear form over canonical keys plus a constant."""
    acc: dict[tuple[MomentKey, int], complex] = {}
    const = 0.0
    zero = (0,) * f.n
    for pair, c in f.terms.items():
        if pair.beta == zero and pair.gamma == zero:
            const += c.real
            continue
        key, orient = canonical_key(pair.beta, pair.gamma)
        if key.is_diagonal():
            orient = 1
        slot = (key, orient)
        acc[slot] = acc.get(slot, 0.0) + c
    terms = tuple(Term(k, o, v) for (k, o), v in acc.items() if v != 0)
    return terms, const


def _rpop_linear_form(f: RPoly) -> tuple[tuple[Term, ...], float]:
    acc: dict[MomentKey, float] = {}
    const = 0.0
    zero = (0,) * f.m
    for alpha, c in f.terms.items():
        if alpha == zero:
            const += c
            continue
        k = rpop_key(alpha)
        acc[k] = acc.get(k, 0.0) + c
    return tuple(Term(k, 1, v) for k, v in acc.items() if v != 0), const


def _rows_from_zero_matrix(sym: SymbolicMatrix) -> Iterable[tuple[tuple[Term, ...], complex]]:
    for (i, j) in sorted(sym.entries):
        form = sym.entries[(i, j)]
        if form:
            yield form, 0.0


def _per_side_degrees(p: CPoly) -> tuple[int, int]:
    """Largest holomorphic and antiholomorphic degrees over the terms of p."""
    db = max((sum(pair.beta) for pair in p.terms), default=0)
    dg = max((sum(pair.gamma) for pair in p.terms), default=0)
    return db, dg


def _equality_generators(
    eqs: tuple[CPoly, ...],
) -> list[tuple[CPoly, bool, tuple[int, ...]]]:
    """Equality generators with minimal per-side degrees.

    A pair of self-conjugate equalities that arose by splitting one complex
    equality h into (h + conj h)/2 and (h - conj h)/(2i) recombines, up to a
    constant, into h = h_re + i*h_im.  When h is one-sided (e.g. holomorphic,
    like a product constraint), multiplying h by monomials of the opposite
    side keeps every referenced moment inside the order-r index set, which
    yields far more valid rows than localizing the split halves separately.
    Returns (generator, is_self_conjugate, parent indices) triples spanning
    the same set of equality constraints.
    """
    out: list[tuple[CPoly, bool, tuple[int, ...]]] = []
    used = [False] * len(eqs)
    for i, hi in enumerate(eqs):
        if used[i]:
            continue
        best: tuple[int, int, CPoly] | None = None
        di = max(_per_side_degrees(hi))
        for j in range(i + 1, len(eqs)):
            if used[j]:
                continue
            hj = eqs[j]
            dj = max(_per_side_degrees(hj))
            q = hi + 1j * hj
            db, dg = _per_side_degrees(q)
            if max(db, dg) > max(di, dj) or min(db, dg) >= min(di, dj):
                continue
            if best is None or min(db, dg) < best[0]:
                best = (min(db, dg), j, q)
        if best is not None:
            used[i] = used[best[1]] = True
            out.append((best[2], False, (i, best[1])))
        else:
            used[i] = True
            out.append((hi, True, (i,)))
    return out


def _equality_rows(inst: CPOPInstance, r: int) -> list[tuple[tuple[Term, ...], complex]]:
    """All rows L_y(q * z^a conj(z)^b) = 0 with every referenced key of order <= r.

    For a self-conjugate generator the admissible multipliers form the square
    grid |a|, |b| <= r - deg q, i.e. exactly the entries of the localizing
    matrix M_{r-deg}(q y); rows are emitted from its upper triangle (lower
    entries are conjugates).  A one-sided generator admits the rectangular
    grid |a| <= r - deg_holo(q), |b| <= r - deg_anti(q) instead.
    """
    n = inst.n
    rows: list[tuple[tuple[Term, ...], complex]] = []
    for q, self_conj, _parents in _equality_generators(inst.eqs):
        db, dg = _per_side_degrees(q)
        if self_conj:
            order = r - max(db, dg)
            sym = localizing_matrix_symbolic(q, MonomialBasis.create(n, order))
            rows.extend(_rows_from_zero_matrix(sym))
            continue
        abasis = MonomialBasis.create(n, r - db).exponents
        bbasis = MonomialBasis.create(n, r - dg).exponents
        qterms = [(p.beta, p.gamma, c) for p, c in q.terms.items()]
        for a in abasis:
            for b in bbasis:
                parts = []
                for qb, qg, c in qterms:
                    beta = tuple(x + y for x, y in zip(a, qb))
                    gamma = tuple(x + y for x, y in zip(b, qg))
                    key, orient = canonical_key(beta, gamma)
                    parts.append((key, orient, c))
                form = _merge_terms(parts)
                if form:
                    rows.append((form, 0.0))
    return rows


def _dedup_rows(
    rows: Iterable[tuple[tuple[Term, ...], complex]]
) -> tuple[tuple[tuple[Term, ...], complex], ...]:
    seen: set = set()
    out = []
    for form, rhs in rows:
        ordered = tuple(sorted(form, key=lambda t: (key_sort_index(t.key), t.orient)))
        sig = (ordered, complex(rhs))
        if sig in seen:
            continue
        seen.add(sig)
        out.append((ordered, rhs))
    return tuple(out)


def _collect_key_index(
    blocks: Iterable[SymbolicMatrix],
    rows: Iterable[tuple[tuple[Term, ...], complex]],
    objective: tuple[Term, ...],
) -> dict[MomentKey, int]:
    keys: set[MomentKey] = set()
    for b in blocks:
        keys |= b.keys_used()
    for form, _ in rows:
        keys.update(t.key for t in form)
    keys.update(t.key for t in objective)
    return {k: i for i, k in enumerate(sorted(keys, key=key_sort_index))}


def _unit_row(n: int, rpop: bool = False) -> tuple[tuple[Term, ...], complex]:
    zero = (0,) * n
    key = rpop_key(zero) if rpop else canonical_key(zero, zero)[0]
    return (Term(key, 1, 1.0),), 1.0


def build_real_relaxation(inst: CPOPInstance, r: int) -> LMIProgram:
    """Moment relaxation with one real scalar per unordered exponent pair.

    The objective and the inequality constraints must have real coefficients
    (their moment/localizing blocks stay real symmetric).  Equalities may
    carry complex coefficients: each scalar equality row is split into its
    real and imaginary parts, both linear over the real variables.
    """
    bad = [label for label, p in inst._labeled_polys()[: 1 + len(inst.ineqs)]
           if not p.has_real_coeffs()]
    if bad:
        raise HierarchyMismatchError(
            f"real hierarchy requires real coefficients in the objective and "
            f"inequalities ({bad[0]} has complex coefficients); "
            f"use the complex hierarchy"
        )
    ds = degree_stats(inst)
    if r < ds.d_min:
        raise OrderTooSmallError(f"order {r} below minimum {ds.d_min}")
    return _build_conjugate_pair_program(inst, r, hierarchy="real")


def build_complex_relaxation(inst: CPOPInstance, r: int) -> LMIProgram:
    """Hermitian moment relaxation (complex scalars; embedded when solved)."""
    ds = degree_stats(inst)
    if r < ds.d_min:
        raise OrderTooSmallError(f"order {r} below minimum {ds.d_min}")
    return _build_conjugate_pair_program(inst, r, hierarchy="complex")


def _build_conjugate_pair_program(inst: CPOPInstance, r: int, hierarchy: str) -> LMIProgram:
    n = inst.n
    ds = degree_stats(inst)
    obj = inst.objective if inst.sense == "min" else -inst.objective
    objective, obj_const = _linear_form_of_poly(obj)

    blocks = [moment_matrix_symbolic(MonomialBasis.create(n, r))]
    names = ["moment"]
    for i, g in enumerate(inst.ineqs):
        order = r - g.degree
        blocks.append(localizing_matrix_symbolic(g, MonomialBasis.create(n, order)))
        names.append(f"ineq{i}")

    rows: list[tuple[tuple[Term, ...], complex]] = [_unit_row(n)]
    rows.extend(_equality_rows(inst, r))
    eq_rows = _dedup_rows(rows)

    key_index = _collect_key_index(blocks, eq_rows, objective)
    return LMIProgram(
        hierarchy=hierarchy,
        r=r,
        ambient_dim=n,
        objective=objective,
        obj_const=obj_const,
        negated=inst.sense == "max",
        psd_blocks=tuple(blocks),
        block_names=tuple(names),
        eq_rows=eq_rows,
        key_index=key_index,
        instance=inst,
        phase_lattice=tuple(phase_invariance_lattice(inst)),
        name=inst.name,
    )


def build_rpop_relaxation(inst: CPOPInstance, r: int) -> LMIProgram:
    """Classical moment relaxation of the real-variable image (2n variables).

    Self-conjugate polynomials take real values, so their images under
    z_j = x_j + i x_{n+j} always have real coefficients; no extra gate needed.
    """
    rinst = to_real_pop(inst)
    m = rinst.m
    half = lambda d: (d + 1) // 2
    d_min = max(
        [half(rinst.objective.degree)]
        + [half(g.degree) for g in rinst.ineqs]
        + [half(h.degree) for h in rinst.eqs]
        + [1]
    )
    if r < d_min:
        raise OrderTooSmallError(f"order {r} below minimum {d_min}")

    obj = rinst.objective
    if rinst.sense == "max":
        obj = RPoly(m, {e: -c for e, c in obj.terms.items()})
    objective, obj_const = _rpop_linear_form(obj)

    blocks = [rpop_moment_matrix_symbolic(MonomialBasis.create(m, r))]
    names = ["moment"]
    for i, g in enumerate(rinst.ineqs):
        order = r - half(g.degree)
        blocks.append(rpop_localizing_matrix_symbolic(g, MonomialBasis.create(m, order)))
        names.append(f"ineq{i}")

    rows: list[tuple[tuple[Term, ...], complex]] = [_unit_row(m, rpop=True)]
    for h in rinst.eqs:
        order = r - half(h.degree)
        sym = rpop_localizing_matrix_symbolic(h, MonomialBasis.create(m, order))
        rows.extend(_rows_from_zero_matrix(sym))
    eq_rows = _dedup_rows(rows)

    key_index = _collect_key_index(blocks, eq_rows, objective)
    return LMIProgram(
        hierarchy="rpop",
        r=r,
        ambient_dim=m,
        objective=objective,
        obj_const=obj_const,
        negated=rinst.sense == "max",
        psd_blocks=tuple(blocks),
        block_names=tuple(names),
        eq_rows=eq_rows,
        key_index=key_index,
        instance=inst,
        phase_lattice=(),
        name=inst.name,
    )


@dataclass(frozen=True)
class ComplexityStats:
    """Per-hierarchy maximal PSD block side and scalar variable count."""

    n: int
    r: int
    real_hsos: tuple[int, int]
    complex_hsos: tuple[int, int]
    real_sos: tuple[int, int]


def complexity_stats(n: int, r: int) -> ComplexityStats:
    """Closed-form size profile of the three hierarchies at (n, r)."""
    s = basis_size(n, r)
    return ComplexityStats(
        n=n,
        r=r,
        real_hsos=(s, (s + 1) * s // 2),
        complex_hsos=(2 * s, s * s),
        real_sos=(comb(2 * n + r, r), comb(2 * n + 2 * r, 2 * r)),
    )
