"""Exact reductions and numeric compilation of LMI programs.

The symbolic program is first realified (one real scalar per moment key for
the real hierarchies, real/imaginary pairs for the complex hierarchy, with
Hermitian blocks embedded as doubled symmetric blocks).  Equality rows are
then consumed by exact substitutions:

* rows with one unknown pin it;
* rows whose graded-lexicographically largest unknown is unique (and whose
  pivot coefficient is not tiny) eliminate that unknown in favour of strictly
  smaller ones — this resolves unit-norm aliases, sphere recurrences, and
  most hand-written equality structure without fill-in blowups;
* remaining rows become a dense equality system handled by the solver.

When the problem data is invariant under a diagonal torus action (phases
z_k -> exp(i w_k t) z_k), group averaging of any feasible moment sequence
zeroes every key with w . (beta - gamma) != 0, so those scalars are pinned to
zero up front; the bound is unchanged.  After substitution the PSD blocks are
split into connected components, which realizes the induced block structure.

Everything here is an exact transformation of the program: the solved values
map back to a full moment sequence through :class:`Recovery`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .moments import MomentKey, SymbolicMatrix, Term, key_sort_index
from .relaxation import LMIProgram

__all__ = ["CompiledBlock", "CompiledSDP", "Recovery", "compile_program"]

# a substituted variable is rejected as a pivot when its coefficient is small
# relative to the row, to keep back-substitution well conditioned
PIVOT_GUARD = 0.1
# per-row budget for on-the-fly chain expansion; rows exceeding it stay dense
EXPAND_BUDGET = 500_000
ROW_DROP_TOL = 1e-8
COEFF_TOL = 1e-14

SVar = tuple[MomentKey, int]  # (key, part): part 0 = real, 1 = imaginary


def _svar_order(sv: SVar) -> tuple:
    key, part = sv
    return (key_sort_index(key), part)


# ---------------------------------------------------------------------------
# Realification
# ---------------------------------------------------------------------------


def _realify_linear_form(
    terms: Sequence[Term], complex_vars: bool
) -> tuple[dict[SVar, float], dict[SVar, float]]:
    """Split sum_t c_t * y_t into real and imaginary real-linear forms."""
    re: dict[SVar, float] = {}
    im: dict[SVar, float] = {}

    def bump(d: dict[SVar, float], sv: SVar, v: float) -> None:
        if v != 0.0:
            d[sv] = d.get(sv, 0.0) + v

    for t in terms:
        c = complex(t.coeff)
        sv_re = (t.key, 0)
        if not complex_vars:
            bump(re, sv_re, c.real)
            bump(im, sv_re, c.imag)
            continue
        bump(re, sv_re, c.real)
        bump(im, sv_re, c.imag)
        if not t.key.is_diagonal():
            sv_im = (t.key, 1)
            bump(re, sv_im, -c.imag * t.orient)
            bump(im, sv_im, c.real * t.orient)
    return re, im


def _block_coo(
    sym: SymbolicMatrix, complex_vars: bool
) -> tuple[int, list[tuple[int, int, SVar, float]]]:
    """Realified COO of one PSD block; Hermitian blocks double to [[A,-B],[B,A]]."""
    s = sym.side
    coo: list[tuple[int, int, SVar, float]] = []
    if not complex_vars:
        for (i, j), form in sym.entries.items():
            re, im = _realify_linear_form(form, complex_vars=False)
            scale = max((abs(v) for v in re.values()), default=1.0)
            if any(abs(v) > 1e-10 * scale for v in im.values()):
                raise ValueError("complex entry in a real-hierarchy block")
            for sv, v in re.items():
                coo.append((i, j, sv, v))
        return s, coo
    for (i, j), form in sym.entries.items():
        re, im = _realify_linear_form(form, complex_vars=True)
        for sv, v in re.items():
            coo.append((i, j, sv, v))
            coo.append((s + i, s + j, sv, v))
        if i == j:
            scale = max((abs(v) for v in re.values()), default=1.0)
            if any(abs(v) > 1e-10 * scale for v in im.values()):
                raise ValueError("non-real diagonal entry in a Hermitian block")
            continue
        for sv, v in im.items():
            coo.append((i, s + j, sv, -v))
            coo.append((j, s + i, sv, v))
    return 2 * s, coo


# ---------------------------------------------------------------------------
# Substitution engine
# ---------------------------------------------------------------------------


class _Subst:
    """Exact substitutions svar -> affine form in strictly smaller svars."""

    def __init__(self) -> None:
        self.raw: dict[SVar, tuple[dict[SVar, float], float]] = {}
        self._resolved: dict[SVar, tuple[dict[int, float], float]] | None = None
        self.columns: dict[SVar, int] = {}

    def pin(self, sv: SVar, value: float) -> None:
        self.raw[sv] = ({}, value)

    def eliminate(self, sv: SVar, form: dict[SVar, float], const: float) -> None:
        self.raw[sv] = (form, const)

    def expand_row(
        self, form: Mapping[SVar, float], const: float
    ) -> tuple[dict[SVar, float], float] | None:
        """Resolve a row through current substitutions; None if over budget."""
        out: dict[SVar, float] = {}
        total = const
        budget = EXPAND_BUDGET
        stack = list(form.items())
        while stack:
            sv, c = stack.pop()
            budget -= 1
            if budget <= 0:
                return None
            hit = self.raw.get(sv)
            if hit is None:
                out[sv] = out.get(sv, 0.0) + c
            else:
                sub_form, sub_const = hit
                total += c * sub_const
                for sv2, c2 in sub_form.items():
                    stack.append((sv2, c * c2))
        scale = max((abs(v) for v in out.values()), default=0.0)
        return {sv: v for sv, v in out.items() if abs(v) > COEFF_TOL * scale}, total

    # -- final (frozen) resolution ------------------------------------------

    def freeze(self, survivors: Sequence[SVar]) -> None:
        self.columns = {sv: i for i, sv in enumerate(survivors)}
        self._resolved = {}

    def resolve(self, sv: SVar) -> tuple[dict[int, float], float]:
        """Fully-resolved affine form over survivor columns (memoized)."""
        col = self.columns.get(sv)
        if col is not None:
            return {col: 1.0}, 0.0
        assert self._resolved is not None, "freeze() must run first"
        memo = self._resolved
        hit = memo.get(sv)
        if hit is not None:
            return hit
        # substitutions always point to strictly smaller svars, so resolving
        # pending dependencies in ascending order is a topological sweep
        pending: set[SVar] = set()
        stack = [sv]
        while stack:
            s2 = stack.pop()
            if s2 in pending or s2 in memo or s2 in self.columns:
                continue
            pending.add(s2)
            stack.extend(self.raw[s2][0])
        for s2 in sorted(pending, key=_svar_order):
            form, const = self.raw[s2]
            out: dict[int, float] = {}
            total = const
            for s3, c in form.items():
                col3 = self.columns.get(s3)
                if col3 is not None:
                    out[col3] = out.get(col3, 0.0) + c
                    continue
                f3, c3 = memo[s3]
                total += c * c3
                for col4, v4 in f3.items():
                    out[col4] = out.get(col4, 0.0) + c * v4
            scale = max((abs(v) for v in out.values()), default=0.0)
            memo[s2] = (
                {k: v for k, v in out.items() if abs(v) > COEFF_TOL * scale},
                total,
            )
        return memo[sv]


# ---------------------------------------------------------------------------
# Compiled artifacts
# ---------------------------------------------------------------------------


@dataclass
class CompiledBlock:
    """One numeric PSD constraint C + sum_j u_j A_j >= 0 in COO form (upper triangle)."""

    side: int
    C: np.ndarray
    ii: np.ndarray
    jj: np.ndarray
    kk: np.ndarray  # survivor column per entry
    vv: np.ndarray
    name: str
    nominal_index: int
    pos_map: np.ndarray  # local position -> position in the nominal (embedded) block


@dataclass
class Recovery:
    """Maps solved survivor values back to the full moment sequence."""

    hierarchy: str
    svars: tuple[SVar, ...]
    subst: _Subst
    key_index: Mapping[MomentKey, int]

    def svar_value(self, sv: SVar, u: np.ndarray) -> float:
        form, const = self.subst.resolve(sv)
        return const + sum(u[c] * v for c, v in form.items())

    def y_map(self, u: np.ndarray) -> dict[MomentKey, complex]:
        out: dict[MomentKey, complex] = {}
        for key in self.key_index:
            re = self.svar_value((key, 0), u)
            if self.hierarchy == "complex" and not key.is_diagonal():
                out[key] = complex(re, self.svar_value((key, 1), u))
            else:
                out[key] = complex(re, 0.0)
        return out

    def u_from_moments(self, y: Mapping[MomentKey, complex]) -> np.ndarray:
        u = np.empty(len(self.subst.columns))
        for sv, col in self.subst.columns.items():
            key, part = sv
            v = complex(y[key])
            u[col] = v.real if part == 0 else v.imag
        return u


@dataclass
class CompiledSDP:
    """Numeric block SDP: min c.u + c0 s.t. C_b + sum u_j A_jb >= 0, E u = d."""

    c: np.ndarray
    c0: float
    blocks: list[CompiledBlock]
    E: np.ndarray
    d: np.ndarray
    recovery: Recovery
    nominal: LMIProgram
    u0: np.ndarray
    log: dict = field(default_factory=dict)
    infeasible_msg: str | None = None

    @property
    def m(self) -> int:
        return len(self.c)


# ---------------------------------------------------------------------------
# Compilation driver
# ---------------------------------------------------------------------------


def _phase_pins(prog: LMIProgram) -> set[MomentKey]:
    """Keys annihilated by averaging over the instance's diagonal torus action."""
    if not prog.phase_lattice or prog.hierarchy == "rpop":
        return set()
    lattice = [np.asarray(w) for w in prog.phase_lattice]
    pinned: set[MomentKey] = set()
    for key in prog.key_index:
        diff = np.asarray(key.beta) - np.asarray(key.gamma)
        if any(int(w @ diff) != 0 for w in lattice):
            pinned.add(key)
    return pinned


def compile_program(prog: LMIProgram, symmetry_reduction: bool = True) -> CompiledSDP:
    complex_vars = prog.hierarchy == "complex"
    log: dict = {"hierarchy": prog.hierarchy, "order": prog.r}
    infeasible: str | None = None

    # -- scalar variables ---------------------------------------------------
    all_svars: list[SVar] = []
    for key in sorted(prog.key_index, key=key_sort_index):
        all_svars.append((key, 0))
        if complex_vars and not key.is_diagonal():
            all_svars.append((key, 1))

    subst = _Subst()

    # -- torus pinning -------------------------------------------------------
    n_phase = 0
    if symmetry_reduction:
        for key in _phase_pins(prog):
            subst.pin((key, 0), 0.0)
            n_phase += 1
            if complex_vars and not key.is_diagonal():
                subst.pin((key, 1), 0.0)
                n_phase += 1
    log["symmetry_pins"] = n_phase
    log["phase_lattice"] = prog.phase_lattice if symmetry_reduction else ()

    # -- realify equality rows ------------------------------------------------
    real_rows: list[tuple[dict[SVar, float], float]] = []
    for form, rhs in prog.eq_rows:
        re, im = _realify_linear_form(form, complex_vars)
        rhs_c = complex(rhs)
        if re:
            real_rows.append((re, rhs_c.real))
        elif abs(rhs_c.real) > ROW_DROP_TOL:
            infeasible = "constant equality row with nonzero right side"
        # With real variables a row with complex coefficients still splits:
        # sum c*y = rhs over real y gives Re and Im parts as two real rows.
        if im:
            real_rows.append((im, rhs_c.imag))
        elif abs(rhs_c.imag) > ROW_DROP_TOL:
            infeasible = "constant equality row with nonzero right side"

    # -- structured elimination ------------------------------------------------
    counts = {"pins": 0, "eliminations": 0, "dropped": 0, "residual": 0}
    residual_rows: list[tuple[dict[SVar, float], float]] = []
    for form, rhs in real_rows:
        expanded = subst.expand_row(form, -rhs)  # form + const = 0 with const = -rhs
        if expanded is None:
            residual_rows.append((form, rhs))
            counts["residual"] += 1
            continue
        f, const = expanded
        scale = max((abs(v) for v in f.values()), default=0.0)
        if not f:
            if abs(const) > ROW_DROP_TOL:
                infeasible = f"inconsistent equality row (residual {const:.3e})"
            counts["dropped"] += 1
            continue
        pivot_sv = max(f, key=_svar_order)
        pivot_c = f[pivot_sv]
        if abs(pivot_c) < PIVOT_GUARD * scale:
            residual_rows.append((form, rhs))
            counts["residual"] += 1
            continue
        rest = {sv: -v / pivot_c for sv, v in f.items() if sv != pivot_sv}
        if rest:
            subst.eliminate(pivot_sv, rest, -const / pivot_c)
            counts["eliminations"] += 1
        else:
            subst.pin(pivot_sv, -const / pivot_c)
            counts["pins"] += 1
    log.update(counts)

    survivors = [sv for sv in all_svars if sv not in subst.raw]
    subst.freeze(survivors)
    m = len(survivors)
    log["scalars_before"] = len(all_svars)
    log["scalars_after"] = m

    # -- objective ----------------------------------------------------------
    obj_re, obj_im = _realify_linear_form(prog.objective, complex_vars)
    obj_scale = max((abs(v) for v in obj_re.values()), default=1.0)
    if any(abs(v) > 1e-9 * obj_scale for v in obj_im.values()):
        raise ValueError("objective does not take real values")
    c = np.zeros(m)
    c0 = prog.obj_const
    for sv, v in obj_re.items():
        formc, constc = subst.resolve(sv)
        c0 += v * constc
        for col, cv in formc.items():
            c[col] += v * cv

    # -- blocks: substitute, then split into connected components -------------
    blocks: list[CompiledBlock] = []
    comp_sizes: list[list[int]] = []
    for bidx, sym in enumerate(prog.psd_blocks):
        side, coo = _block_coo(sym, complex_vars)
        C = np.zeros((side, side))
        acc: dict[tuple[int, int, int], float] = {}
        for i, j, sv, v in coo:
            formc, constc = subst.resolve(sv)
            if constc != 0.0:
                C[i, j] += v * constc
            for col, cv in formc.items():
                slot = (i, j, col)
                acc[slot] = acc.get(slot, 0.0) + v * cv
        scale = max((abs(v) for v in acc.values()), default=1.0)
        acc = {s_: v for s_, v in acc.items() if abs(v) > COEFF_TOL * scale}

        # union-find over block positions
        parent = list(range(side))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: int, b: int) -> None:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        for (i, j, _), _v in acc.items():
            union(i, j)
        cscale = max(1.0, float(np.abs(C).max()))
        for i, j in zip(*np.nonzero(np.abs(C) > 1e-14 * cscale)):
            union(int(i), int(j))

        comps: dict[int, list[int]] = {}
        for p in range(side):
            comps.setdefault(find(p), []).append(p)

        entries_by_root: dict[int, list[tuple[int, int, int, float]]] = {r: [] for r in comps}
        for (i, j, col), v in acc.items():
            entries_by_root[find(i)].append((i, j, col, v))

        sizes_here = []
        for root in sorted(comps):
            pos = sorted(comps[root])
            ents = entries_by_root[root]
            sub_C = C[np.ix_(pos, pos)]
            # constants were accumulated on the upper triangle only; mirror them
            sub_C = np.triu(sub_C) + np.triu(sub_C, 1).T
            if not ents:
                lam_min = float(np.linalg.eigvalsh(sub_C).min()) if len(pos) else 0.0
                if lam_min < -1e-9 * max(1.0, float(np.abs(sub_C).max())):
                    infeasible = f"constant PSD component of block {bidx} is indefinite"
                continue  # constant component: no variables, nothing to solve
            local = {p: q for q, p in enumerate(pos)}
            ii = np.fromiter((local[i] for i, _, _, _ in ents), dtype=np.int32)
            jj = np.fromiter((local[j] for _, j, _, _ in ents), dtype=np.int32)
            kk = np.fromiter((col for _, _, col, _ in ents), dtype=np.int32)
            vv = np.fromiter((v for _, _, _, v in ents), dtype=np.float64)
            blocks.append(
                CompiledBlock(
                    side=len(pos),
                    C=sub_C,
                    ii=ii,
                    jj=jj,
                    kk=kk,
                    vv=vv,
                    name=prog.block_names[bidx],
                    nominal_index=bidx,
                    pos_map=np.asarray(pos, dtype=np.int64),
                )
            )
            sizes_here.append(len(pos))
        comp_sizes.append(sizes_here)
    log["block_components"] = comp_sizes

    # -- residual equality system ---------------------------------------------
    recovery = Recovery(
        hierarchy=prog.hierarchy,
        svars=tuple(survivors),
        subst=subst,
        key_index=prog.key_index,
    )
    if residual_rows:
        E_rows = []
        d_vals = []
        for form, rhs in residual_rows:
            row = np.zeros(m)
            const = 0.0
            for sv, v in form.items():
                formc, constc = subst.resolve(sv)
                const += v * constc
                for col, cv in formc.items():
                    row[col] += v * cv
            rn = float(np.abs(row).max()) if m else 0.0
            if rn <= COEFF_TOL:
                if abs(rhs - const) > ROW_DROP_TOL:
                    infeasible = "inconsistent residual equality row"
                continue
            E_rows.append(row)
            d_vals.append(rhs - const)
        if E_rows:
            E_full = np.vstack(E_rows)
            d_full = np.asarray(d_vals)
            u_ls, *_ = np.linalg.lstsq(E_full, d_full, rcond=None)
            resid = float(np.abs(E_full @ u_ls - d_full).max())
            if resid > 1e-7 * (1.0 + float(np.abs(d_full).max())):
                infeasible = f"equality system inconsistent (residual {resid:.3e})"
            _, R, piv = scipy.linalg.qr(E_full.T, mode="economic", pivoting=True)
            diag = np.abs(np.diag(R))
            rank = int((diag > 1e-10 * max(diag[0], 1e-300)).sum()) if diag.size else 0
            keep = np.sort(piv[:rank])
            E = E_full[keep]
            d = d_full[keep]
            u0 = u_ls
        else:
            E = np.zeros((0, m))
            d = np.zeros(0)
            u0 = np.zeros(m)
    else:
        E = np.zeros((0, m))
        d = np.zeros(0)
        u0 = np.zeros(m)
    log["equality_rows_kept"] = int(E.shape[0])

    return CompiledSDP(
        c=c,
        c0=float(c0),
        blocks=blocks,
        E=E,
        d=d,
        recovery=recovery,
        nominal=prog,
        u0=u0,
        log=log,
        infeasible_msg=infeasible,
    )
