"""Global-optimality detection and solution extraction from moment matrices.

A converged relaxation is certified globally optimal when its moment matrix
is flat: rank M_t(y) = rank M_{t-d}(y) for some admissible truncation level
t, where d is the largest half-degree of the constraint set.  Flat moment
sequences come from atomic measures; the atoms are recovered from shift
operators restricted to the column space of the low-order moment matrix and
joint-diagonalized.  Two cheaper special cases are handled first: rank one
(a single atom read off the order-one moments) and — for the real hierarchy,
whose optimal measures can be taken invariant under complex conjugation — a
rank-two matrix realized by a conjugate pair (a +/- i b) with equal weights.

The module also recovers weighted-SOS certificates from the dual blocks: the
identity f - bound = sigma_0 + sum_i sigma_i g_i + sum_i tau_i h_i is
completed by least-squares fitting of the equality multipliers tau_i, and the
remaining coefficient residual is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .basis import MonomialBasis, monomials_upto
from .moments import (
    AtomicMeasure,
    MomentKey,
    canonical_key,
    instantiate,
    moments_of_measure,
    rpop_key,
)
from .polynomials import CPoly, RPoly, conjugate, degree_stats, evaluate, to_real_pop
from .relaxation import LMIProgram, _equality_generators, _per_side_degrees

__all__ = [
    "ExtractionError",
    "FlatnessReport",
    "ExtractionResult",
    "Certificate",
    "numerical_rank",
    "check_flatness",
    "check_hyponormality",
    "symmetrize_moments",
    "extract_rank1",
    "extract_rank2",
    "extract_flat",
    "classify_shift_pair",
    "extract_solution",
    "recover_certificate",
]

RANK_REL_TOL = 1e-6
_JD_SEEDS = (20240705, 998244353)


class ExtractionError(RuntimeError):
    """Raised when no finitely-atomic representing measure can be recovered."""


# ---------------------------------------------------------------------------
# rank / flatness / hyponormality
# ---------------------------------------------------------------------------


def numerical_rank(M: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Rank by eigenvalue threshold relative to the largest eigenvalue."""
    if M.size == 0:
        return 0
    w = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    top = float(np.abs(w).max())
    if top <= 0.0:
        return 0
    return int((w > rel_tol * top).sum())


@dataclass(frozen=True)
class FlatnessReport:
    """Rank profile of the truncated moment matrices."""

    flat: bool
    t: int | None  # smallest admissible truncation level
    gap: int  # rank comparison distance (largest constraint half-degree)
    ranks: tuple[int, ...]  # rank of M_t for t = 0..r
    rank: int | None  # common rank at the flat level


def _constraint_gap(prog: LMIProgram) -> int:
    """Largest constraint (half-)degree d_K for the rank-flatness test."""
    if prog.hierarchy == "rpop":
        image = to_real_pop(prog.instance)
        degs = [math.ceil(g.degree / 2) for g in (*image.ineqs, *image.eqs)]
        return max(degs, default=1) or 1
    stats = degree_stats(prog.instance)
    return stats.d_K


def check_flatness(
    prog: LMIProgram,
    y: Mapping[MomentKey, complex],
    rel_tol: float = RANK_REL_TOL,
) -> FlatnessReport:
    sym = prog.moment_block()
    M = instantiate(sym, y)
    degs = np.asarray(MonomialBasis(prog.ambient_dim, prog.r, sym.basis).degrees())
    gap = _constraint_gap(prog)
    sizes = [int((degs <= t).sum()) for t in range(prog.r + 1)]
    ranks = tuple(numerical_rank(M[:s, :s], rel_tol) for s in sizes)
    for t in range(gap, prog.r + 1):
        if ranks[t] == ranks[t - gap]:
            return FlatnessReport(True, t, gap, ranks, ranks[t])
    return FlatnessReport(False, None, gap, ranks, None)


def _y_read(y: Mapping[MomentKey, complex], beta, gamma) -> complex:
    key, orient = canonical_key(tuple(beta), tuple(gamma))
    v = complex(y[key])
    return v if orient >= 0 else v.conjugate()


def check_hyponormality(
    y: Mapping[MomentKey, complex], n: int, t: int, tol: float = 1e-8
) -> float:
    """Smallest eigenvalue over variables i of Gram([b; z_i b]) at level t.

    For moments of a genuine measure every such doubled Gram matrix is PSD;
    a clearly negative eigenvalue rules out a representing measure.  Needs
    keys up to degree t + 1 on each side.
    """
    basis = MonomialBasis.create(n, t)
    exps = basis.exponents
    s = len(exps)
    worst = np.inf
    for i in range(n):
        e_i = tuple(1 if k == i else 0 for k in range(n))
        G = np.zeros((2 * s, 2 * s), dtype=complex)
        for a, ba in enumerate(exps):
            ba_i = tuple(x + e for x, e in zip(ba, e_i))
            for b, bb in enumerate(exps):
                bb_i = tuple(x + e for x, e in zip(bb, e_i))
                G[a, b] = _y_read(y, ba, bb)
                G[a, s + b] = _y_read(y, ba, bb_i)
                G[s + a, b] = _y_read(y, ba_i, bb)
                G[s + a, s + b] = _y_read(y, ba_i, bb_i)
        lam = float(np.linalg.eigvalsh(0.5 * (G + G.conj().T))[0])
        worst = min(worst, lam)
    return worst


def symmetrize_moments(y: Mapping[MomentKey, complex]) -> dict[MomentKey, complex]:
    """Average a moment sequence with its conjugate-reflected image.

    Keeps the value of every real-coefficient linear functional and is the
    identity on already conjugate-symmetric sequences.
    """
    return {k: complex(complex(v).real, 0.0) for k, v in y.items()}


# ---------------------------------------------------------------------------
# atom recovery
# ---------------------------------------------------------------------------


def _atoms_to_complex(prog: LMIProgram, pts: Sequence[np.ndarray]) -> list[np.ndarray]:
    if prog.hierarchy != "rpop":
        return [np.asarray(p, dtype=complex) for p in pts]
    n = prog.instance.n
    return [np.asarray(p[:n] + 1j * p[n:], dtype=complex) for p in pts]


def extract_rank1(prog: LMIProgram, y: Mapping[MomentKey, complex]) -> AtomicMeasure:
    """Single atom read off the order-one moments (requires rank-one M(y))."""
    dim = prog.ambient_dim
    zero = (0,) * dim
    pt = np.empty(dim, dtype=complex)
    for i in range(dim):
        e_i = tuple(1 if k == i else 0 for k in range(dim))
        if prog.hierarchy == "rpop":
            pt[i] = complex(y[rpop_key(e_i)])
        else:
            pt[i] = _y_read(y, e_i, zero)
    [atom] = _atoms_to_complex(prog, [pt])
    mass = float(np.real(_y_read(y, zero, zero))) if prog.hierarchy != "rpop" else float(
        np.real(y[rpop_key(zero)])
    )
    return AtomicMeasure(atoms=((mass, tuple(atom)),))


def classify_shift_pair(
    mats: Sequence[np.ndarray], tol_commute: float = 1e-8, tol_fit: float = 1e-6
) -> str:
    """Classify commuting real 2x2 shift operators: "symmetric" or "rotation".

    Symmetric matrices [[a, b], [b, d]] diagonalize to two real atoms;
    rotation-scaling matrices [[a, -b], [b, a]] encode one conjugate pair.
    Preference goes to "symmetric" when both fits succeed.
    """
    mats = [np.asarray(M, dtype=float) for M in mats]
    scale = max((float(np.abs(M).max()) for M in mats), default=1.0) or 1.0
    for A in mats:
        for B in mats:
            if np.abs(A @ B - B @ A).max() > tol_commute * scale * scale:
                return "neither"
    sym_err = max(abs(M[0, 1] - M[1, 0]) for M in mats)
    rot_err = max(max(abs(M[0, 0] - M[1, 1]), abs(M[0, 1] + M[1, 0])) for M in mats)
    if sym_err <= tol_fit * scale:
        return "symmetric"
    if rot_err <= tol_fit * scale:
        return "rotation"
    return "neither"


def extract_rank2(
    prog: LMIProgram, y: Mapping[MomentKey, complex], rel_tol: float = RANK_REL_TOL
) -> AtomicMeasure:
    """Conjugate-pair extraction from a rank-two order-one moment matrix.

    Writes M_1 = (1, p)(1, p)^T + (0, q)(0, q)^T and returns the atoms
    p +/- i q with equal weights.  Falls back to the real two-atom reading
    (via the shift operators) when the rank-one split fails.
    """
    if prog.hierarchy != "real":
        raise ExtractionError("conjugate-pair extraction applies to the real hierarchy")
    n = prog.ambient_dim
    zero = (0,) * n
    eye = [tuple(1 if k == i else 0 for k in range(n)) for i in range(n)]
    p = np.array([float(np.real(_y_read(y, e, zero))) for e in eye])
    Y = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            Y[i, j] = float(np.real(_y_read(y, eye[i], eye[j])))
    N = Y - np.outer(p, p)
    scale = max(1.0, float(np.abs(Y).max()))
    w = np.linalg.eigvalsh(0.5 * (N + N.T))
    if w[0] < -1e-6 * scale or numerical_rank(N, rel_tol) > 1:
        # not a conjugate pair; try two real atoms through the shift operators
        return extract_flat(prog, y, t=prog.r)
    piv = int(np.argmax(np.diag(N)))
    if N[piv, piv] <= 1e-12 * scale:
        raise ExtractionError("order-one moment matrix is numerically rank one")
    q = N[:, piv] / math.sqrt(N[piv, piv])
    nz = np.nonzero(np.abs(q) > 1e-10 * scale)[0]
    if nz.size and q[nz[0]] < 0:
        q = -q
    atoms = (
        (0.5, tuple(p + 1j * q)),
        (0.5, tuple(p - 1j * q)),
    )
    return AtomicMeasure(atoms=atoms)


def _joint_diagonalize(T: list[np.ndarray], seed: int) -> np.ndarray:
    """Eigenvalues of commuting (near-)normal matrices; row k = atom k."""
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(len(T))
    comb = sum(c * M for c, M in zip(coeffs, T))
    _, Q = np.linalg.eig(comb)
    pts = np.empty((Q.shape[1], len(T)), dtype=complex)
    for i, M in enumerate(T):
        D = np.linalg.solve(Q, M @ Q)
        pts[:, i] = np.diag(D)
    return pts


def extract_flat(
    prog: LMIProgram,
    y: Mapping[MomentKey, complex],
    t: int | None = None,
    rel_tol: float = RANK_REL_TOL,
) -> AtomicMeasure:
    """Shift-operator extraction from a flat truncation at level t."""
    report = check_flatness(prog, y, rel_tol)
    if t is None:
        if not report.flat:
            raise ExtractionError(f"moment matrix is not flat (ranks {report.ranks})")
        t = report.t
    gap = report.gap
    sym = prog.moment_block()
    M = instantiate(sym, y)
    degs = np.asarray(MonomialBasis(prog.ambient_dim, prog.r, sym.basis).degrees())
    low = int((degs <= max(t - gap, 0)).sum())
    Mlow = M[:low, :low]
    w_eig, U = np.linalg.eigh(0.5 * (Mlow + Mlow.conj().T))
    top = float(w_eig.max())
    keep = w_eig > rel_tol * top
    s = int(keep.sum())
    if s == 0:
        raise ExtractionError("moment matrix is numerically zero")
    B = U[:, keep] * np.sqrt(w_eig[keep])
    Binv = np.linalg.pinv(B)

    dim = prog.ambient_dim
    rpop = prog.hierarchy == "rpop"
    exps = sym.basis[:low]
    T = []
    for i in range(dim):
        e_i = tuple(1 if k == i else 0 for k in range(dim))
        G = np.empty((low, low), dtype=complex)
        for a, ba in enumerate(exps):
            up = tuple(x + e for x, e in zip(ba, e_i))
            for b, bb in enumerate(exps):
                if rpop:
                    G[a, b] = y[rpop_key(tuple(x + e2 for x, e2 in zip(up, bb)))]
                else:
                    G[a, b] = _y_read(y, up, bb)
        Ti = Binv @ G @ Binv.conj().T
        if not np.iscomplexobj(B):
            Ti = np.real_if_close(Ti, tol=1e6)
        T.append(Ti)

    pts_a = _joint_diagonalize(T, _JD_SEEDS[0])
    pts_b = _joint_diagonalize(T, _JD_SEEDS[1])
    scale = 1.0 + float(np.abs(pts_a).max())
    order_a = np.lexsort(np.round(pts_a, 8).view(float).T)
    order_b = np.lexsort(np.round(pts_b, 8).view(float).T)
    if np.abs(pts_a[order_a] - pts_b[order_b]).max() > 1e-5 * scale:
        raise ExtractionError("joint diagonalization is unstable between seeds")
    pts = pts_a
    if rpop:
        if np.abs(pts.imag).max() > 1e-5 * scale:
            raise ExtractionError("real-variable atoms came out complex")
        pts = pts.real.astype(float)

    # weights from the low-order moments
    zero = (0,) * dim
    lhs = []
    rhs = []
    for b_exp in sym.basis[: int((degs <= min(prog.r, max(t - gap, 0) + 1)).sum())]:
        if rpop:
            vals = np.array([np.prod(np.asarray(pt, dtype=float) ** b_exp) for pt in pts])
            lhs.append(vals)
            rhs.append(float(np.real(y[rpop_key(b_exp)])))
        else:
            vals = np.array([np.prod(np.asarray(pt) ** b_exp) for pt in pts])
            lhs.append(vals.real)
            rhs.append(float(np.real(_y_read(y, b_exp, zero))))
            lhs.append(vals.imag)
            rhs.append(float(np.imag(_y_read(y, b_exp, zero))))
    A = np.vstack(lhs)
    wts, *_ = np.linalg.lstsq(A, np.asarray(rhs), rcond=None)
    if wts.min() < -1e-5:
        raise ExtractionError(f"negative extracted weight {wts.min():.3e}")
    wts = np.maximum(wts, 1e-12)
    atoms_c = _atoms_to_complex(prog, list(pts))
    return AtomicMeasure(atoms=tuple((float(w), tuple(a)) for w, a in zip(wts, atoms_c)))


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionResult:
    measure: AtomicMeasure
    method: str  # "rank1" | "conjugate-pair" | "flat"
    flatness: FlatnessReport
    atom_objectives: tuple[float, ...]
    max_constraint_violation: float
    moment_error: float


def _validate_measure(
    prog: LMIProgram, y: Mapping[MomentKey, complex], measure: AtomicMeasure
) -> tuple[tuple[float, ...], float, float]:
    inst = prog.instance
    objs = []
    viol = 0.0
    for _, atom in measure.atoms:
        pt = np.asarray(atom)
        objs.append(float(np.real(evaluate(inst.objective, pt))))
        for g in inst.ineqs:
            viol = max(viol, max(0.0, -float(np.real(evaluate(g, pt)))))
        for h in inst.eqs:
            viol = max(viol, abs(complex(evaluate(h, pt))))
    # order-one moment consistency in the ambient (possibly realified) space
    if prog.hierarchy == "rpop":
        n = inst.n
        amb = AtomicMeasure(
            atoms=tuple(
                (w, tuple(np.concatenate([np.real(a), np.imag(a)]) + 0j))
                for w, a in measure.atoms
            )
        )
    else:
        amb = measure
    ym = moments_of_measure(amb, 1)
    err = 0.0
    for key, val in ym.items():
        ref = y.get(key)
        if ref is None:
            key2, orient = canonical_key(key.beta, key.gamma)
            ref = y.get(key2)
            if ref is not None and orient < 0:
                ref = complex(ref).conjugate()
        if ref is not None:
            err = max(err, abs(complex(val) - complex(ref)))
    return tuple(objs), viol, err


def extract_solution(
    prog: LMIProgram,
    y: Mapping[MomentKey, complex],
    rel_tol: float = RANK_REL_TOL,
) -> ExtractionResult:
    """Recover an atomic measure certifying global optimality, if possible."""
    if prog.hierarchy in ("real", "rpop"):
        y = symmetrize_moments(y)
    report = check_flatness(prog, y, rel_tol)
    full_rank = report.ranks[-1]
    method: str
    if full_rank == 1:
        measure = extract_rank1(prog, y)
        method = "rank1"
    elif prog.hierarchy == "real" and report.ranks[1] == 2 and full_rank == 2:
        measure = extract_rank2(prog, y, rel_tol)
        method = "conjugate-pair" if len(measure.atoms) == 2 else "flat"
    elif report.flat:
        measure = extract_flat(prog, y, report.t, rel_tol)
        method = "flat"
    else:
        raise ExtractionError(
            f"no flat truncation found (ranks by level: {report.ranks})"
        )
    objs, viol, err = _validate_measure(prog, y, measure)
    return ExtractionResult(
        measure=measure,
        method=method,
        flatness=report,
        atom_objectives=objs,
        max_constraint_violation=viol,
        moment_error=err,
    )


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Weighted-SOS decomposition f - bound = s0 + sum s_i g_i + sum t_i h_i."""

    bound: float
    gram_blocks: tuple[np.ndarray, ...]
    multipliers: tuple  # CPoly or RPoly per equality constraint
    residual_norm: float  # max residual coefficient / max |f| coefficient
    gram_min_eigs: tuple[float, ...]


def _cpoly_of_gram(
    G: np.ndarray, basis: tuple[tuple[int, ...], ...], n: int
) -> CPoly:
    """Polynomial v(z)^H G v(z) for the (Hermitian or real) Gram matrix G."""
    terms: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}
    for a, ba in enumerate(basis):
        for b, bb in enumerate(basis):
            c = complex(G[b, a])  # coefficient of z^{b_a} zbar^{b_b}
            if c != 0:
                slot = (ba, bb)
                terms[slot] = terms.get(slot, 0.0) + c
    return CPoly.from_terms(n, terms)


def _rpoly_of_gram(G: np.ndarray, basis: tuple[tuple[int, ...], ...], m: int) -> RPoly:
    terms: dict[tuple[int, ...], float] = {}
    for a, ba in enumerate(basis):
        for b, bb in enumerate(basis):
            v = float(np.real(G[a, b]))
            if v != 0:
                slot = tuple(x + y_ for x, y_ in zip(ba, bb))
                terms[slot] = terms.get(slot, 0.0) + v
    return RPoly(m, terms)


def _self_conj_vector_space(polys: list[CPoly]) -> tuple[list, dict]:
    """Index the canonical coefficient slots hit by a family of polynomials."""
    slots: dict = {}
    for p in polys:
        for pair in p.terms:
            key, orient = canonical_key(pair.beta, pair.gamma)
            slots.setdefault((key, 0), len(slots))
            if not key.is_diagonal():
                slots.setdefault((key, 1), len(slots))
    return list(slots), slots


def _cpoly_to_slot_vec(p: CPoly, slots: dict) -> np.ndarray:
    v = np.zeros(len(slots))
    for pair, c in p.terms.items():
        key, orient = canonical_key(pair.beta, pair.gamma)
        c = complex(c)
        if pair.is_diagonal():
            v[slots[(key, 0)]] += c.real
            continue
        # self-conjugate polynomials carry c at (beta,gamma) and conj(c) at the
        # swap; fold both onto the canonical representative
        if orient < 0:
            c = c.conjugate()
        v[slots[(key, 0)]] += c.real
        v[slots[(key, 1)]] += c.imag
    return v


def recover_certificate(prog: LMIProgram, sol) -> Certificate:
    """Complete the SOS identity from the solved dual blocks."""
    inst = prog.instance
    internal_bound = (-1.0 if prog.negated else 1.0) * sol.dual_objective
    duals = sol.dual_blocks
    gram_min = tuple(
        float(np.linalg.eigvalsh(0.5 * (D + D.conj().T))[0]) if D.size else 0.0
        for D in duals
    )

    if prog.hierarchy == "rpop":
        return _recover_certificate_rpop(prog, sol, internal_bound, gram_min)

    sign = -1.0 if prog.negated else 1.0
    f_int = inst.objective * sign
    factor = 2.0 if prog.hierarchy == "complex" else 1.0
    n = inst.n
    p_res = f_int - CPoly.constant(n, internal_bound)
    p_res = p_res - _cpoly_of_gram(factor * duals[0], prog.psd_blocks[0].basis, n)
    for gi, g in enumerate(inst.ineqs, start=1):
        sig = _cpoly_of_gram(factor * duals[gi], prog.psd_blocks[gi].basis, n)
        p_res = p_res - sig * g
    scale = max(1.0, inst.objective.max_abs_coeff())

    if not inst.eqs:
        _, slots = _self_conj_vector_space([p_res])
        resid = _cpoly_to_slot_vec(p_res, slots)
        return Certificate(
            bound=float(sol.dual_objective),
            gram_blocks=tuple(factor * D for D in duals),
            multipliers=(),
            residual_norm=float(np.abs(resid).max() / scale) if resid.size else 0.0,
            gram_min_eigs=gram_min,
        )

    # Multiplier dictionary mirroring the relaxation's equality rows: each
    # generator q contributes the polynomials Re/Im(z^a conj(z)^b * q) over
    # its admissible multiplier grid (square for self-conjugate generators,
    # rectangular for one-sided recombined pairs).
    def _invariant(diff) -> bool:
        return all(
            sum(wk * dk for wk, dk in zip(w, diff)) == 0 for w in prog.phase_lattice
        )

    columns: list[CPoly] = []
    # per column: (parent index, multiplier CPoly) for a self-conjugate
    # generator, or (parent pair, shift monomial, T-space factor) otherwise
    recon: list[tuple] = []
    for q, self_conj, parents in _equality_generators(inst.eqs):
        db, dg = _per_side_degrees(q)
        if self_conj:
            order = prog.r - max(db, dg, 1)
            if order < 0:
                continue
            basis = MonomialBasis.create(n, order).exponents
            seen: set = set()
            for ba in basis:
                for bb in basis:
                    key, _ = canonical_key(ba, bb)
                    if key in seen:
                        continue
                    seen.add(key)
                    if not _invariant(np.subtract(key.beta, key.gamma)):
                        continue
                    base = {(key.beta, key.gamma): 0.5, (key.gamma, key.beta): 0.5}
                    mult = CPoly.from_terms(n, base)
                    columns.append(mult * q)
                    recon.append((parents[0], mult))
                    if not key.is_diagonal():
                        imag = {(key.beta, key.gamma): 0.5j, (key.gamma, key.beta): -0.5j}
                        mult = CPoly.from_terms(n, imag)
                        columns.append(mult * q)
                        recon.append((parents[0], mult))
        else:
            if prog.r < db or prog.r < dg:
                continue
            abasis = MonomialBasis.create(n, prog.r - db).exponents
            bbasis = MonomialBasis.create(n, prog.r - dg).exponents
            qc = conjugate(q)
            for a in abasis:
                for b in bbasis:
                    if not _invariant(np.subtract(a, b)):
                        continue
                    M = CPoly.from_terms(n, {(a, b): 1.0})
                    Mq = M * q
                    Mqc = CPoly.from_terms(n, {(b, a): 1.0}) * qc
                    columns.append((Mq + Mqc) * 0.5)  # Re(M q)
                    recon.append((parents, M, 1.0))
                    columns.append((Mq - Mqc) * (-0.5j))  # Im(M q)
                    recon.append((parents, M, -1.0j))

    _, slots = _self_conj_vector_space([p_res, *columns])
    b = _cpoly_to_slot_vec(p_res, slots)
    data, rows_i, cols_i = [], [], []
    for ci, cp in enumerate(columns):
        v = _cpoly_to_slot_vec(cp, slots)
        nz = np.nonzero(v)[0]
        rows_i.extend(nz.tolist())
        cols_i.extend([ci] * len(nz))
        data.extend(v[nz].tolist())
    A = scipy.sparse.csr_matrix(
        (data, (rows_i, cols_i)), shape=(len(slots), len(columns))
    )
    t = scipy.sparse.linalg.lsmr(A, b, atol=1e-14, btol=1e-14, conlim=1e14)[0]
    resid = b - A @ t

    # fold the fitted column weights back into one multiplier per constraint:
    # a pair generator q = h_i + i h_j shifted by T contributes
    # Re(T q) = Re(T) h_i - Im(T) h_j
    mults_acc: list[CPoly] = [CPoly(n, {}) for _ in inst.eqs]
    t_polys: dict[tuple[int, ...], CPoly] = {}
    for coeff, info in zip(t, recon):
        if not coeff:
            continue
        if len(info) == 2:
            hi, mult = info
            mults_acc[hi] = mults_acc[hi] + mult * coeff
        else:
            parents, M, fac = info
            acc = t_polys.get(parents)
            contrib = M * (coeff * fac)
            t_polys[parents] = contrib if acc is None else acc + contrib
    for (hi, hj), T in t_polys.items():
        Tc = conjugate(T)
        mults_acc[hi] = mults_acc[hi] + (T + Tc) * 0.5
        mults_acc[hj] = mults_acc[hj] + (Tc - T) * (-0.5j)

    return Certificate(
        bound=float(sol.dual_objective),
        gram_blocks=tuple(factor * D for D in duals),
        multipliers=tuple(mults_acc),
        residual_norm=float(np.abs(resid).max() / scale) if resid.size else 0.0,
        gram_min_eigs=gram_min,
    )


def _recover_certificate_rpop(
    prog: LMIProgram, sol, internal_bound: float, gram_min
) -> Certificate:
    inst = prog.instance
    image = to_real_pop(inst)
    sign = -1.0 if prog.negated else 1.0
    m = image.m
    f_int = RPoly(m, {k: sign * v for k, v in image.objective.terms.items()})
    res_terms = dict(f_int.terms)
    res_terms[(0,) * m] = res_terms.get((0,) * m, 0.0) - internal_bound

    def sub(p: RPoly) -> None:
        for k, v in p.terms.items():
            res_terms[k] = res_terms.get(k, 0.0) - v

    duals = sol.dual_blocks
    sub(_rpoly_of_gram(duals[0], prog.psd_blocks[0].basis, m))
    for gi, g in enumerate(image.ineqs, start=1):
        sig = _rpoly_of_gram(duals[gi], prog.psd_blocks[gi].basis, m)
        sub(sig * g)

    scale = max(1.0, max((abs(v) for v in image.objective.terms.values()), default=1.0))
    if not image.eqs:
        resid = max((abs(v) for v in res_terms.values()), default=0.0)
        return Certificate(
            bound=float(sol.dual_objective),
            gram_blocks=tuple(duals),
            multipliers=(),
            residual_norm=resid / scale,
            gram_min_eigs=gram_min,
        )

    columns: list[RPoly] = []
    offs: list[tuple[int, tuple[int, ...]]] = []
    for hi, h in enumerate(image.eqs):
        d_room = 2 * prog.r - h.degree
        if d_room < 0:
            continue
        for mono in monomials_upto(m, d_room):
            columns.append(RPoly(m, {mono: 1.0}) * h)
            offs.append((hi, mono))

    slots: dict = {}
    for p in columns:
        for k in p.terms:
            slots.setdefault(k, len(slots))
    for k in res_terms:
        slots.setdefault(k, len(slots))
    b = np.zeros(len(slots))
    for k, v in res_terms.items():
        b[slots[k]] = v
    data, rows_i, cols_i = [], [], []
    for ci, p in enumerate(columns):
        for k, v in p.terms.items():
            rows_i.append(slots[k])
            cols_i.append(ci)
            data.append(v)
    A = scipy.sparse.csr_matrix(
        (data, (rows_i, cols_i)), shape=(len(slots), len(columns))
    )
    t = scipy.sparse.linalg.lsmr(A, b, atol=1e-14, btol=1e-14, conlim=1e14)[0]
    resid = b - A @ t
    mult_terms: list[dict] = [{} for _ in image.eqs]
    for (hi, mono), coeff in zip(offs, t):
        if coeff:
            mult_terms[hi][mono] = mult_terms[hi].get(mono, 0.0) + coeff
    mults = [RPoly(m, d) for d in mult_terms]
    return Certificate(
        bound=float(sol.dual_objective),
        gram_blocks=tuple(duals),
        multipliers=tuple(mults),
        residual_norm=float(np.abs(resid).max() / scale) if resid.size else 0.0,
        gram_min_eigs=gram_min,
    )
