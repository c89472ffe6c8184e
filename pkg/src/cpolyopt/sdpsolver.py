"""Dense primal-dual interior-point solver for block LMI programs.

Solves the compiled form

    minimize    c . u + c0
    subject to  S_b = C_b + sum_j u_j A_jb  is PSD for every block b,
                E u = d,

together with its dual, by an infeasible-start Mehrotra predictor-corrector
method under Nesterov-Todd scaling.  The iterates (u, S, Z, nu) keep S and Z
positive definite; S is an independent variable so the matrix residual
C + A(u) - S shrinks geometrically with the primal step.

Per iteration the dominant work is one Schur complement matrix
H[j,k] = sum_b <A_jb, W_b^-1 A_kb W_b^-1>, assembled per block either by a
pair loop over COO entries (compiled kernel when available) or by a dense
symmetric-Kronecker product routed through matrix multiplies; the cheaper
estimate wins.  Equality rows are handled as a KKT bordering.

The reported per-iterate dual objective is primal - <S, Z>, which lower
bounds the primal value by construction whenever S, Z are PSD; the exact
dual objective d . nu - <C, Z> + c0 coincides with it at convergence and is
also recorded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg
import scipy.sparse

from . import kernels
from .moments import MomentKey, instantiate
from .presolve import CompiledBlock, CompiledSDP, compile_program
from .relaxation import LMIProgram

__all__ = [
    "SDPSolution",
    "FeasibilityReport",
    "solve",
    "solve_compiled",
    "certify_feasibility",
    "dump_compiled",
]

OPTIMAL = "optimal"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"
INFEASIBLE = "infeasible-suspected"

# consecutive iterations without meaningful progress before giving up
STALL_WINDOW = 8

_SQRT2 = float(np.sqrt(2.0))
_DENSE_SIDE_CAP = 2500  # svec-path scratch is q x q; cap q


# ---------------------------------------------------------------------------
# per-block machinery
# ---------------------------------------------------------------------------


class _BlockOps:
    """Numeric operators for one block: A(u), gathers, Schur contribution."""

    def __init__(self, blk: CompiledBlock, m: int):
        self.blk = blk
        s = blk.side
        ii64 = blk.ii.astype(np.int64)
        jj64 = blk.jj.astype(np.int64)
        off = blk.ii != blk.jj
        self.w = blk.vv * np.where(off, _SQRT2, 1.0 / _SQRT2)
        pos = ii64 * s + jj64
        upos, inv = np.unique(pos, return_inverse=True)
        self.P = (upos // s).astype(np.intp)
        self.Q = (upos % s).astype(np.intp)
        self.f = np.where(self.P != self.Q, _SQRT2, 1.0)
        q = len(upos)
        self.V = scipy.sparse.csr_matrix(
            (blk.vv * self.f[inv], (inv, blk.kk.astype(np.int64))), shape=(q, m)
        )
        self.Vt = self.V.T.tocsr()
        nnz = len(blk.vv)
        pair_cost = 4.0 * nnz * nnz
        dense_cost = 4.0 * q * q + 2.0 * nnz * (q + m)
        self.use_dense = q <= _DENSE_SIDE_CAP and dense_cost < pair_cost

    def expand(self, u: np.ndarray) -> np.ndarray:
        """A(u) as a dense symmetric matrix."""
        s = self.blk.side
        vals = (self.V @ u) / self.f
        M = np.zeros((s, s))
        M[self.P, self.Q] = vals
        M[self.Q, self.P] = vals
        return M

    def gather(self, X: np.ndarray) -> np.ndarray:
        """All inner products <A_j, X> for symmetric X."""
        return self.Vt @ (X[self.P, self.Q] * self.f)

    def schur(self, H: np.ndarray, Wi: np.ndarray) -> None:
        """H[j,k] += <A_j, Wi A_k Wi>."""
        if self.use_dense:
            T = Wi[np.ix_(self.P, self.P)] * Wi[np.ix_(self.Q, self.Q)]
            T += Wi[np.ix_(self.P, self.Q)] * Wi[np.ix_(self.Q, self.P)]
            T *= 0.5 * np.outer(self.f, self.f)
            H += self.Vt @ (T @ self.V)
        else:
            kernels.schur_pairs(H, self.blk.ii, self.blk.jj, self.blk.kk, self.w, Wi)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class SDPSolution:
    """Solver outcome mapped back to the nominal moment program."""

    status: str
    objective: float
    dual_objective: float
    y: dict[MomentKey, complex]
    dual_blocks: list[np.ndarray]
    iterations: int
    residuals: dict[str, float]
    iterate_log: list[tuple]
    reduction_log: dict
    wall_time: float
    u: np.ndarray
    compiled: CompiledSDP
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class FeasibilityReport:
    """Numeric feasibility of a moment sequence in a nominal program."""

    block_min_eigs: tuple[float, ...]
    max_equality_violation: float
    objective: float

    def ok(self, tol: float = 1e-6) -> bool:
        worst = min(self.block_min_eigs, default=0.0)
        return worst >= -tol and self.max_equality_violation <= tol


# ---------------------------------------------------------------------------
# core iteration
# ---------------------------------------------------------------------------


def _chol(M: np.ndarray) -> np.ndarray | None:
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None


def _chol_jitter(M: np.ndarray) -> tuple[np.ndarray, bool]:
    """Cholesky with escalating diagonal jitter; (factor, ok)."""
    L = _chol(M)
    if L is not None:
        return L, True
    s = M.shape[0]
    base = max(np.trace(M) / max(s, 1), 1.0)
    jit = 1e-12 * base
    I = np.eye(s)
    while jit <= 1e-6 * base:
        L = _chol(M + jit * I)
        if L is not None:
            return L, True
        jit *= 100.0
    # eigenvalue clipping: factor the nearest well-conditioned PSD matrix
    lam, Q = np.linalg.eigh(0.5 * (M + M.T))
    floor = max(lam.max(), base) * 1e-13
    while floor <= max(lam.max(), base):
        clipped = (Q * np.maximum(lam, floor)) @ Q.T
        L = _chol(0.5 * (clipped + clipped.T))
        if L is not None:
            return L, True
        floor *= 100.0
    return np.eye(s), False


def _max_step(L: np.ndarray, dX: np.ndarray) -> float:
    """sup {a : X + a dX PSD} for X = L L^T."""
    T = scipy.linalg.solve_triangular(L, dX, lower=True)
    T = scipy.linalg.solve_triangular(L, T.T, lower=True)
    lam_min = float(np.linalg.eigvalsh(0.5 * (T + T.T))[0])
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


@dataclass
class _State:
    u: np.ndarray
    nu: np.ndarray
    S: list[np.ndarray]
    Z: list[np.ndarray]


def solve_compiled(
    compiled: CompiledSDP,
    tol: float = 1e-8,
    max_iter: int = 200,
    verbose: bool = False,
) -> dict:
    """Run the interior-point iteration; returns raw numeric results."""
    t0 = time.perf_counter()
    m = compiled.m
    blocks = compiled.blocks
    E, d = compiled.E, compiled.d
    n_eq = E.shape[0]
    c, c0 = compiled.c, compiled.c0
    log: list[tuple] = []

    def finish(state, status, iters, res, msg=""):
        return {
            "status": status,
            "u": state.u,
            "nu": state.nu,
            "S": state.S,
            "Z": state.Z,
            "iterations": iters,
            "residuals": res,
            "iterate_log": log,
            "wall_time": time.perf_counter() - t0,
            "message": msg,
        }

    if compiled.infeasible_msg is not None:
        state = _State(compiled.u0.copy(), np.zeros(n_eq), [], [])
        return finish(state, INFEASIBLE, 0, {}, compiled.infeasible_msg)

    ops = [_BlockOps(b, m) for b in blocks]
    sides = [b.side for b in blocks]
    total_side = sum(sides)

    if m == 0 or not blocks:
        # nothing left to optimize: constants decide everything
        state = _State(np.zeros(m), np.zeros(n_eq), [b.C.copy() for b in blocks], [np.zeros((b.side, b.side)) for b in blocks])
        bad = any(
            b.C.size and np.linalg.eigvalsh(b.C)[0] < -1e-9 * (1 + np.abs(b.C).max())
            for b in blocks
        )
        status = INFEASIBLE if bad else OPTIMAL
        res = {"gap": 0.0, "primal": 0.0, "dual": 0.0}
        return finish(state, status, 0, res, "trivial program")

    c_scale = 1.0 + float(np.abs(c).max()) if m else 1.0
    d_scale = 1.0 + (float(np.abs(d).max()) if n_eq else 0.0)

    u = compiled.u0.copy()
    nu = np.zeros(n_eq)
    S: list[np.ndarray] = []
    Z: list[np.ndarray] = []
    for b, op in zip(blocks, ops):
        Su = b.C + op.expand(u)
        lam = float(np.linalg.eigvalsh(Su)[0]) if b.side else 0.0
        tau = max(10.0, -2.0 * lam, 2.0 * float(np.abs(b.C).max()))
        S.append(Su + tau * np.eye(b.side))
        kappa = max(10.0, 0.1 * c_scale)
        Z.append(kappa * np.eye(b.side))
    state = _State(u, nu, S, Z)

    best = None
    best_res: dict = {}
    best_metric = np.inf
    slow_steps = 0
    stalled = 0

    # Fixed Gram matrix <A_j, A_k> used to project dual directions back onto
    # the dual-feasibility equations.  The Schur matrix H scales like the
    # inverse of the duality gap, so near the optimum its solve error leaves
    # an O(eps*||H||) residual in gather(dZ); projecting through the
    # well-scaled Gram keeps the dual residual shrinking by the full step
    # factor instead.
    gram = np.zeros((m, m))
    for i, op in enumerate(ops):
        op.schur(gram, np.eye(blocks[i].side))
    gram.flat[:: m + 1] += 1e-12 * max(np.trace(gram) / max(m, 1), 1.0)
    Lgram, ok_gram = _chol_jitter(gram)

    for it in range(max_iter):
        # --- factorizations and scalings ---
        Ls, Lz, R, Rinv, Wi, lam = [], [], [], [], [], []
        ok_all = True
        for b_i, b in enumerate(blocks):
            L1, ok1 = _chol_jitter(S[b_i])
            L2, ok2 = _chol_jitter(Z[b_i])
            if not (ok1 and ok2):
                ok_all = False
                break
            M = L2.T @ L1
            U_, sig, Vt_ = np.linalg.svd(M)
            sig = np.maximum(sig, 1e-300)
            rt = np.sqrt(sig)
            R_b = L1 @ (Vt_.T / rt)
            Rinv_b = (rt[:, None] * Vt_) @ scipy.linalg.solve_triangular(
                L1, np.eye(b.side), lower=True
            )
            Ls.append(L1)
            Lz.append(L2)
            R.append(R_b)
            Rinv.append(Rinv_b)
            Wi.append(Rinv_b.T @ Rinv_b)
            lam.append(sig)
        if not ok_all:
            res = best_res or {"note": "cholesky failure"}
            out = finish(best or state, NUMERICAL_FAILURE, it, res, "scaling factorization failed")
            return out

        # --- residuals ---
        Rt = [blocks[i].C + ops[i].expand(u) - S[i] for i in range(len(blocks))]
        rp = d - E @ u if n_eq else np.zeros(0)
        AtZ = np.zeros(m)
        for i, op in enumerate(ops):
            AtZ += op.gather(Z[i])
        rd = c - AtZ - (E.T @ nu if n_eq else 0.0)

        gap = sum(float(np.sum(S[i] * Z[i])) for i in range(len(blocks)))
        pobj = float(c @ u) + c0
        dobj = pobj - gap
        dobj_exact = (float(d @ nu) if n_eq else 0.0) - sum(
            float(np.sum(blocks[i].C * Z[i])) for i in range(len(blocks))
        ) + c0
        mu = gap / max(total_side, 1)

        rp_rel = float(np.abs(rp).max()) / d_scale if n_eq else 0.0
        rd_rel = float(np.abs(rd).max()) / c_scale
        rt_rel = max(
            (float(np.abs(Rt[i]).max()) / (1.0 + float(np.abs(blocks[i].C).max())) for i in range(len(blocks))),
            default=0.0,
        )
        relgap = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
        metric = max(relgap, rp_rel, rd_rel, rt_rel)
        res = {
            "gap": relgap,
            "primal": max(rp_rel, rt_rel),
            "dual": rd_rel,
            "pobj": pobj,
            "dobj": dobj,
            "dobj_exact": dobj_exact,
            "mu": mu,
        }
        if metric < 0.97 * best_metric:
            stalled = 0
        else:
            stalled += 1
        if metric < best_metric:
            best_metric = metric
            best = _State(u.copy(), nu.copy(), [x.copy() for x in S], [x.copy() for x in Z])
            best_res = res
        if stalled >= STALL_WINDOW:
            # the iteration has stopped making progress (typically a loss of
            # strict complementarity at a degenerate optimal face); report the
            # best iterate seen rather than drifting further
            return finish(best or state, NUMERICAL_FAILURE, it, best_res or res, "no further progress")
        if verbose:
            print(
                f"  it {it:3d}  pobj {pobj:+.9e}  dobj {dobj:+.9e} "
                f"gap {relgap:.2e}  rp {max(rp_rel, rt_rel):.2e}  rd {rd_rel:.2e}"
            )
        if relgap <= tol and rp_rel <= tol and rd_rel <= tol and rt_rel <= tol:
            log.append((pobj, dobj, mu, 0.0, 0.0))
            return finish(state, OPTIMAL, it, res)

        # --- Schur complement and KKT factorization ---
        H = np.zeros((m, m))
        for i, op in enumerate(ops):
            op.schur(H, Wi[i])

        # Fast path: Cholesky of H, then the small equality Schur complement.
        # Near a degenerate optimal face H (or E H^-1 E^T) loses definiteness;
        # fall back to an LU factorization of the full augmented KKT system.
        once = None
        LH = _chol(H)
        if LH is not None:
            if n_eq:
                XE = scipy.linalg.cho_solve((LH, True), E.T)
                LG = _chol(0.5 * (G2s := E @ XE) + 0.5 * G2s.T)
                if LG is not None:

                    def once(r1, r2):
                        x0 = scipy.linalg.cho_solve((LH, True), r1)
                        dn = scipy.linalg.cho_solve((LG, True), r2 - E @ x0)
                        return x0 + XE @ dn, dn

            else:

                def once(r1, r2):
                    return scipy.linalg.cho_solve((LH, True), r1), np.zeros(0)

        if once is None:
            base = max(np.trace(H) / max(m, 1), 1.0)
            K = np.zeros((m + n_eq, m + n_eq))
            K[:m, :m] = H
            K[:m, :m].flat[:: m + n_eq + 1] += 1e-12 * base
            if n_eq:
                K[:m, m:] = -E.T
                K[m:, :m] = E
                K[m:, m:].flat[:: m + n_eq + 1] -= 1e-12 * base
            try:
                lu = scipy.linalg.lu_factor(K)
            except (np.linalg.LinAlgError, ValueError):
                return finish(best or state, NUMERICAL_FAILURE, it, res, "KKT factorization failed")

            def once(r1, r2):
                sol_ = scipy.linalg.lu_solve(lu, np.concatenate([r1, r2]))
                return sol_[:m], sol_[m:]

        def kkt_solve(rhs1: np.ndarray, rhs2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            """Solve H du - E^T dnu = rhs1, E du = rhs2, iteratively refined."""
            du, dn = once(rhs1, rhs2)
            prev = np.inf
            for _ in range(4):
                res1 = rhs1 - H @ du + (E.T @ dn if n_eq else 0.0)
                res2 = rhs2 - E @ du if n_eq else np.zeros(0)
                rnorm = max(np.abs(res1).max(initial=0.0), np.abs(res2).max(initial=0.0))
                if not np.isfinite(rnorm) or rnorm >= 0.5 * prev:
                    break
                prev = rnorm
                ddu, ddn = once(res1, res2)
                du += ddu
                dn += ddn
            return du, dn

        def directions(Xi: list[np.ndarray], rhs1):
            du, dn = kkt_solve(rhs1, rp)
            dS, dZ = [], []
            for i, op in enumerate(ops):
                dS_b = op.expand(du) + Rt[i]
                dZ_b = Xi[i] - Wi[i] @ dS_b @ Wi[i]
                dS.append(0.5 * (dS_b + dS_b.T))
                dZ.append(0.5 * (dZ_b + dZ_b.T))
            if ok_gram:
                # project dZ so that gather(dZ) + E^T dn = rd holds exactly
                gerr = (E.T @ dn if n_eq else 0.0) - rd
                for i, op in enumerate(ops):
                    gerr = gerr + op.gather(dZ[i])
                w = scipy.linalg.cho_solve((Lgram, True), gerr)
                for i, op in enumerate(ops):
                    dZ[i] -= op.expand(w)
            return du, dn, dS, dZ

        def step_lengths(dS, dZ):
            ap = min((_max_step(Ls[i], dS[i]) for i in range(len(blocks))), default=np.inf)
            ad = min((_max_step(Lz[i], dZ[i]) for i in range(len(blocks))), default=np.inf)
            return min(1.0, 0.99 * ap), min(1.0, 0.99 * ad)

        # predictor: drive straight to the boundary
        Xi_aff = [-Z[i] for i in range(len(blocks))]
        g_aff = np.zeros(m)
        WRtW = [Wi[i] @ Rt[i] @ Wi[i] for i in range(len(blocks))]
        for i, op in enumerate(ops):
            g_aff += op.gather(Xi_aff[i] - WRtW[i])
        du_a, dn_a, dS_a, dZ_a = directions(Xi_aff, g_aff - rd)
        ap_a, ad_a = step_lengths(dS_a, dZ_a)
        gap_aff = sum(
            float(np.sum((S[i] + ap_a * dS_a[i]) * (Z[i] + ad_a * dZ_a[i])))
            for i in range(len(blocks))
        )
        sigma = min(0.999, max(1e-8, (max(gap_aff, 0.0) / gap) ** 3))

        # corrector
        Xi = []
        g_cor = np.zeros(m)
        for i, op in enumerate(ops):
            dSb = Rinv[i] @ dS_a[i] @ Rinv[i].T
            dZb = R[i].T @ dZ_a[i] @ R[i]
            cross = dSb @ dZb
            T = -0.5 * (cross + cross.T)
            T[np.diag_indices_from(T)] += sigma * mu - lam[i] ** 2
            Gam = 2.0 * T / (lam[i][:, None] + lam[i][None, :])
            Xi_b = Rinv[i].T @ Gam @ Rinv[i]
            Xi.append(0.5 * (Xi_b + Xi_b.T))
            g_cor += op.gather(Xi[i] - WRtW[i])
        du, dn, dS, dZ = directions(Xi, g_cor - rd)
        ap, ad = step_lengths(dS, dZ)

        # near the cone boundary the 0.99 step factor can overshoot once the
        # eigenvalue estimates lose accuracy; backtrack until <S, Z> stays
        # positive so the barrier iteration remains well defined
        for _ in range(40):
            S_new = [S[i] + ap * dS[i] for i in range(len(blocks))]
            Z_new = [Z[i] + ad * dZ[i] for i in range(len(blocks))]
            if sum(float(np.sum(S_new[i] * Z_new[i])) for i in range(len(blocks))) > 0.0:
                break
            ap *= 0.5
            ad *= 0.5
        u = u + ap * du
        nu = nu + ad * dn
        S = S_new
        Z = Z_new
        state = _State(u, nu, S, Z)
        log.append((pobj, dobj, mu, ap, ad))

        if max(ap, ad) < 1e-3:
            slow_steps += 1
            if slow_steps >= 3:
                return finish(best or state, NUMERICAL_FAILURE, it + 1, best_res or res, "step length collapse")
        else:
            slow_steps = 0

    return finish(best or state, MAX_ITERATIONS, max_iter, best_res or res)


# ---------------------------------------------------------------------------
# nominal-program wrappers
# ---------------------------------------------------------------------------


def _reassemble_duals(compiled: CompiledSDP, Z: list[np.ndarray]) -> list[np.ndarray]:
    prog = compiled.nominal
    out = []
    complex_vars = prog.hierarchy == "complex"
    for bidx, sym in enumerate(prog.psd_blocks):
        side = 2 * sym.side if complex_vars else sym.side
        acc = np.zeros((side, side))
        for blk, Zb in zip(compiled.blocks, Z):
            if blk.nominal_index == bidx:
                acc[np.ix_(blk.pos_map, blk.pos_map)] += Zb
        if complex_vars:
            s = sym.side
            herm = 0.5 * (acc[:s, :s] + acc[s:, s:]) + 0.5j * (acc[s:, :s] - acc[:s, s:])
            out.append(0.5 * (herm + herm.conj().T))
        else:
            out.append(0.5 * (acc + acc.T))
    return out


def solve(
    prog: LMIProgram,
    tol: float = 1e-8,
    max_iter: int = 200,
    symmetry_reduction: bool = True,
    verbose: bool = False,
) -> SDPSolution:
    """Solve a moment LMI program and map results back to moment space."""
    compiled = compile_program(prog, symmetry_reduction=symmetry_reduction)
    raw = solve_compiled(compiled, tol=tol, max_iter=max_iter, verbose=verbose)
    u = raw["u"]
    y = compiled.recovery.y_map(u) if raw["status"] != INFEASIBLE or len(u) else {}
    sign = -1.0 if prog.negated else 1.0
    pobj = float(compiled.c @ u) + compiled.c0 if len(u) == compiled.m else compiled.c0
    res = raw["residuals"]
    dobj = res.get("dobj", pobj - sum(float(np.sum(s * z)) for s, z in zip(raw["S"], raw["Z"])))
    return SDPSolution(
        status=raw["status"],
        objective=sign * pobj,
        dual_objective=sign * dobj,
        y=y,
        dual_blocks=_reassemble_duals(compiled, raw["Z"]) if raw["Z"] else [],
        iterations=raw["iterations"],
        residuals=res,
        iterate_log=raw["iterate_log"],
        reduction_log=compiled.log,
        wall_time=raw["wall_time"],
        u=u,
        compiled=compiled,
        message=raw["message"],
    )


def certify_feasibility(prog: LMIProgram, y: Mapping[MomentKey, complex]) -> FeasibilityReport:
    """Check a moment sequence against the nominal blocks and equality rows."""
    eigs = []
    for sym in prog.psd_blocks:
        M = instantiate(sym, y)
        eigs.append(float(np.linalg.eigvalsh(M)[0]))
    viol = 0.0
    for form, rhs in prog.eq_rows:
        val = sum(t.coeff * _oriented(y[t.key], t.orient) for t in form)
        viol = max(viol, abs(val - rhs))
    return FeasibilityReport(
        block_min_eigs=tuple(eigs),
        max_equality_violation=float(viol),
        objective=float(np.real(prog.eval_objective(y))),
    )


def _oriented(v: complex, orient: int) -> complex:
    return v if orient >= 0 else np.conjugate(v)


def dump_compiled(compiled: CompiledSDP, path: str) -> None:
    """Write the numeric SDP in a plain text form for external cross-checks."""
    g = "{:.17g}".format
    with open(path, "w") as fh:
        fh.write(f"scalars {compiled.m}\n")
        fh.write(f"constant {g(compiled.c0)}\n")
        fh.write(f"blocks {len(compiled.blocks)}\n")
        for t, blk in enumerate(compiled.blocks):
            fh.write(f"block {t} side {blk.side} name {blk.name}\n")
            for i, j in zip(*np.nonzero(np.triu(np.abs(blk.C) > 0))):
                fh.write(f"C {t} {i} {j} {g(float(blk.C[i, j]))}\n")
            for i, j, k, v in zip(blk.ii, blk.jj, blk.kk, blk.vv):
                fh.write(f"A {t} {k} {i} {j} {g(float(v))}\n")
        for j, v in enumerate(compiled.c):
            if v != 0.0:
                fh.write(f"obj {j} {g(float(v))}\n")
        fh.write(f"eqrows {compiled.E.shape[0]}\n")
        for r in range(compiled.E.shape[0]):
            for col in np.nonzero(compiled.E[r])[0]:
                fh.write(f"E {r} {col} {g(float(compiled.E[r, col]))}\n")
            fh.write(f"d {r} {g(float(compiled.d[r]))}\n")
