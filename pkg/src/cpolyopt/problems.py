"""Benchmark instance generators and local upper-bound search.

Families
--------
random-quadratic / random-quartic
    Hermitian form f = [z]_d^H Q [z]_d (Q real symmetric with iid uniform
    entries, [z]_d the full monomial basis including the constant) minimized
    over the unit sphere sum |z_i|^2 = 1.
smale
    For polynomials P = z^{n+1} + a_n z^n + ... with P(0) = 0, P'(0) = 1,
    written through the critical points of p = P': maximize the smallest
    critical value |u| subject to |H(z_i)|^2 >= |u|^2 at every root z_i of p,
    where H(y) = (1/y) * integral of p from 0 to y, with the root product
    pinned to (-1)^n/(n+1) and the root vector confined to the sphere that
    normalization implies.  The conjectured optimum n/(n+1) is attained by
    P = (z^{n+1} + (n+1) z)/(n+1) scaled to monic normalization.
mordell
    Maximize the discriminant-type product prod_{i<j} |z_i - z_j|^2 *
    prod_i |z_i + s|^2 (s = z_1 + ... + z_{n-1}) with sum |z_i|^2 + |s|^2 = n;
    the n-th point of the original symmetric problem has been eliminated as
    z_n = -s.
polyphase-energy / polyphase-peak
    Unimodular sequence design with aperiodic autocorrelations
    A(j) = sum_i z_i conj(z_{i+j}): minimize total sidelobe energy
    sum_{j=1}^{n-2} |A(j)|^2, or the peak |u| with |u|^2 >= |A(j)|^2.

`local_upper_bound` runs a deterministic multistart local search on the
feasible set for the two geometries the benchmarks use (torus: all
constraints |z_i|^2 = 1; a single positive-definite quadratic-form sphere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.optimize

from .basis import monomials_upto
from .polynomials import CPOPInstance, CPoly, ExponentPair, conjugate, evaluate

__all__ = [
    "random_quadratic",
    "random_quartic",
    "smale",
    "mordell",
    "polyphase_energy",
    "polyphase_peak",
    "demo_unit_circle_quadratic",
    "demo_mixed_pair",
    "local_upper_bound",
    "BenchmarkFamily",
    "BENCHMARKS",
]


def _variables(n: int) -> tuple[list[CPoly], list[CPoly]]:
    return (
        [CPoly.variable(n, i) for i in range(n)],
        [CPoly.conj_variable(n, i) for i in range(n)],
    )


def _unit_sphere(n: int, radius: float = 1.0) -> CPoly:
    acc = CPoly.constant(n, -radius)
    for i in range(n):
        acc = acc + CPoly.modulus_squared(n, i)
    return acc


def _hermitian_form(n: int, exponents: list[tuple[int, ...]], Q: np.ndarray) -> CPoly:
    terms: dict = {}
    for i, bi in enumerate(exponents):
        for j, bj in enumerate(exponents):
            slot = (bi, bj)
            terms[slot] = terms.get(slot, 0.0) + Q[j, i]
    return CPoly.from_terms(n, terms)


def random_quadratic(n: int, seed: int) -> CPOPInstance:
    """f = [z]_1^H Q [z]_1 on the unit sphere, Q symmetric iid U(-1, 1)."""
    rng = np.random.default_rng(seed)
    exps = monomials_upto(n, 1)
    s = len(exps)
    Q = np.triu(rng.uniform(-1.0, 1.0, (s, s)))
    Q = Q + np.triu(Q, 1).T
    return CPOPInstance(
        n=n,
        objective=_hermitian_form(n, exps, Q),
        ineqs=(),
        eqs=(_unit_sphere(n),),
        sense="min",
        name=f"random-quadratic-n{n}-seed{seed}",
    )


def random_quartic(n: int, seed: int) -> CPOPInstance:
    """f = [z]_2^H Q [z]_2 on the unit sphere, Q symmetric iid U(-1, 1)."""
    rng = np.random.default_rng(seed)
    exps = monomials_upto(n, 2)
    s = len(exps)
    Q = np.triu(rng.uniform(-1.0, 1.0, (s, s)))
    Q = Q + np.triu(Q, 1).T
    return CPOPInstance(
        n=n,
        objective=_hermitian_form(n, exps, Q),
        ineqs=(),
        eqs=(_unit_sphere(n),),
        sense="min",
        name=f"random-quartic-n{n}-seed{seed}",
    )


# ---------------------------------------------------------------------------
# Smale's mean value problem
# ---------------------------------------------------------------------------


def _elementary_symmetric(n_vars: int, z: list[CPoly], k: int) -> CPoly:
    """e_k over the first len(z) variables (ambient dimension n_vars)."""
    if k == 0:
        return CPoly.constant(n_vars, 1.0)
    polys = [CPoly.constant(n_vars, 1.0)] + [CPoly.zero(n_vars)] * k
    for zi in z:
        for d in range(min(k, len(polys) - 1), 0, -1):
            polys[d] = polys[d] + polys[d - 1] * zi
    return polys[k]


def smale(n: int) -> CPOPInstance:
    """Critical-point form of the mean value conjecture for degree n + 1."""
    if n < 2:
        raise ValueError("needs n >= 2 critical points")
    N = n + 1  # z_1..z_n and u
    z, _ = _variables(N)
    roots = z[:n]
    u_idx = n
    prod_const = (-1.0) ** n / (n + 1)

    # p(y) = (n+1) prod (y - z_k) = sum_d p_d y^d with
    # p_d = (n+1) (-1)^(n-d) e_{n-d}(z)
    p_coeff = [
        _elementary_symmetric(N, roots, n - d) * ((n + 1) * (-1.0) ** (n - d))
        for d in range(n + 1)
    ]

    ineqs = []
    mod_u = CPoly.modulus_squared(N, u_idx)
    for i in range(n):
        # H(z_i) = sum_d p_d z_i^d / (d+1)
        H = CPoly.zero(N)
        zi_pow = CPoly.constant(N, 1.0)
        for d in range(n + 1):
            H = H + p_coeff[d] * zi_pow * (1.0 / (d + 1))
            if d < n:
                zi_pow = zi_pow * z[i]
        ineqs.append(H * conjugate(H) - mod_u)

    prod = CPoly.constant(N, 1.0)
    for zi in roots:
        prod = prod * zi
    prod_c = conjugate(prod)
    eq_re = (prod + prod_c) * 0.5 - prod_const
    eq_im = (prod - prod_c) * (-0.5j)

    radius = n * (1.0 / (n + 1)) ** (2.0 / n)
    sphere = CPoly.constant(N, -radius)
    for i in range(n):
        sphere = sphere + CPoly.modulus_squared(N, i)

    return CPOPInstance(
        n=N,
        objective=mod_u,
        ineqs=tuple(ineqs),
        eqs=(eq_re, eq_im, sphere),
        sense="max",
        name=f"smale-n{n}",
        conjectured_optimum=(n / (n + 1)) ** 2,
    )


def smale_extremal_point(n: int) -> np.ndarray:
    """Feasible point attaining the conjectured optimum (roots of (n+1)y^n + 1)."""
    roots = np.roots([n + 1] + [0] * (n - 1) + [1])
    u = n / (n + 1)
    return np.concatenate([roots, [u]])


# ---------------------------------------------------------------------------
# Mordell's inequality (eliminated form)
# ---------------------------------------------------------------------------


def mordell(n: int) -> CPOPInstance:
    """Point-product maximization with the last point eliminated (3 <= n <= 5)."""
    if not 3 <= n <= 5:
        raise ValueError("supported for 3 <= n <= 5")
    m = n - 1
    z, _ = _variables(m)
    s = CPoly.zero(m)
    for zi in z:
        s = s + zi

    obj = CPoly.constant(m, 1.0)
    for i in range(m):
        for j in range(i + 1, m):
            d = z[i] - z[j]
            obj = obj * (d * conjugate(d))
    for i in range(m):
        t = z[i] + s
        obj = obj * (t * conjugate(t))

    sphere = s * conjugate(s) - float(n)
    for i in range(m):
        sphere = sphere + CPoly.modulus_squared(m, i)

    return CPOPInstance(
        n=m,
        objective=obj,
        ineqs=(),
        eqs=(sphere,),
        sense="max",
        name=f"mordell-n{n}",
    )


# ---------------------------------------------------------------------------
# polyphase code design
# ---------------------------------------------------------------------------


def _autocorrelations(N: int, n_code: int) -> list[CPoly]:
    """A(j) = sum_{i=1}^{n-j} z_i conj(z_{i+j}) for j = 1..n-2 (ambient N)."""
    out = []
    for j in range(1, n_code - 1):
        terms: dict = {}
        for i in range(n_code - j):
            beta = tuple(1 if k == i else 0 for k in range(N))
            gamma = tuple(1 if k == i + j else 0 for k in range(N))
            terms[(beta, gamma)] = terms.get((beta, gamma), 0.0) + 1.0
        out.append(CPoly.from_terms(N, terms))
    return out


def polyphase_energy(n: int) -> CPOPInstance:
    """Minimize the total autocorrelation sidelobe energy of a unimodular code."""
    if n < 3:
        raise ValueError("needs n >= 3")
    acs = _autocorrelations(n, n)
    f = CPoly.zero(n)
    for A in acs:
        f = f + A * conjugate(A)
    eqs = tuple(CPoly.modulus_squared(n, i) - 1.0 for i in range(n))
    return CPOPInstance(
        n=n, objective=f, ineqs=(), eqs=eqs, sense="min", name=f"polyphase-energy-n{n}"
    )


def polyphase_peak(n: int) -> CPOPInstance:
    """Minimize the peak autocorrelation sidelobe |u| of a unimodular code."""
    if n < 3:
        raise ValueError("needs n >= 3")
    N = n + 1
    u_idx = n
    acs = _autocorrelations(N, n)
    mod_u = CPoly.modulus_squared(N, u_idx)
    ineqs = tuple(mod_u - A * conjugate(A) for A in acs)
    eqs = tuple(CPoly.modulus_squared(N, i) - 1.0 for i in range(n))
    return CPOPInstance(
        n=N,
        objective=mod_u,
        ineqs=ineqs,
        eqs=eqs,
        sense="min",
        name=f"polyphase-peak-n{n}",
    )


# ---------------------------------------------------------------------------
# worked demonstration instances
# ---------------------------------------------------------------------------


def demo_unit_circle_quadratic() -> CPOPInstance:
    """Three unit-modulus variables with a quadratic coupling; optimum -3.75."""
    n = 3
    z, zb = _variables(n)
    f = (
        0.5 * z[0] * zb[1]
        + 0.5 * z[0] * zb[2]
        + 0.5 * z[1] * zb[0]
        + 0.25 * z[1] * zb[1]
        + 0.25 * z[1] * zb[2]
        + 0.5 * z[2] * zb[0]
        + 0.25 * z[2] * zb[1]
        + z[0]
        + z[1]
        + z[2]
        + zb[0]
        + zb[1]
        + zb[2]
    )
    eqs = tuple(CPoly.modulus_squared(n, i) - 1.0 for i in range(n))
    return CPOPInstance(
        n=n,
        objective=f,
        ineqs=(),
        eqs=eqs,
        sense="min",
        name="demo-unit-circle-quadratic",
        conjectured_optimum=-3.75,
    )


def demo_mixed_pair() -> CPOPInstance:
    """Two-variable instance whose real image is a classic quartic program.

    Under z_1 = x_1 + i x_3, z_2 = x_2 + i x_4 the objective becomes
    3 - x_1^2 - x_3^2 + x_1 x_2^2 + 2 x_2 x_3 x_4 - x_1 x_4^2; optimum
    1 - sqrt(2) ~ -0.414214.
    """
    n = 2
    z, zb = _variables(n)
    f = (
        CPoly.constant(n, 3.0)
        - CPoly.modulus_squared(n, 0)
        + 0.5 * z[0] * zb[1] * zb[1]
        + 0.5 * z[1] * z[1] * zb[0]
    )
    g = z[1] + zb[1]
    h1 = (
        CPoly.modulus_squared(n, 0)
        - 0.25 * z[0] * z[0]
        - 0.25 * zb[0] * zb[0]
        - 1.0
    )
    h2 = z[1] * z[1] + zb[1] * zb[1] - 2.0 * CPoly.modulus_squared(n, 1)
    h3 = CPoly.modulus_squared(n, 0) + CPoly.modulus_squared(n, 1) - 3.0
    return CPOPInstance(
        n=n,
        objective=f,
        ineqs=(g,),
        eqs=(h1, h2, h3),
        sense="min",
        name="demo-mixed-pair",
        conjectured_optimum=-0.41421356237309515,
    )


# ---------------------------------------------------------------------------
# local upper bounds
# ---------------------------------------------------------------------------


def _is_torus(inst: CPOPInstance) -> bool:
    if inst.ineqs or len(inst.eqs) != inst.n:
        return False
    want = []
    for i in range(inst.n):
        e_i = tuple(1 if k == i else 0 for k in range(inst.n))
        want.append({ExponentPair(e_i, e_i): 1.0, ExponentPair((0,) * inst.n, (0,) * inst.n): -1.0})
    seen = []
    for h in inst.eqs:
        d = {p: complex(c) for p, c in h.terms.items()}
        seen.append(d)
    for w in want:
        if not any(
            set(d) == set(w) and all(abs(d[p] - w[p]) < 1e-12 for p in w) for d in seen
        ):
            return False
    return True


def _quadratic_sphere(inst: CPOPInstance) -> tuple[np.ndarray, float] | None:
    """Detect a single constraint z^H Q z = R with Q positive definite."""
    if inst.ineqs or len(inst.eqs) != 1:
        return None
    h = inst.eqs[0]
    n = inst.n
    Q = np.zeros((n, n), dtype=complex)
    R = 0.0
    for pair, c in h.terms.items():
        sb, sg = sum(pair.beta), sum(pair.gamma)
        if sb == 0 and sg == 0:
            R = -complex(c).real
        elif sb == 1 and sg == 1:
            i = pair.beta.index(1)
            j = pair.gamma.index(1)
            Q[j, i] += complex(c)  # coefficient of z_i conj(z_j)
        else:
            return None
    Q = 0.5 * (Q + Q.conj().T)
    w = np.linalg.eigvalsh(Q)
    if w[0] <= 1e-12 or R <= 0:
        return None
    return Q, R


def local_optimum(
    inst: CPOPInstance, restarts: int = 24, seed: int = 0
) -> tuple[float, np.ndarray] | None:
    """Best feasible point from deterministic multistart local optimization.

    Supports the torus geometry (every constraint |z_i|^2 = 1) and a single
    positive-definite quadratic-form sphere; returns None otherwise.  Returns
    (objective value, point); for minimization the value is an upper bound on
    the optimum, for maximization a lower bound (the tables' reference side
    in both cases).
    """
    rng = np.random.default_rng(seed)
    sign = 1.0 if inst.sense == "min" else -1.0
    n = inst.n

    if _is_torus(inst):
        def val(theta: np.ndarray) -> float:
            zpt = np.exp(1j * theta)
            return sign * float(np.real(evaluate(inst.objective, zpt)))

        best, best_x = np.inf, None
        for _ in range(restarts):
            theta0 = rng.uniform(0.0, 2 * np.pi, n)
            res = scipy.optimize.minimize(val, theta0, method="Nelder-Mead",
                                          options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            res = scipy.optimize.minimize(val, res.x, method="Powell",
                                          options={"xtol": 1e-12, "ftol": 1e-14})
            if float(res.fun) < best:
                best, best_x = float(res.fun), res.x
        return sign * best, np.exp(1j * np.asarray(best_x))

    qs = _quadratic_sphere(inst)
    if qs is not None:
        Q, R = qs
        w, U = np.linalg.eigh(Q)
        Qih = U @ np.diag(1.0 / np.sqrt(w)) @ U.conj().T  # Q^{-1/2}

        def point(x: np.ndarray) -> np.ndarray:
            v = x[:n] + 1j * x[n:]
            nv = np.linalg.norm(v)
            if nv < 1e-12:
                v, nv = np.ones(n, dtype=complex), math.sqrt(n)
            return math.sqrt(R) * (Qih @ (v / nv))

        def val(x: np.ndarray) -> float:
            return sign * float(np.real(evaluate(inst.objective, point(x))))

        best, best_x = np.inf, None
        for _ in range(restarts):
            x0 = rng.standard_normal(2 * n)
            res = scipy.optimize.minimize(val, x0, method="Nelder-Mead",
                                          options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 8000})
            res = scipy.optimize.minimize(val, res.x, method="Powell",
                                          options={"xtol": 1e-12, "ftol": 1e-14})
            if float(res.fun) < best:
                best, best_x = float(res.fun), res.x
        return sign * best, point(np.asarray(best_x))

    return None


def local_upper_bound(
    inst: CPOPInstance, restarts: int = 24, seed: int = 0
) -> float | None:
    """Objective value of :func:`local_optimum`, or None if unsupported."""
    out = local_optimum(inst, restarts=restarts, seed=seed)
    return None if out is None else out[0]


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkFamily:
    name: str
    build: Callable[..., CPOPInstance]
    needs_seed: bool
    default_order: int
    report_sqrt: bool  # present bounds as sqrt (peak-style objectives)
    reference: dict  # (n, r) -> published bound for quick comparison


BENCHMARKS: dict[str, BenchmarkFamily] = {
    "random-quadratic": BenchmarkFamily(
        "random-quadratic", random_quadratic, True, 1, False, {}
    ),
    "random-quartic": BenchmarkFamily(
        "random-quartic", random_quartic, True, 2, False, {}
    ),
    "smale": BenchmarkFamily(
        "smale",
        lambda n, seed=None: smale(n),
        False,
        2,
        True,
        {(2, 2): 0.66666, (3, 5): 0.75000},
    ),
    "mordell": BenchmarkFamily(
        "mordell",
        lambda n, seed=None: mordell(n),
        False,
        8,
        False,
        {(3, 8): 27.658, (3, 10): 27.348, (3, 12): 27.228, (4, 8): 497.37},
    ),
    "polyphase-energy": BenchmarkFamily(
        "polyphase-energy",
        lambda n, seed=None: polyphase_energy(n),
        False,
        5,
        False,
        {(4, 5): 0.5, (5, 5): 1.0, (6, 5): 4.0},
    ),
    "polyphase-peak": BenchmarkFamily(
        "polyphase-peak",
        lambda n, seed=None: polyphase_peak(n),
        False,
        4,
        True,
        {(4, 4): 0.5, (5, 4): 0.7703, (6, 4): 1.0},
    ),
}
