"""Problem files, run reports, and offline report verification.

Problem files are line-oriented text: a header (arity, sense, metadata)
followed by one section per polynomial, each section a list of terms
``term <beta> <gamma> <re> <im>``.  Coefficients are serialized with 17
significant digits so that values round-trip exactly; ``save_problem``
emits a canonical form and ``load_problem(save_problem(inst))`` is the
identity on instances.

Run reports are self-contained: they embed the problem, the moment vector,
the extraction outcome, and (when recovered) the weighted-SOS certificate,
so :func:`verify_report` can re-check every recorded number without
re-solving the SDP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .moments import MomentKey, key_sort_index
from .polynomials import CPOPInstance, CPoly, RPoly, evaluate, to_real_pop

__all__ = [
    "ParseError",
    "save_problem",
    "load_problem",
    "RunReport",
    "ReportAtom",
    "build_report",
    "write_report",
    "read_report",
    "VerifyCheck",
    "VerifyResult",
    "verify_report",
]

PROBLEM_HEADER = "cpolyopt-problem v1"
REPORT_HEADER = "cpolyopt-report v1"


class ParseError(ValueError):
    """A malformed problem or report file; carries the offending location."""

    def __init__(self, message: str, line_no: int | None = None, source: str = ""):
        where = f"{source or 'input'}"
        if line_no is not None:
            where += f", line {line_no}"
        super().__init__(f"{where}: {message}")
        self.line_no = line_no
        self.source = source


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_exps(e: tuple[int, ...]) -> str:
    return ",".join(str(v) for v in e)


def _parse_exps(
    tok: str, n: int | None, line_no: int, source: str
) -> tuple[int, ...]:
    try:
        out = tuple(int(v) for v in tok.split(","))
    except ValueError:
        raise ParseError(f"bad exponent tuple {tok!r}", line_no, source) from None
    if (n is not None and len(out) != n) or any(v < 0 for v in out):
        raise ParseError(
            f"exponent tuple {tok!r} must hold "
            f"{n if n is not None else 'matching'} nonnegative integers",
            line_no,
            source,
        )
    return out


def _parse_float(tok: str, line_no: int, source: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad number {tok!r}", line_no, source) from None


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------


def _poly_lines(p: CPoly) -> list[str]:
    lines = []
    for pair, c in p.terms.items():
        c = complex(c)
        lines.append(
            f"term {_fmt_exps(pair.beta)} {_fmt_exps(pair.gamma)} "
            f"{_fmt(c.real)} {_fmt(c.imag)}"
        )
    return lines


def save_problem(inst: CPOPInstance, path: str | Path | None = None) -> str:
    """Serialize an instance; optionally also write it to ``path``."""
    lines = [PROBLEM_HEADER]
    if inst.name:
        lines.append(f"name {inst.name}")
    lines.append(f"n {inst.n}")
    lines.append(f"sense {inst.sense}")
    if inst.conjectured_optimum is not None:
        lines.append(f"conjectured {_fmt(inst.conjectured_optimum)}")
    lines.append("objective")
    lines.extend(_poly_lines(inst.objective))
    for g in inst.ineqs:
        lines.append("ineq")
        lines.extend(_poly_lines(g))
    for h in inst.eqs:
        lines.append("eq")
        lines.extend(_poly_lines(h))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _check_section(
    label: str,
    terms: dict,
    term_lines: dict,
    n: int,
    source: str,
    real_required: bool,
) -> CPoly:
    for (beta, gamma), c in terms.items():
        partner = terms.get((gamma, beta))
        if partner is None or abs(partner - complex(c).conjugate()) > 1e-12 * max(
            1.0, abs(c)
        ):
            raise ParseError(
                f"{label} is not self-conjugate: term z^{beta} zbar^{gamma} "
                f"(coefficient {c}) lacks a matching conjugate partner",
                term_lines[(beta, gamma)],
                source,
            )
        if real_required and abs(complex(c).imag) > 1e-12 * max(1.0, abs(c)):
            raise ParseError(
                f"{label} needs real coefficients for the real hierarchy: term "
                f"z^{beta} zbar^{gamma} has coefficient {c}",
                term_lines[(beta, gamma)],
                source,
            )
    return CPoly.from_terms(n, terms)


def load_problem(
    text_or_path: str | Path, hierarchy: str | None = None
) -> CPOPInstance:
    """Parse a problem file (path or literal text).

    With ``hierarchy="real"`` the objective and inequality coefficients must
    be real (complex-coefficient equalities remain legal in every hierarchy;
    their real and imaginary parts are enforced separately).
    """
    source = ""
    if isinstance(text_or_path, Path) or (
        "\n" not in str(text_or_path) and Path(str(text_or_path)).exists()
    ):
        source = str(text_or_path)
        text = Path(text_or_path).read_text()
    else:
        text = str(text_or_path)

    lines = text.splitlines()
    if not lines or lines[0].strip() != PROBLEM_HEADER:
        raise ParseError(f"expected header {PROBLEM_HEADER!r}", 1, source)

    n: int | None = None
    sense = "min"
    name = ""
    conjectured: float | None = None
    sections: list[tuple[str, dict, dict]] = []  # (kind, terms, term line numbers)
    current: dict | None = None
    current_lines: dict | None = None

    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if head == "name":
            name = line[len("name") :].strip()
        elif head == "n":
            if len(toks) != 2 or not toks[1].isdigit() or int(toks[1]) < 1:
                raise ParseError("n needs one positive integer", line_no, source)
            n = int(toks[1])
        elif head == "sense":
            if len(toks) != 2 or toks[1] not in ("min", "max"):
                raise ParseError("sense must be 'min' or 'max'", line_no, source)
            sense = toks[1]
        elif head == "conjectured":
            if len(toks) != 2:
                raise ParseError("conjectured needs one number", line_no, source)
            conjectured = _parse_float(toks[1], line_no, source)
        elif head in ("objective", "ineq", "eq"):
            if n is None:
                raise ParseError(f"'{head}' section before 'n'", line_no, source)
            current = {}
            current_lines = {}
            sections.append((head, current, current_lines))
        elif head == "term":
            if current is None:
                raise ParseError("term outside any section", line_no, source)
            if len(toks) != 5:
                raise ParseError(
                    "term needs: term <beta> <gamma> <re> <im>", line_no, source
                )
            beta = _parse_exps(toks[1], n, line_no, source)
            gamma = _parse_exps(toks[2], n, line_no, source)
            c = complex(
                _parse_float(toks[3], line_no, source),
                _parse_float(toks[4], line_no, source),
            )
            slot = (beta, gamma)
            current[slot] = current.get(slot, 0.0) + c
            current_lines.setdefault(slot, line_no)
        else:
            raise ParseError(f"unknown directive {head!r}", line_no, source)

    if n is None:
        raise ParseError("missing 'n' line", None, source)
    if not sections or sections[0][0] != "objective":
        raise ParseError("missing objective section", None, source)
    if sum(1 for kind, *_ in sections if kind == "objective") != 1:
        raise ParseError("exactly one objective section required", None, source)

    real_gate = hierarchy == "real"
    objective = None
    ineqs: list[CPoly] = []
    eqs: list[CPoly] = []
    for kind, terms, term_lines in sections:
        real_required = real_gate and kind in ("objective", "ineq")
        if kind == "objective":
            label = "objective"
        elif kind == "ineq":
            label = f"inequality {len(ineqs)}"
        else:
            label = f"equality {len(eqs)}"
        p = _check_section(label, terms, term_lines, n, source, real_required)
        if kind == "objective":
            objective = p
        elif kind == "ineq":
            ineqs.append(p)
        else:
            eqs.append(p)

    return CPOPInstance(
        n=n,
        objective=objective,
        ineqs=tuple(ineqs),
        eqs=tuple(eqs),
        sense=sense,
        name=name,
        conjectured_optimum=conjectured,
    )


# ---------------------------------------------------------------------------
# run reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportAtom:
    """One extracted atom with its recorded quality numbers."""

    weight: float
    point: tuple[complex, ...]
    objective: float
    violation: float


@dataclass
class RunReport:
    """Self-contained record of one relaxation run."""

    name: str
    hierarchy: str
    order: int
    sense: str
    status: str
    bound: float
    dual_bound: float
    iterations: int
    wall_time: float
    residuals: dict[str, float]
    block_names: tuple[str, ...]
    block_sizes: tuple[int, ...]
    problem_text: str
    moments: dict[MomentKey, complex]
    feasibility_min_eig: float | None = None
    feasibility_eq_violation: float | None = None
    flatness: tuple | None = None  # (flat, t, gap, ranks)
    extraction_method: str | None = None
    atoms: tuple[ReportAtom, ...] = ()
    extraction_error: str | None = None
    certificate_residual: float | None = None
    certificate_bound: float | None = None
    gram_blocks: tuple[np.ndarray, ...] | None = None
    multipliers: tuple | None = None  # CPoly (real/complex) or RPoly (rpop)
    message: str = ""


def atom_quality(inst: CPOPInstance, point) -> tuple[float, float]:
    """(objective value, worst constraint violation) of one candidate point."""
    pt = np.asarray(point, dtype=complex)
    obj = float(np.real(evaluate(inst.objective, pt)))
    viol = 0.0
    for g in inst.ineqs:
        viol = max(viol, max(0.0, -float(np.real(evaluate(g, pt)))))
    for h in inst.eqs:
        viol = max(viol, abs(complex(evaluate(h, pt))))
    return obj, viol


def _matrix_lines(M: np.ndarray) -> list[str]:
    out = []
    for row in np.atleast_2d(M):
        toks = []
        for v in row:
            v = complex(v)
            toks.append(_fmt(v.real))
            toks.append(_fmt(v.imag))
        out.append("row " + " ".join(toks))
    return out


def _multiplier_lines(mult) -> list[str]:
    if isinstance(mult, RPoly):
        return [
            f"rterm {_fmt_exps(e)} {_fmt(c)}" for e, c in mult.terms.items()
        ]
    return _poly_lines(mult)


def write_report(report: RunReport, path: str | Path | None = None) -> str:
    """Serialize a run report; optionally also write it to ``path``."""
    L = [REPORT_HEADER]
    L.append(f"name {report.name}")
    L.append(f"hierarchy {report.hierarchy}")
    L.append(f"order {report.order}")
    L.append(f"sense {report.sense}")
    L.append(f"status {report.status}")
    L.append(f"bound {_fmt(report.bound)}")
    if report.bound >= 0.0:
        L.append(f"sqrt-bound {_fmt(math.sqrt(report.bound))}")
    L.append(f"dual-bound {_fmt(report.dual_bound)}")
    L.append(f"iterations {report.iterations}")
    L.append(f"wall-time {_fmt(report.wall_time)}")
    for k in sorted(report.residuals):
        L.append(f"residual {k} {_fmt(report.residuals[k])}")
    for bname, side in zip(report.block_names, report.block_sizes):
        L.append(f"block {bname} {side}")
    if report.message:
        L.append(f"message {report.message.splitlines()[0]}")
    if report.feasibility_min_eig is not None:
        L.append(f"feasibility min-eig {_fmt(report.feasibility_min_eig)}")
    if report.feasibility_eq_violation is not None:
        L.append(f"feasibility eq-violation {_fmt(report.feasibility_eq_violation)}")
    if report.flatness is not None:
        flat, t, gap, ranks = report.flatness
        L.append(
            f"flatness {'flat' if flat else 'not-flat'} t {t if t is not None else '-'} "
            f"gap {gap} ranks {','.join(str(v) for v in ranks)}"
        )
    if report.extraction_method is not None:
        L.append(f"extraction {report.extraction_method}")
    if report.extraction_error is not None:
        L.append(f"extraction-error {report.extraction_error.splitlines()[0]}")
    for atom in report.atoms:
        coords = " ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in atom.point)
        L.append(
            f"atom {_fmt(atom.weight)} {coords} obj {_fmt(atom.objective)} "
            f"violation {_fmt(atom.violation)}"
        )
    if report.certificate_residual is not None:
        L.append(f"certificate residual {_fmt(report.certificate_residual)}")
        L.append(f"certificate bound {_fmt(report.certificate_bound)}")
        for bi, G in enumerate(report.gram_blocks):
            L.append(f"gram {bi} {G.shape[0]}")
            L.extend(_matrix_lines(G))
        for mi, mult in enumerate(report.multipliers or ()):
            L.append(f"multiplier {mi}")
            L.extend(_multiplier_lines(mult))
    L.append("problem")
    L.extend(report.problem_text.rstrip("\n").splitlines())
    L.append("moments")
    for key in sorted(report.moments, key=key_sort_index):
        v = complex(report.moments[key])
        L.append(
            f"{_fmt_exps(key.beta)} {_fmt_exps(key.gamma)} {_fmt(v.real)} {_fmt(v.imag)}"
        )
    L.append("end")
    text = "\n".join(L) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_report(text_or_path: str | Path) -> RunReport:
    """Parse a report produced by :func:`write_report`."""
    source = ""
    if isinstance(text_or_path, Path) or (
        "\n" not in str(text_or_path) and Path(str(text_or_path)).exists()
    ):
        source = str(text_or_path)
        text = Path(text_or_path).read_text()
    else:
        text = str(text_or_path)
    lines = text.splitlines()
    if not lines or lines[0].strip() != REPORT_HEADER:
        raise ParseError(f"expected header {REPORT_HEADER!r}", 1, source)

    fields: dict = {
        "residuals": {},
        "block_names": [],
        "block_sizes": [],
        "atoms": [],
        "moments": {},
        "flatness": None,
        "extraction_method": None,
        "extraction_error": None,
        "feasibility_min_eig": None,
        "feasibility_eq_violation": None,
        "certificate_residual": None,
        "certificate_bound": None,
        "message": "",
        "name": "",
    }
    grams: list[list[list[complex]]] = []
    gram_sides: list[int] = []
    multipliers: list[dict] = []
    mult_kind: list[str] = []
    problem_lines: list[str] = []
    mode = "header"
    n_vars: int | None = None

    def _cx(re_tok: str, im_tok: str, ln: int) -> complex:
        return complex(_parse_float(re_tok, ln, source), _parse_float(im_tok, ln, source))

    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip()
        if not line.strip():
            continue
        toks = line.split()
        head = toks[0]
        if mode == "problem":
            if head == "moments":
                mode = "moments"
                continue
            problem_lines.append(line)
            if head == "n":
                n_vars = int(toks[1])
            continue
        if mode == "moments":
            if head == "end":
                mode = "done"
                continue
            if len(toks) != 4:
                raise ParseError("moment line needs 4 fields", line_no, source)
            # moment keys live in the relaxation's ambient space, which for
            # the realified hierarchy has twice the problem arity
            beta = _parse_exps(toks[0], None, line_no, source)
            gamma = _parse_exps(toks[1], None, line_no, source)
            fields["moments"][MomentKey(beta, gamma)] = _cx(toks[2], toks[3], line_no)
            continue
        if head == "row":
            if not grams:
                raise ParseError("matrix row outside any gram block", line_no, source)
            vals = toks[1:]
            if len(vals) != 2 * gram_sides[-1]:
                raise ParseError("matrix row width mismatch", line_no, source)
            grams[-1].append(
                [_cx(vals[2 * i], vals[2 * i + 1], line_no) for i in range(gram_sides[-1])]
            )
            continue
        if head in ("term", "rterm"):
            if not multipliers:
                raise ParseError("multiplier term outside any multiplier", line_no, source)
            if head == "term":
                beta = tuple(int(v) for v in toks[1].split(","))
                gamma = tuple(int(v) for v in toks[2].split(","))
                multipliers[-1][(beta, gamma)] = _cx(toks[3], toks[4], line_no)
            else:
                expo = tuple(int(v) for v in toks[1].split(","))
                multipliers[-1][expo] = _parse_float(toks[2], line_no, source)
            continue
        if head == "name":
            fields["name"] = line[len("name") :].strip()
        elif head == "hierarchy":
            fields["hierarchy"] = toks[1]
        elif head == "order":
            fields["order"] = int(toks[1])
        elif head == "sense":
            fields["sense"] = toks[1]
        elif head == "status":
            fields["status"] = toks[1]
        elif head == "bound":
            fields["bound"] = _parse_float(toks[1], line_no, source)
        elif head == "sqrt-bound":
            pass  # derived from bound
        elif head == "dual-bound":
            fields["dual_bound"] = _parse_float(toks[1], line_no, source)
        elif head == "iterations":
            fields["iterations"] = int(toks[1])
        elif head == "wall-time":
            fields["wall_time"] = _parse_float(toks[1], line_no, source)
        elif head == "residual":
            fields["residuals"][toks[1]] = _parse_float(toks[2], line_no, source)
        elif head == "block":
            fields["block_names"].append(toks[1])
            fields["block_sizes"].append(int(toks[2]))
        elif head == "message":
            fields["message"] = line[len("message") :].strip()
        elif head == "feasibility":
            key = {"min-eig": "feasibility_min_eig", "eq-violation": "feasibility_eq_violation"}[toks[1]]
            fields[key] = _parse_float(toks[2], line_no, source)
        elif head == "flatness":
            flat = toks[1] == "flat"
            t = None if toks[3] == "-" else int(toks[3])
            gap = int(toks[5])
            ranks = tuple(int(v) for v in toks[7].split(","))
            fields["flatness"] = (flat, t, gap, ranks)
        elif head == "extraction":
            fields["extraction_method"] = toks[1]
        elif head == "extraction-error":
            fields["extraction_error"] = line[len("extraction-error") :].strip()
        elif head == "atom":
            obj_at = toks.index("obj")
            viol_at = toks.index("violation")
            w = _parse_float(toks[1], line_no, source)
            coord_toks = toks[2:obj_at]
            pt = tuple(
                _cx(coord_toks[2 * i], coord_toks[2 * i + 1], line_no)
                for i in range(len(coord_toks) // 2)
            )
            fields["atoms"].append(
                ReportAtom(
                    weight=w,
                    point=pt,
                    objective=_parse_float(toks[obj_at + 1], line_no, source),
                    violation=_parse_float(toks[viol_at + 1], line_no, source),
                )
            )
        elif head == "certificate":
            if toks[1] == "residual":
                fields["certificate_residual"] = _parse_float(toks[2], line_no, source)
            else:
                fields["certificate_bound"] = _parse_float(toks[2], line_no, source)
        elif head == "gram":
            gram_sides.append(int(toks[2]))
            grams.append([])
        elif head == "multiplier":
            multipliers.append({})
            mult_kind.append("pending")
        elif head == "problem":
            mode = "problem"
        else:
            raise ParseError(f"unknown report directive {head!r}", line_no, source)

    if mode != "done":
        raise ParseError("report not terminated by 'end'", None, source)

    problem_text = "\n".join(problem_lines) + "\n"
    gram_arrays = []
    for rows in grams:
        M = np.array(rows, dtype=complex)
        if np.abs(M.imag).max(initial=0.0) == 0.0:
            M = M.real
        gram_arrays.append(M)
    mults: list = []
    if multipliers:
        hierarchy = fields["hierarchy"]
        for d in multipliers:
            if hierarchy == "rpop":
                mults.append(RPoly(2 * n_vars, {e: float(np.real(c)) for e, c in d.items()}))
            else:
                mults.append(CPoly.from_terms(n_vars, d))

    return RunReport(
        name=fields["name"],
        hierarchy=fields["hierarchy"],
        order=fields["order"],
        sense=fields["sense"],
        status=fields["status"],
        bound=fields["bound"],
        dual_bound=fields["dual_bound"],
        iterations=fields["iterations"],
        wall_time=fields["wall_time"],
        residuals=fields["residuals"],
        block_names=tuple(fields["block_names"]),
        block_sizes=tuple(fields["block_sizes"]),
        problem_text=problem_text,
        moments=fields["moments"],
        feasibility_min_eig=fields["feasibility_min_eig"],
        feasibility_eq_violation=fields["feasibility_eq_violation"],
        flatness=fields["flatness"],
        extraction_method=fields["extraction_method"],
        atoms=tuple(fields["atoms"]),
        extraction_error=fields["extraction_error"],
        certificate_residual=fields["certificate_residual"],
        certificate_bound=fields["certificate_bound"],
        gram_blocks=tuple(gram_arrays) if gram_arrays else None,
        multipliers=tuple(mults) if mults else None,
        message=fields["message"],
    )


def build_report(prog, sol, extraction=None, certificate=None, extraction_error=None) -> RunReport:
    """Assemble a :class:`RunReport` from a solved relaxation."""
    from .sdpsolver import certify_feasibility

    inst = prog.instance
    residuals = {
        k: float(v)
        for k, v in sol.residuals.items()
        if isinstance(v, (int, float)) and math.isfinite(float(v))
    }
    feas_min_eig = feas_viol = None
    if sol.y:
        fr = certify_feasibility(prog, sol.y)
        feas_min_eig = min(fr.block_min_eigs, default=0.0)
        feas_viol = fr.max_equality_violation

    flatness = None
    method = None
    atoms: list[ReportAtom] = []
    if extraction is not None:
        flat = extraction.flatness
        flatness = (flat.flat, flat.t, flat.gap, flat.ranks)
        method = extraction.method
        for w, point in extraction.measure.atoms:
            obj, viol = atom_quality(inst, point)
            atoms.append(
                ReportAtom(weight=float(w), point=tuple(complex(z) for z in point),
                           objective=obj, violation=viol)
            )

    cert_resid = cert_bound = grams = mults = None
    if certificate is not None:
        cert_resid = certificate.residual_norm
        cert_bound = certificate.bound
        grams = certificate.gram_blocks
        mults = certificate.multipliers

    return RunReport(
        name=inst.name or prog.name,
        hierarchy=prog.hierarchy,
        order=prog.r,
        sense=inst.sense,
        status=sol.status,
        bound=float(sol.objective),
        dual_bound=float(sol.dual_objective),
        iterations=sol.iterations,
        wall_time=float(sol.wall_time),
        residuals=residuals,
        block_names=tuple(prog.block_names),
        block_sizes=tuple(prog.block_sizes()),
        problem_text=save_problem(inst),
        moments=dict(sol.y),
        feasibility_min_eig=feas_min_eig,
        feasibility_eq_violation=feas_viol,
        flatness=flatness,
        extraction_method=method,
        atoms=tuple(atoms),
        extraction_error=extraction_error,
        certificate_residual=cert_resid,
        certificate_bound=cert_bound,
        gram_blocks=grams,
        multipliers=mults,
        message=sol.message or "",
    )


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    recorded: float
    recomputed: float

    def ok(self, tol: float = 1e-9) -> bool:
        return abs(self.recorded - self.recomputed) <= tol


@dataclass(frozen=True)
class VerifyResult:
    checks: tuple[VerifyCheck, ...]

    def ok(self, tol: float = 1e-9) -> bool:
        return all(c.ok(tol) for c in self.checks)


def _certificate_identity_residual(report: RunReport, inst: CPOPInstance) -> float:
    """Max coefficient of f - bound - sigma_0 - sum sigma_i g_i - sum tau_i h_i,
    relative to the largest objective coefficient."""
    from .extraction import _cpoly_of_gram, _rpoly_of_gram
    from .relaxation import (
        build_complex_relaxation,
        build_real_relaxation,
        build_rpop_relaxation,
    )

    builder = {
        "real": build_real_relaxation,
        "complex": build_complex_relaxation,
        "rpop": build_rpop_relaxation,
    }[report.hierarchy]
    prog = builder(inst, report.order)
    sign = -1.0 if prog.negated else 1.0
    bound_internal = sign * report.certificate_bound

    if report.hierarchy == "rpop":
        image = to_real_pop(inst)
        m = image.m
        p = RPoly(m, {k: sign * v for k, v in image.objective.terms.items()})
        p = p - bound_internal
        p = p - _rpoly_of_gram(report.gram_blocks[0], prog.psd_blocks[0].basis, m)
        for gi, g in enumerate(image.ineqs, start=1):
            p = p - _rpoly_of_gram(report.gram_blocks[gi], prog.psd_blocks[gi].basis, m) * g
        for tau, h in zip(report.multipliers or (), image.eqs):
            p = p - tau * h
        resid = max((abs(v) for v in p.terms.values()), default=0.0)
        scale = max(
            1.0, max((abs(v) for v in image.objective.terms.values()), default=1.0)
        )
        return resid / scale

    n = inst.n
    p = inst.objective * sign - CPoly.constant(n, bound_internal)
    p = p - _cpoly_of_gram(report.gram_blocks[0], prog.psd_blocks[0].basis, n)
    for gi, g in enumerate(inst.ineqs, start=1):
        p = p - _cpoly_of_gram(report.gram_blocks[gi], prog.psd_blocks[gi].basis, n) * g
    for tau, h in zip(report.multipliers or (), inst.eqs):
        p = p - tau * h
    resid = max((abs(c) for c in p.terms.values()), default=0.0)
    return resid / max(1.0, inst.objective.max_abs_coeff())


def verify_report(report: RunReport) -> VerifyResult:
    """Recompute every recorded quality number from the report's own data."""
    from .relaxation import (
        build_complex_relaxation,
        build_real_relaxation,
        build_rpop_relaxation,
    )
    from .sdpsolver import certify_feasibility

    inst = load_problem(report.problem_text)
    checks: list[VerifyCheck] = []

    if report.feasibility_min_eig is not None:
        builder = {
            "real": build_real_relaxation,
            "complex": build_complex_relaxation,
            "rpop": build_rpop_relaxation,
        }[report.hierarchy]
        prog = builder(inst, report.order)
        fr = certify_feasibility(prog, report.moments)
        checks.append(
            VerifyCheck(
                "feasibility min-eig",
                report.feasibility_min_eig,
                min(fr.block_min_eigs, default=0.0),
            )
        )
        checks.append(
            VerifyCheck(
                "feasibility eq-violation",
                report.feasibility_eq_violation,
                fr.max_equality_violation,
            )
        )

    for i, atom in enumerate(report.atoms):
        obj, viol = atom_quality(inst, atom.point)
        checks.append(VerifyCheck(f"atom {i} objective", atom.objective, obj))
        checks.append(VerifyCheck(f"atom {i} violation", atom.violation, viol))

    if report.certificate_residual is not None:
        checks.append(
            VerifyCheck(
                "certificate residual",
                report.certificate_residual,
                _certificate_identity_residual(report, inst),
            )
        )

    return VerifyResult(checks=tuple(checks))
