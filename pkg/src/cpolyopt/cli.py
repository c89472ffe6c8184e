"""Command-line interface: solve problem files, run benchmark families,
print relaxation size tables, and re-verify emitted reports.

Exit codes: 0 success/optimal, 2 bad usage, 3 problem/report parse error,
4 solver did not converge, 5 infeasibility suspected, 6 extraction failed,
7 report verification mismatch.
"""

from __future__ import annotations

import os
import sys

import click

from .extraction import ExtractionError, extract_solution, recover_certificate
from .fileio import (
    ParseError,
    build_report,
    load_problem,
    read_report,
    save_problem,
    verify_report,
    write_report,
)
from .problems import BENCHMARKS, local_upper_bound
from .relaxation import (
    build_complex_relaxation,
    build_real_relaxation,
    build_rpop_relaxation,
    complexity_stats,
)
from .sdpsolver import INFEASIBLE, OPTIMAL, dump_compiled, solve

EXIT_PARSE = 3
EXIT_SOLVER = 4
EXIT_INFEASIBLE = 5
EXIT_EXTRACTION = 6
EXIT_VERIFY = 7

_BUILDERS = {
    "real": build_real_relaxation,
    "complex": build_complex_relaxation,
    "rpop": build_rpop_relaxation,
}


def _g(x: float) -> str:
    return f"{float(x):.17g}"


def _default_tol(tol: float | None) -> float:
    if tol is not None:
        return tol
    env = os.environ.get("CPOLYOPT_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            raise click.UsageError(f"CPOLYOPT_TOL={env!r} is not a number")
    return 1e-8


def _status_exit(status: str) -> int:
    if status == OPTIMAL:
        return 0
    if status == INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_SOLVER


def _run_instance(
    inst,
    hierarchy: str,
    order: int,
    tol: float,
    max_iter: int,
    extract: bool,
    report_path: str | None,
    dump_path: str | None,
    symmetry_reduction: bool,
    verbose: bool,
    sqrt_scale: bool,
) -> int:
    prog = _BUILDERS[hierarchy](inst, order)
    if dump_path:
        from .presolve import compile_program

        dump_compiled(compile_program(prog, symmetry_reduction=symmetry_reduction), dump_path)
        click.echo(f"wrote SDP dump to {dump_path}")

    sol = solve(
        prog,
        tol=tol,
        max_iter=max_iter,
        symmetry_reduction=symmetry_reduction,
        verbose=verbose,
    )

    click.echo(f"instance     {inst.name or '(unnamed)'}")
    click.echo(f"hierarchy    {hierarchy}  order {order}  sense {inst.sense}")
    click.echo(
        "blocks       "
        + "  ".join(f"{nm}:{sz}" for nm, sz in zip(prog.block_names, prog.block_sizes()))
    )
    click.echo(f"status       {sol.status}  ({sol.iterations} iterations, {sol.wall_time:.2f}s)")
    click.echo(f"bound        {_g(sol.objective)}")
    if sol.objective >= 0.0:
        click.echo(f"sqrt(bound)  {_g(sol.objective ** 0.5)}" + ("  <- table scale" if sqrt_scale else ""))
    click.echo(f"dual bound   {_g(sol.dual_objective)}")
    for k in ("primal", "dual", "gap"):
        if k in sol.residuals:
            click.echo(f"residual {k:6s} {_g(sol.residuals[k])}")
    if inst.conjectured_optimum is not None:
        click.echo(f"conjectured  {_g(inst.conjectured_optimum)}")
    ub = local_upper_bound(inst)
    if ub is not None:
        val = ub ** 0.5 if sqrt_scale and ub >= 0 else ub
        label = "upper" if inst.sense == "min" else "lower"
        note = " (sqrt scale)" if sqrt_scale else ""
        click.echo(f"local {label} bound{note} {_g(val)}")

    extraction = None
    extraction_error = None
    certificate = None
    code = _status_exit(sol.status)

    if sol.converged:
        try:
            certificate = recover_certificate(prog, sol)
            click.echo(f"certificate  residual {_g(certificate.residual_norm)}")
        except Exception as exc:  # pragma: no cover - recovery is best-effort
            click.echo(f"certificate  not recovered ({exc})")

    if extract:
        if not sol.converged:
            extraction_error = f"solver status {sol.status}; no moment matrix to extract from"
            click.echo(f"extraction   skipped: {extraction_error}")
            code = code or EXIT_EXTRACTION
        else:
            try:
                extraction = extract_solution(prog, sol.y)
                flat = extraction.flatness
                click.echo(
                    f"extraction   {extraction.method}; ranks {flat.ranks}"
                    + (f", flat at t={flat.t}" if flat.flat else "")
                )
                for (w, point), obj in zip(
                    extraction.measure.atoms, extraction.atom_objectives
                ):
                    coords = ", ".join(
                        f"{z.real:+.6f}{z.imag:+.6f}i" for z in map(complex, point)
                    )
                    click.echo(f"  atom w={w:.6f}  ({coords})  objective {_g(obj)}")
                click.echo(
                    f"  max constraint violation {_g(extraction.max_constraint_violation)}"
                )
            except ExtractionError as exc:
                extraction_error = str(exc)
                click.echo(f"extraction   failed: {exc}")
                code = code or EXIT_EXTRACTION

    if report_path:
        report = build_report(prog, sol, extraction, certificate, extraction_error)
        write_report(report, report_path)
        click.echo(f"wrote report to {report_path}")

    return code


@click.group()
def main() -> None:
    """Hermitian moment-SOS relaxations for complex polynomial optimization."""


@main.command("solve")
@click.argument("file", type=str)
@click.option("--order", "-r", type=int, required=True, help="Relaxation order.")
@click.option(
    "--hierarchy",
    type=click.Choice(["real", "complex", "rpop"]),
    default="real",
    show_default=True,
    help="real = real-coefficient Hermitian hierarchy; complex = full complex "
    "moment hierarchy; rpop = classical hierarchy on the realified problem.",
)
@click.option("--tol", type=float, default=None, help="Solver tolerance (or env CPOLYOPT_TOL).")
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--extract", is_flag=True, help="Attempt atomic-measure extraction.")
@click.option("--report", "report_path", type=click.Path(), help="Write a self-contained run report.")
@click.option("--dump-sdp", "dump_path", type=click.Path(), help="Write the compiled SDP as plain text.")
@click.option("--no-symmetry-reduction", is_flag=True, help="Skip the phase-symmetry presolve.")
@click.option("--verbose", "-v", is_flag=True)
def solve_cmd(file, order, hierarchy, tol, max_iter, extract, report_path, dump_path,
              no_symmetry_reduction, verbose):
    """Solve a problem file at the given relaxation order."""
    try:
        inst = load_problem(file, hierarchy=hierarchy)
    except FileNotFoundError:
        click.echo(f"error: no such file {file!r}", err=True)
        sys.exit(EXIT_PARSE)
    except (ParseError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    code = _run_instance(
        inst, hierarchy, order, _default_tol(tol), max_iter, extract,
        report_path, dump_path, not no_symmetry_reduction, verbose, sqrt_scale=False,
    )
    sys.exit(code)


@main.command("bench")
@click.argument("family", type=click.Choice(sorted(BENCHMARKS)))
@click.option("--n", type=int, required=True, help="Problem size.")
@click.option("--order", "-r", type=int, default=None, help="Relaxation order (family default otherwise).")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized families.")
@click.option(
    "--hierarchy",
    type=click.Choice(["real", "complex", "rpop"]),
    default="real",
    show_default=True,
)
@click.option("--tol", type=float, default=None)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--extract", is_flag=True, help="Attempt atomic-measure extraction.")
@click.option("--report", "report_path", type=click.Path())
@click.option("--dump-sdp", "dump_path", type=click.Path())
@click.option("--no-symmetry-reduction", is_flag=True)
@click.option("--verbose", "-v", is_flag=True)
def bench_cmd(family, n, order, seed, hierarchy, tol, max_iter, extract, report_path,
              dump_path, no_symmetry_reduction, verbose):
    """Generate a benchmark instance, solve it, and report the bound."""
    fam = BENCHMARKS[family]
    try:
        inst = fam.build(n, seed=seed) if fam.needs_seed else fam.build(n)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    r = order if order is not None else fam.default_order
    ref = fam.reference.get((n, r))
    if ref is not None:
        click.echo(f"published bound ({'sqrt scale' if fam.report_sqrt else 'raw'}): {ref}")
    code = _run_instance(
        inst, hierarchy, r, _default_tol(tol), max_iter, extract,
        report_path, dump_path, not no_symmetry_reduction, verbose,
        sqrt_scale=fam.report_sqrt,
    )
    sys.exit(code)


@main.command("gen")
@click.argument("family", type=click.Choice(sorted(BENCHMARKS)))
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "-o", type=click.Path(), default=None, help="Output path (stdout otherwise).")
def gen_cmd(family, n, seed, out):
    """Write a benchmark instance as a problem file."""
    fam = BENCHMARKS[family]
    try:
        inst = fam.build(n, seed=seed) if fam.needs_seed else fam.build(n)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    text = save_problem(inst, out)
    if out:
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command("stats")
@click.option("--n", type=int, required=True, help="Number of complex variables.")
@click.option("--order", "-r", type=int, required=True, help="Relaxation order.")
def stats_cmd(n, order):
    """Print SDP block sizes and scalar-variable counts for each hierarchy."""
    st = complexity_stats(n, order)
    click.echo(f"n={n} order={order}")
    click.echo(f"{'hierarchy':10s} {'block side':>12s} {'scalars':>16s}")
    for label, (side, scalars) in (
        ("R-HSOS", st.real_hsos),
        ("C-HSOS", st.complex_hsos),
        ("R-SOS", st.real_sos),
    ):
        click.echo(f"{label:10s} {side:12d} {scalars:16d}")


@main.command("verify")
@click.argument("report", type=str)
@click.option("--tol", type=float, default=1e-9, show_default=True,
              help="Allowed drift between recorded and recomputed values.")
def verify_cmd(report, tol):
    """Re-check a run report's recorded numbers without re-solving."""
    try:
        rep = read_report(report)
    except FileNotFoundError:
        click.echo(f"error: no such file {report!r}", err=True)
        sys.exit(EXIT_PARSE)
    except (ParseError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    result = verify_report(rep)
    if not result.checks:
        click.echo("report holds no verifiable records (no moments, atoms, or certificate)")
        sys.exit(EXIT_VERIFY)
    ok = True
    for c in result.checks:
        good = c.ok(tol)
        ok = ok and good
        click.echo(
            f"{'ok  ' if good else 'FAIL'} {c.name:28s} recorded {_g(c.recorded)} "
            f"recomputed {_g(c.recomputed)} |delta| {_g(abs(c.recorded - c.recomputed))}"
        )
    click.echo("verification " + ("passed" if ok else "FAILED"))
    sys.exit(0 if ok else EXIT_VERIFY)


if __name__ == "__main__":
    main()
