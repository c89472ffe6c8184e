"""cpolyopt: moment relaxations for complex polynomial optimization.

Builds real and complex moment-HSOS relaxations of polynomial problems in
complex variables, solves the resulting SDPs with a dense interior-point
method, detects finite convergence through moment-matrix rank conditions, and
extracts globally optimal solutions.
"""

from __future__ import annotations

from .basis import MonomialBasis, basis_size, monomials_upto
from .extraction import (
    Certificate,
    ExtractionError,
    ExtractionResult,
    FlatnessReport,
    check_flatness,
    check_hyponormality,
    extract_solution,
    numerical_rank,
    recover_certificate,
    symmetrize_moments,
)
from .fileio import (
    ParseError,
    ReportAtom,
    RunReport,
    VerifyCheck,
    VerifyResult,
    build_report,
    load_problem,
    read_report,
    save_problem,
    verify_report,
    write_report,
)
from .moments import (
    AtomicMeasure,
    MomentKey,
    Term,
    canonical_key,
    instantiate,
    moments_of_measure,
)
from .polynomials import (
    CPOPInstance,
    CPoly,
    DegreeStats,
    ExponentPair,
    RPOPInstance,
    RPoly,
    conjugate,
    degree_stats,
    evaluate,
    is_self_conjugate,
    phase_invariance_lattice,
    to_real_pop,
)
from .presolve import CompiledSDP, compile_program
from .problems import (
    BENCHMARKS,
    BenchmarkFamily,
    local_optimum,
    local_upper_bound,
    mordell,
    polyphase_energy,
    polyphase_peak,
    random_quadratic,
    random_quartic,
    smale,
)
from .relaxation import (
    ComplexityStats,
    LMIProgram,
    build_complex_relaxation,
    build_real_relaxation,
    build_rpop_relaxation,
    complexity_stats,
)
from .sdpsolver import (
    FeasibilityReport,
    SDPSolution,
    certify_feasibility,
    dump_compiled,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "BENCHMARKS",
    "BenchmarkFamily",
    "CPOPInstance",
    "CPoly",
    "Certificate",
    "CompiledSDP",
    "ComplexityStats",
    "DegreeStats",
    "ExponentPair",
    "ExtractionError",
    "ExtractionResult",
    "FeasibilityReport",
    "FlatnessReport",
    "LMIProgram",
    "MomentKey",
    "MonomialBasis",
    "ParseError",
    "RPOPInstance",
    "RPoly",
    "ReportAtom",
    "RunReport",
    "SDPSolution",
    "Term",
    "VerifyCheck",
    "VerifyResult",
    "basis_size",
    "build_complex_relaxation",
    "build_real_relaxation",
    "build_report",
    "build_rpop_relaxation",
    "canonical_key",
    "certify_feasibility",
    "check_flatness",
    "check_hyponormality",
    "compile_program",
    "complexity_stats",
    "conjugate",
    "degree_stats",
    "dump_compiled",
    "evaluate",
    "extract_solution",
    "instantiate",
    "is_self_conjugate",
    "load_problem",
    "local_optimum",
    "local_upper_bound",
    "moments_of_measure",
    "monomials_upto",
    "mordell",
    "numerical_rank",
    "phase_invariance_lattice",
    "polyphase_energy",
    "polyphase_peak",
    "random_quadratic",
    "random_quartic",
    "read_report",
    "recover_certificate",
    "save_problem",
    "smale",
    "solve",
    "symmetrize_moments",
    "to_real_pop",
    "verify_report",
    "write_report",
    "__version__",
]
