//! Secrecy precoding for one slot: lifted variables, a rank-one penalty and
//! d.c. iterations over log-barrier convex subproblems.

mod dc;
mod herm;
mod lifted;
mod subproblem;

pub use dc::{dc_surrogate, s2dc_solve, write_diagnostics, Block, DcIterate, DcProblem, S2dcOutcome, SECRECY_SLACK};
pub use herm::{herm_eigen, quad_coeffs, trace_coeffs, Herm, HermEigen};
pub use lifted::{
    enumerate_triples, extract_rank_one, f_tilde_terms, lift, linearized_lambda, phi_terms, FTilde, LiftedUav,
    LiftedVars, PhiTerms, Triple,
};
pub use subproblem::{
    solve_subproblem, AffineForm, BarrierSettings, Budget, ConcavePiece, ConvexSubproblem, LogTerm,
    SubproblemSolution,
};

/// `tr X − λ_max X`.
pub fn rank_one_gap(x: &Herm) -> f64 {
    x.rank_one_gap()
}
