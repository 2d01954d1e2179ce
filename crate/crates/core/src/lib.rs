//! Robust games with polytopal payoff uncertainty.
//!
//! Players choose scalar actions from intervals. Payoffs are affine in an
//! uncertain parameter vector ranging over a polytope scaled toward its
//! nominal point by a level `δ ∈ [0, 1]`. The crate computes worst-case
//! payoffs and best replies, robust-optimization equilibria, opportunity
//! costs of uncertainty, and continuation paths down to `δ = 0`.
//!
//! ```
//! use robgame::{find_roe, load_game, RoeOptions};
//!
//! let game = load_game(include_bytes!("../games/example1.json")).unwrap();
//! let roe = find_roe(&game, &RoeOptions::default()).unwrap();
//! assert_eq!(roe.equilibria.len(), 7);
//! ```

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod cournot;
pub mod equilibrium;
pub mod error;
pub mod expr;
pub mod game;
pub mod optimize;
pub mod polytope;
pub mod report;
pub mod sample;
pub mod validate;
pub mod worstcase;

pub use continuation::{
    cost_continuity_probe, delta_grid, sweep_delta, trace_equilibrium, PathReport, PathStatus, PathStep,
    TraceOptions,
};
pub use equilibrium::{
    cost_upper_bound, embed_epsilon_nash, epsilon_of_roe, find_roe, opportunity_cost, verify_epsilon_nash,
    verify_roe, EmbeddingCertificate, EquilibriumReport, RoeKind, RoeOptions, RoeSearch,
};
pub use error::{Error, GameError, Result};
pub use expr::{parse_expression, ExprError, Expression};
pub use game::{load_game, ActionInterval, Coefficient, Game, PayoffForm, PayoffTerm, Player};
pub use polytope::{hull_membership, scale_uncertainty, ScaledVertexSet, UncertaintyPolytope};
pub use validate::{is_strictly_concave, validate_assumptions, Finding, FindingKind, Severity};
pub use worstcase::{
    best_reply_corner, best_reply_maximin, best_reply_maximin_with, worst_case_frontier, worst_case_payoff,
    FrontierReport, ReplyOptions, WorstCase, WorstCaseProblem,
};
