//! Exact voting-power analysis for weighted voting bodies.
//!
//! The crate computes Shapley-Shubik and Banzhaf power indices with exact
//! rational arithmetic, models the EU Council's dual-quota decision rule
//! (55% of members and 65% of the population, with the four-member
//! blocking-minority exception), and quantifies what a member's exit does
//! to everyone else's influence once the departed budget contribution is
//! priced in.
//!
//! Floating point is never used to decide anything: winning coalitions,
//! pivot counts, indices, budget ratios, and relative changes are all exact
//! rationals. Decimal strings appear only when tables are rendered.
//!
//! # Quick tour
//!
//! ```
//! use voting_power::data::builtin_dataset;
//! use voting_power::engine::shapley_shubik;
//! use num_rational::BigRational;
//!
//! let eec = builtin_dataset("eec1958")?;
//! let game = eec.game(&eec.codes(), voting_power::data::Year::Y2015, false, None)?;
//! let ss = shapley_shubik(&game)?;
//! // Luxembourg is a null player under the 1958 rule
//! assert_eq!(ss.get("LU"), Some(&BigRational::from_integer(0.into())));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod data;
pub mod engine;
pub mod game;
pub mod scenario;
pub mod table;

pub use data::{builtin_dataset, load_dataset, Dataset, MemberState, Year};
pub use engine::{banzhaf, banzhaf_scores, compute_index, shapley_shubik, IndexKind, PowerVector};
pub use game::{Coalition, QuotaRule, Threshold, VotingGame};
pub use scenario::{
    change_matrix, correction_ratio, exit_support_summary, BudgetModel, ChangeMatrix, ExitOptions,
    ExitScenario,
};

/// Every Rust snippet in the guide (`book/`) compiles and runs as a
/// doc-test of this crate, so the book cannot drift from the code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/indices.md")]
    mod indices {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/blocking.md")]
    mod blocking {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
