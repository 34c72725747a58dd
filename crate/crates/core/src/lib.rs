//! Double controlled cone metric spaces over finite-dimensional ordered
//! vector spaces.
//!
//! * [`ordered_space`] — cones, the induced order, norms and normality.
//! * [`spaces`] — the concrete metric spaces and self-maps.
//! * [`verification`] — falsification of the metric axioms with witnesses.
//! * [`contraction`] — fitting Banach, Kannan and Reich constants.
//! * [`solver`] — Picard iteration and audits of the fixed-point hypotheses.
//! * [`cli`] — the `conemetric` command-line frontend.

pub mod cli;
pub mod contraction;
pub mod error;
pub mod ordered_space;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod spaces;
pub mod verification;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ordered-spaces.md")]
    mod ordered_spaces {}
    #[doc = include_str!("../../../book/src/controlled-metrics.md")]
    mod controlled_metrics {}
    #[doc = include_str!("../../../book/src/falsification.md")]
    mod falsification {}
    #[doc = include_str!("../../../book/src/contractions.md")]
    mod contractions {}
    #[doc = include_str!("../../../book/src/picard.md")]
    mod picard {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
