//! Explicit algebra behind odd-primary nonrealization results for unstable
//! modules: the Steenrod algebra with Adem rewriting, unstable modules and
//! the modules Φ(k, ℓ), a formal calculus of dual Dyer-Lashof and Browder
//! operations, E_1-page degree bookkeeping, and certificates that replay the
//! inequality skeleton of the nonrealization arguments.

pub mod error;
pub mod fp;
pub mod interval;
pub mod linalg;
pub mod opcalc;
pub mod phi;
pub mod realize;
pub mod ssq;
pub mod steenrod;
pub mod unstable;

pub use error::{Error, Result};
pub use fp::{binom_mod_p, CoeffTables, FpScalar, Prime};
