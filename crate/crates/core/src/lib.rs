//! Numerical computation in the full Fock space over an `n`-letter alphabet
//! and its algebra of bounded left multipliers.
//!
//! Elements are sparse coefficient maps on words ([`FreePoly`]), optionally
//! carrying an `l2` tail bound ([`TruncatedSeries`]). Multiplier norms are
//! estimated from below on finite sections ([`opnorm`]); [`factor`] handles
//! inner/outer questions, [`codim1`] the eigenvector family of the
//! backward shifts, and [`vncheck`] random row contractions.

pub mod catalog;
pub mod codim1;
pub mod error;
pub mod factor;
pub mod freepoly;
pub mod linalg;
pub mod opnorm;
pub mod vncheck;
pub mod word;

pub use error::{FockError, Result};
pub use freepoly::{FreePoly, TruncatedSeries};
pub use num_complex::Complex64;
pub use word::Word;
