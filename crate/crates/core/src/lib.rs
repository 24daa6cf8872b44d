pub mod bath;
pub mod config;
pub mod drive;
pub mod error;
pub mod heom;
pub mod math;
pub mod output;
pub mod phase_space;
pub mod run;
pub mod validate;

pub use error::{Error, Result};

/// The guide's code blocks run as doctests so they cannot drift from the API.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/drive.md")]
    struct Drive;
    #[doc = include_str!("../../../book/src/bath.md")]
    struct Bath;
    #[doc = include_str!("../../../book/src/heom.md")]
    struct Heom;
    #[doc = include_str!("../../../book/src/phase-space.md")]
    struct PhaseSpace;
    #[doc = include_str!("../../../book/src/runs.md")]
    struct Runs;
    #[doc = include_str!("../../../book/src/validation.md")]
    struct Validation;
}
