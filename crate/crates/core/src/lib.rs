pub mod error;
pub mod farfield;
pub mod forward;
pub mod linalg;
pub mod localized;
pub mod medium;
pub mod monotonicity;
pub mod specfun;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/media.md")]
    pub struct Media;
    #[doc = include_str!("../../../book/src/forward.md")]
    pub struct Forward;
    #[doc = include_str!("../../../book/src/farfield.md")]
    pub struct FarField;
    #[doc = include_str!("../../../book/src/monotonicity.md")]
    pub struct Monotonicity;
    #[doc = include_str!("../../../book/src/identities.md")]
    pub struct Identities;
    #[doc = include_str!("../../../book/src/localized.md")]
    pub struct Localized;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
    #[doc = include_str!("../../../book/src/behavior.md")]
    pub struct Behavior;
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;
