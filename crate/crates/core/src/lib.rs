#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod almostauto;
pub mod biomodel;
pub mod convolution;
pub mod dichotomy;
pub mod error;
pub mod linsys;
pub mod signal;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/signals.md")]
    struct Signals;
    #[doc = include_str!("../../../book/src/dichotomy.md")]
    struct Dichotomy;
    #[doc = include_str!("../../../book/src/almost-automorphy.md")]
    struct AlmostAutomorphy;
    #[doc = include_str!("../../../book/src/convolution.md")]
    struct Convolution;
    #[doc = include_str!("../../../book/src/delay-model.md")]
    struct DelayModel;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
