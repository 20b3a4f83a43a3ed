pub mod analysis;
pub mod channel;
pub mod error;
pub mod musmdp;
pub mod qa;
pub mod rb;
pub mod schedulers;
pub mod sim;
pub mod sparse;
pub mod video;

pub use error::{ModelError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/video.md")]
    mod video {}
    #[doc = include_str!("../../../book/src/quality-adaptation.md")]
    mod quality_adaptation {}
    #[doc = include_str!("../../../book/src/relaxation.md")]
    mod relaxation {}
    #[doc = include_str!("../../../book/src/joint-model.md")]
    mod joint_model {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
    #[doc = include_str!("../../../book/src/load-analysis.md")]
    mod load_analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
