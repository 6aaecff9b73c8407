//! Streaming reconstruction of the joint detection distribution and its projections.

pub mod accumulator;
pub mod fft;
pub mod pipeline;
pub mod projection;
pub mod snapshot;

pub use accumulator::{
    CachedFrame, CountPair, Counts, JpdAccumulator, Layout, LayoutSpec, Mode, ProjectionSpec,
    DEFAULT_MEMORY_BUDGET,
};
pub use pipeline::{accumulate, accumulate_range, snapshot, sweep, FrameSource, Preprocessed, SpdfSource};
pub use projection::{
    mask_crosstalk, Conditional, ConditionalOptions, DenseJpd, Jpd, ProjectionImage, ProjectionKind,
};
pub use snapshot::Snapshot;
