//! Real-discussion corpora: loading and cleaning, support classes, and the
//! in-degree power-law fit.

mod corpus;
mod powerlaw;

pub use corpus::{
    bin_by_support, load_corpus, write_corpus, CleaningReport, CorpusTree, FileError, LoadOptions, SupportBins,
    SupportClass,
};
pub use powerlaw::{fit_power_law, ks_distance, mle_alpha, PowerLawFit, ALPHA_RANGE, MIN_SAMPLES, MIN_TAIL};
