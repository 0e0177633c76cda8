//! Two-sample testing of text corpora: file formats, parallel runners,
//! reports and the `textsplit` command line built on [`textsplit_core`].

pub mod cli;
pub mod corpus_io;
pub mod model_io;
pub mod report;
pub mod runner;
