pub mod distort;
pub mod eval;
pub mod fixture;
pub mod ingest;
pub mod report;
pub mod split;
pub mod train;
