//! Criterion micro-benchmarks live in `benches/kernels.rs`; this crate has
//! no library code of its own.
