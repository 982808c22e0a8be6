//! Criterion benchmarks for the decoder kernels; see `benches/`.
