//! Criterion benchmarks for the interpnorm kernels; see `benches/`.
