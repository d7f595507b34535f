//! Criterion benchmarks for the `icdqn` kernels live in `benches/`.
