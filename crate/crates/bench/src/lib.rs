//! Criterion benchmarks for the solvers and diagnostics live in `benches/`.
