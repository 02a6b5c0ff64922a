//! Criterion benchmarks for `klx-core`; see `benches/`.
