//! Criterion benchmarks for potkit; see `benches/`.
