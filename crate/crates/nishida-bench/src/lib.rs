//! Criterion benchmarks for the nishida library live in `benches/`.
