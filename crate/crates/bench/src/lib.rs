//! Criterion benchmarks for the solver and rounding stages live in `benches/`.
