//! Criterion benchmarks for the simulator hot paths live in `benches/`; run them with `cargo bench -p emt-bench`.
