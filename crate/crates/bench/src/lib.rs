//! Benchmarks for `bmo-core`; see `benches/`.
