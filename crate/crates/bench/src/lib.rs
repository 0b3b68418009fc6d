//! Criterion benchmarks for the stream engine, the monitors and the lidar model.
