//! Host-time benchmark harness for the capvm workspace. The measurable
//! entry points live in the `capvm` crate; see `benches/interpreter.rs`.

pub use capvm;
