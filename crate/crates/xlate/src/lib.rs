//! Process, filesystem and network side of the translation pipeline:
//! toolchain discovery, the compile-and-run sandbox, the HTTP model
//! backend, benchmark runs and report rendering.

pub mod drivers;
pub mod executor;
pub mod sandbox;
pub mod toolchain;
pub mod http;
pub mod bench;
pub mod report;
pub mod cli;
