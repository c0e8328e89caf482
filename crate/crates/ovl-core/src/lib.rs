//! Compiler, sizer and simulator for memory-based FSM overlay
//! architectures.
//!
//! An overlay implements a finite-state machine entirely out of block RAMs,
//! so a new machine means rewriting RAM contents instead of rebuilding a
//! bitstream. This crate models four such organizations (`one`, `two`,
//! `three` and `mram`), sizes them, tailors instances to machines, compiles
//! KISS2 machines into RAM images, and verifies the result against a
//! reference interpreter — exhaustively or by seeded random walks.
//!
//! The pipeline, in dependency order:
//!
//! 1. [`kiss`] parses KISS2 text into [`fsm::FsmIr`].
//! 2. [`fsm::canonicalize`] checks cubes and fills default transitions.
//! 3. [`profile::profile`] extracts effective inputs and transition codes.
//! 4. [`arch`] sizes instances; [`tailor`] produces minimal ones.
//! 5. [`mapper::map`] fills the RAM sections; [`format`] reads and writes
//!    the textual bitstream form.
//! 6. [`sim::OverlaySim`] executes bitstreams; [`sim::verify_equivalence`]
//!    compares them against the reference interpreter.
//! 7. [`report`] builds the area / timing comparison tables.
//!
//! The `parallel` feature (default-on) runs the exhaustive verification
//! scan and the multi-machine report sweep on rayon; without it the same
//! code paths run sequentially.

pub mod arch;
pub mod error;
pub mod format;
pub mod fsm;
pub mod kiss;
pub mod mapper;
pub mod profile;
pub mod report;
pub mod sim;
pub mod tailor;

pub use arch::{
    clog2, emit_instance, hostable, parse_instance, ram_shapes, total_bits, Arch, InstanceSpec,
    RamShape, SteSpec,
};
pub use error::{Error, Result};
pub use fsm::{canonicalize, CanonicalFsm, Cube, FsmIr, Ternary, Trace, TraceRecord};
pub use format::{read_bitstream, read_bitstream_with_cap, write_bitstream};
pub use mapper::{assign_states, map, Assignment, Bitstream, Section, DEFAULT_BIT_CAP};
pub use profile::{profile, FsmProfile, StateProfile, TransitionCode};
pub use report::{area_table, timing_report, AreaTable, TimingTable};
pub use sim::{
    parse_stimulus, render_trace_csv, render_trace_text, verify_equivalence, Counterexample,
    OverlaySim, Strategy, Verdict,
};
pub use tailor::{envelope, optimize_stes, tailor_multi, tailor_single};
