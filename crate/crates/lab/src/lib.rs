//! Simulation harness for the secure-aggregation lab: transports, threaded
//! round orchestration, transcripts, cost reports, experiment specs and
//! the text reports behind the `secagg-lab` binary.

mod actors;
pub mod cli;
pub mod cost;
pub mod dropout;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod local;
pub mod report;
pub mod seeds;
pub mod transcript;
pub mod transport;
pub mod verify;

pub use cost::{CostPhase, CostReport};
pub use dropout::DropoutPlan;
pub use error::{LabError, LabResult};
pub use harness::{run_round, sweep, Pipeline, Protocol, RoundResult, RoundSpec};
pub use transcript::RoundTranscript;
pub use verify::{verify_round, verify_transcript, Violation};
