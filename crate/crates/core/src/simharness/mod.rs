//! Synthetic users, trial scoring, trace record/replay and interval sweeps.
//!
//! All time here is virtual: milliseconds counted by the driver, never read
//! from a clock.

mod driver;
mod sweep;
mod synth;
mod trace;
mod user;

pub use driver::{TrialDriver, TrialResult, TrialSpec, Verdict, VerdictKind, DEFAULT_RETRY_CYCLES};
pub use sweep::{sweep, target_for_trial, trial_seed, write_csv, SweepRow};
pub use synth::{synthesize_samples, SynthParams};
pub use trace::{
    config_hash, read_trace, record_trace, replay_blinks, replay_trace, write_trace, BlinkTrace,
    RecordKind, TraceError, TraceRecord, TraceTask,
};
pub use user::{run_script, run_trial, UserModel};
