//! Fault-tolerant encoded computation on binary linear codes: build it,
//! verify it, attack it.
//!
//! The library centers on one question — how a code's ability to support
//! constant-depth encoded gates trades off against its rate and distance —
//! and provides the machinery on both sides of it:
//!
//! - [`f2core`]: bit-exact F2 linear algebra, encoding, brute-force
//!   distance, and the ideal erasure decoder;
//! - [`locality`]: repair vectors, greedy disjoint repair-group extraction,
//!   (q, r) certificates, the rate-bound audit, and the pipeline that
//!   recovers locality from a working gadget;
//! - [`circuit`]: layered fan-in-2 netlists, evaluation over {0, 1, erased},
//!   erasure propagation in blanket and dataflow modes, influence sets;
//! - [`gadgets`]: the explicit encoded CNOT built from repair groups, the
//!   doubled gadget, robustness thresholds and certification sweeps;
//! - [`adversary`]: vertex-cover, exhaustive and random erasure attacks,
//!   all replayable;
//! - [`zoo`]: repetition, Hadamard and first-order Reed-Muller fixtures;
//! - [`harness`]: compilation of sparse ideal circuits into per-step
//!   gadgets and simulation against an adversary schedule.
//!
//! Every index in the Rust API is 0-based; all serialized formats (JSON,
//! netlist text, erasure words, the CLI) are 1-based.
//!
//! The `examples/` directory holds one runnable walk-through per
//! capability; start with `encode_and_decode` and `build_encoded_cnot`.

pub mod adversary;
pub mod circuit;
pub mod error;
pub mod f2core;
pub mod gadgets;
pub mod harness;
pub mod locality;
pub mod zoo;

pub use adversary::{AttackResult, Strategy};
pub use circuit::{EvalMode, Gate, InfluenceSet, Netlist};
pub use error::{Error, Result};
pub use f2core::{
    erase, ideal_decode, BitVector, CodeJson, DecodeOutcome, ErasureWord, LinearCode, Symbol,
};
pub use gadgets::{
    build_doubled, build_encoded_cnot, certify_robust, robustness_threshold, verify_encodes,
    CertifyOptions, EncodedCnot, GadgetBundle, GadgetReport, Rational,
};
pub use harness::{compile, run, AdversarySchedule, ScheduleStep, SimulationReport, SparseCircuit};
pub use locality::{
    enumerate_repair_vectors, extract_certificate, extract_disjoint_groups,
    extract_locality_from_gadget, rate_bound_report, screen_weight_one, verify_repair_vector,
    LocalityCertificate, RepairGroupSet, RepairVector,
};
pub use zoo::Family;
