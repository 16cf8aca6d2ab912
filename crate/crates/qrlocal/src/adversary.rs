//! Searches for small erasure sets that defeat gadgets.
//!
//! Strategies, in the order the `attack` driver runs them: the vertex-cover
//! attack (erase every position covered by the repair-group matching, so
//! every inference is voided at once), exhaustive search by ascending
//! weight, and seeded random search. Every `found` result replays through
//! the same trial path that certification uses, so there are no false
//! positives by construction.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::EvalMode;
use crate::error::{Error, Result};
use crate::f2core::BitVector;
use crate::gadgets::{
    binomial, message_from_bits, robustness_threshold, run_erasure_trial, EncodedCnot, FailureKind,
};
use crate::locality::RepairGroupSet;

/// Exhaustive attack budget: erasure sets times messages.
pub const EXHAUSTIVE_ATTACK_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    VertexCover,
    Random,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::VertexCover => "vertex-cover",
            Strategy::Random => "random",
        })
    }
}

/// Outcome of one attack run. When `found` is set, replaying `(message,
/// erasure)` through the certification trial reproduces the failure.
/// `out_of_budget` marks a vertex-cover result whose erasure set is too
/// large to say anything about robustness (|E| >= d): the decode may well
/// fail, but erasing a distance's worth of positions defeats any code.
#[derive(Clone, Debug)]
pub struct AttackResult {
    pub found: bool,
    pub strategy: Strategy,
    pub erasure: Vec<usize>,
    pub message: Option<BitVector>,
    pub failure_kind: Option<FailureKind>,
    pub out_of_budget: bool,
    pub trials_used: Option<u64>,
}

impl AttackResult {
    fn not_found(strategy: Strategy) -> Self {
        AttackResult {
            found: false,
            strategy,
            erasure: Vec::new(),
            message: None,
            failure_kind: None,
            out_of_budget: false,
            trials_used: None,
        }
    }

    pub fn to_json(&self, replay: Option<String>) -> AttackReportJson {
        AttackReportJson {
            found: self.found,
            strategy: self.strategy,
            erasure: self.erasure.iter().map(|p| p + 1).collect(),
            message: self.message.as_ref().map(|m| m.to_bitstring()),
            failure_kind: self.failure_kind.map(|k| k.to_string()),
            out_of_budget: self.out_of_budget,
            trials_used: self.trials_used,
            replay,
        }
    }
}

/// Attack report JSON; `replay` carries a command line that reproduces the
/// witness. Positions 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackReportJson {
    pub found: bool,
    pub strategy: Strategy,
    pub erasure: Vec<usize>,
    pub message: Option<String>,
    pub failure_kind: Option<String>,
    pub out_of_budget: bool,
    pub trials_used: Option<u64>,
    pub replay: Option<String>,
}

/// Re-runs a found witness through the certification trial; true iff the
/// recorded failure reproduces.
pub fn replay(gadget: &EncodedCnot, result: &AttackResult, mode: EvalMode) -> Result<bool> {
    if !result.found {
        return Ok(false);
    }
    let message = result
        .message
        .clone()
        .unwrap_or_else(|| BitVector::zeros(gadget.code().k()));
    let erased: BTreeSet<usize> = result.erasure.iter().copied().collect();
    let trial = run_erasure_trial(gadget, &message, &erased, mode)?;
    Ok(trial.failure == result.failure_kind && result.failure_kind.is_some())
}

/// Scans erasure sets by ascending (weight, support), and messages in
/// ascending order inside each set; returns the first failure.
pub fn attack_exhaustive(
    gadget: &EncodedCnot,
    max_weight: usize,
    mode: EvalMode,
    include_ancillas: bool,
) -> Result<AttackResult> {
    let n = gadget.code().n();
    let k = gadget.code().k();
    let target_count = if include_ancillas {
        gadget.netlist().width()
    } else {
        n
    };
    let sets: u64 = (0..=max_weight).map(|w| binomial(target_count, w)).sum();
    let cost = sets.saturating_mul(1u64 << k.min(62));
    if cost > EXHAUSTIVE_ATTACK_BUDGET {
        return Err(Error::Capacity(format!(
            "exhaustive attack would run {cost} trials (> {EXHAUSTIVE_ATTACK_BUDGET}); \
             use the random strategy"
        )));
    }

    for w in 0..=max_weight {
        for combo in (0..target_count).combinations(w) {
            let erased: BTreeSet<usize> = combo.into_iter().collect();
            for bits in 0u64..(1 << k) {
                let m = message_from_bits(k, bits);
                let trial = run_erasure_trial(gadget, &m, &erased, mode)?;
                if let Some(kind) = trial.failure {
                    return Ok(AttackResult {
                        found: true,
                        strategy: Strategy::Exhaustive,
                        erasure: erased.iter().copied().collect(),
                        message: Some(m),
                        failure_kind: Some(kind),
                        out_of_budget: false,
                        trials_used: None,
                    });
                }
            }
        }
    }
    Ok(AttackResult::not_found(Strategy::Exhaustive))
}

/// The matching-lemma attack: erase every vertex covered by the maximal
/// matching, voiding all inference equations at once. With a small matching
/// (|V(U)| < d) this corrupts at least supp(g_target) — a distance's worth
/// of outputs — from fewer than d input erasures, so the decode failure is a
/// genuine robustness violation. A cover of size >= d is reported as
/// out-of-budget instead: it proves nothing about robustness.
pub fn attack_vertex_cover(
    gadget: &EncodedCnot,
    groups: &RepairGroupSet,
    mode: EvalMode,
) -> Result<AttackResult> {
    let cover = groups.covered_vertices();
    if cover.is_empty() {
        return Ok(AttackResult::not_found(Strategy::VertexCover));
    }
    let d = gadget.code().distance().ok_or_else(|| {
        Error::Construction("vertex-cover attack needs the code distance".into())
    })?;

    // The erasure pattern after the gadget is message-independent, so one
    // message suffices for the replay.
    let message = BitVector::zeros(gadget.code().k());
    let trial = run_erasure_trial(gadget, &message, &cover, mode)?;
    let within_budget = cover.len() < d;
    match trial.failure {
        Some(kind) if within_budget => Ok(AttackResult {
            found: true,
            strategy: Strategy::VertexCover,
            erasure: cover.iter().copied().collect(),
            message: Some(message),
            failure_kind: Some(kind),
            out_of_budget: false,
            trials_used: None,
        }),
        Some(_) => Ok(AttackResult {
            found: false,
            strategy: Strategy::VertexCover,
            erasure: cover.iter().copied().collect(),
            message: None,
            failure_kind: None,
            out_of_budget: true,
            trials_used: None,
        }),
        None => Ok(AttackResult::not_found(Strategy::VertexCover)),
    }
}

/// Seeded random search: each trial draws a message and an erasure set of
/// weight 1..=max_weight uniformly. Deterministic for a fixed seed.
pub fn attack_random(
    gadget: &EncodedCnot,
    max_weight: usize,
    trials: u64,
    seed: u64,
    mode: EvalMode,
    include_ancillas: bool,
) -> Result<AttackResult> {
    if trials == 0 {
        return Err(Error::Usage("random attack needs at least one trial".into()));
    }
    let n = gadget.code().n();
    let k = gadget.code().k();
    let target_count = if include_ancillas {
        gadget.netlist().width()
    } else {
        n
    };
    if max_weight == 0 || max_weight > target_count {
        return Err(Error::Usage(format!(
            "random attack weight must lie in 1..={target_count}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let m = BitVector::from_bools(&(0..k).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
        let w = rng.gen_range(1..=max_weight);
        let erased: BTreeSet<usize> = rand::seq::index::sample(&mut rng, target_count, w)
            .into_iter()
            .collect();
        let trial = run_erasure_trial(gadget, &m, &erased, mode)?;
        if let Some(kind) = trial.failure {
            return Ok(AttackResult {
                found: true,
                strategy: Strategy::Random,
                erasure: erased.into_iter().collect(),
                message: Some(m),
                failure_kind: Some(kind),
                out_of_budget: false,
                trials_used: Some(t + 1),
            });
        }
    }
    let mut result = AttackResult::not_found(Strategy::Random);
    result.trials_used = Some(trials);
    Ok(result)
}

/// Runs the strategies in the order the proof suggests: vertex-cover first
/// (cheap and targeted), then exhaustive inside the gadget's own claimed
/// budget, then random if exhaustion is out of reach.
pub fn attack_auto(
    gadget: &EncodedCnot,
    mode: EvalMode,
    random_trials: u64,
    seed: u64,
) -> Result<AttackResult> {
    let vc = attack_vertex_cover(gadget, gadget.groups(), mode)?;
    if vc.found {
        return Ok(vc);
    }
    let d = gadget.code().distance().ok_or_else(|| {
        Error::Construction("attack needs the code distance; compute or declare d first".into())
    })?;
    let max_weight = robustness_threshold(gadget, mode).max_weight_below(d);
    if max_weight == 0 {
        return Ok(AttackResult::not_found(Strategy::Exhaustive));
    }
    match attack_exhaustive(gadget, max_weight, mode, false) {
        Ok(result) => Ok(result),
        Err(Error::Capacity(_)) => {
            attack_random(gadget, max_weight, random_trials, seed, mode, false)
        }
        Err(e) => Err(e),
    }
}
