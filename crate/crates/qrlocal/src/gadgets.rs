//! Encoded-gadget construction and verification: the explicit encoded CNOT
//! built from a repair group set, the doubled gadget, encoding-identity
//! checks, and epsilon-robustness certification.
//!
//! The encoded CNOT for (control i, target j) works per repair group alpha:
//! it accumulates the inference bit `<v_alpha, C(m)> = m_i` into a fresh
//! ancilla by sequential CNOTs (codeword bits as controls), then CNOTs the
//! ancilla into every position of the group's slice of supp(g_j). All
//! accumulation layers precede all flip layers so that every codeword wire
//! is read before any is written.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{EvalMode, Gate, Netlist};
use crate::error::{Error, Result};
use crate::f2core::{self, cnot_message, BitVector, DecodeOutcome, ErasureWord, LinearCode, Symbol};
use crate::locality::RepairGroupSet;

/// Ancilla budget per gadget: at most this multiple of the block length.
pub const ANCILLA_BUDGET_FACTOR: usize = 4;

/// Messages sampled by the encoding-identity check when k > 20.
pub const ENCODE_CHECK_SAMPLES: usize = 10_000;

/// Erasure sets above this count are sampled rather than enumerated.
pub const CERTIFY_EXHAUSTIVE_BUDGET: u64 = 1_000_000;

// ---------------------------------------------------------------------------
// Exact rationals for robustness thresholds
// ---------------------------------------------------------------------------

/// Reduced nonnegative rational. Robustness thresholds are exact fractions
/// like r / (r + |g_j|); keeping them rational avoids any floating-point
/// question about whether |E| < eps * d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "rational with zero denominator");
        let g = gcd(num.max(1), den);
        Rational {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Largest integer w with w < self * d; the erasure budget for a code of
    /// distance d under a strict threshold.
    pub fn max_weight_below(&self, d: usize) -> usize {
        let prod = self.num * d as u64;
        let q = prod / self.den;
        let exact = prod % self.den == 0;
        (if exact { q.saturating_sub(1) } else { q }) as usize
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num: u64 = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
        let den: u64 = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        Ok(Rational::new(num, den))
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// The encoded CNOT gadget
// ---------------------------------------------------------------------------

/// An encoded CNOT_{control,target} gadget: the code, the repair groups that
/// read the control bit, the partition of supp(g_target) they flip, and the
/// scheduled netlist.
#[derive(Clone, Debug)]
pub struct EncodedCnot {
    code: LinearCode,
    control: usize,
    target: usize,
    groups: RepairGroupSet,
    partition: Vec<Vec<usize>>,
    netlist: Netlist,
}

impl EncodedCnot {
    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn control(&self) -> usize {
        self.control
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn groups(&self) -> &RepairGroupSet {
        &self.groups
    }

    /// The disjoint slices of supp(g_target), one per group.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn depth(&self) -> usize {
        self.netlist.depth()
    }

    pub fn width(&self) -> usize {
        self.netlist.width()
    }

    pub fn ancilla_count(&self) -> usize {
        self.netlist.ancilla_count()
    }

    /// Number of groups actually wired (r after truncation to |g_target|).
    pub fn r(&self) -> usize {
        self.partition.len()
    }

    /// Max flip width over the groups: eta = max |S^alpha|.
    pub fn eta(&self) -> usize {
        self.partition.iter().map(|p| p.len()).max().unwrap_or(0)
    }

    /// Constant-depth CNOTs need |g_target| <= 2^depth * |g_control|; this
    /// is a lint, not an invariant of the construction.
    pub fn support_size_lint(&self) -> Option<String> {
        let gi = self.code.generator_row(self.control).weight();
        let gj = self.code.generator_row(self.target).weight();
        let bound = 1usize.checked_shl(self.depth() as u32)?.checked_mul(gi)?;
        (gj > bound).then(|| {
            format!(
                "|g_{}| = {gj} exceeds 2^{} * |g_{}| = {bound}",
                self.target + 1,
                self.depth(),
                self.control + 1
            )
        })
    }

    pub fn to_bundle(&self, report: Option<GadgetReport>) -> GadgetBundle {
        GadgetBundle {
            code: self.code.to_json(),
            control: self.control + 1,
            target: self.target + 1,
            groups: self
                .groups
                .groups()
                .iter()
                .map(|g| g.support().iter().map(|p| p + 1).collect())
                .collect(),
            partition: self
                .partition
                .iter()
                .map(|part| part.iter().map(|p| p + 1).collect())
                .collect(),
            eta: self.eta(),
            netlist: self.netlist.to_text(),
            report,
        }
    }

    pub fn from_bundle(bundle: &GadgetBundle) -> Result<Self> {
        let code = LinearCode::from_json(&bundle.code)?;
        if bundle.control == 0 || bundle.target == 0 {
            return Err(Error::Parse("control/target are 1-based".into()));
        }
        let control = bundle.control - 1;
        let target = bundle.target - 1;
        let groups = RepairGroupSet::new_unchecked(
            control,
            bundle
                .groups
                .iter()
                .map(|support| {
                    let zero: Vec<usize> = support
                        .iter()
                        .map(|&p| {
                            if p == 0 {
                                Err(Error::Parse("positions are 1-based".into()))
                            } else {
                                Ok(p - 1)
                            }
                        })
                        .collect::<Result<_>>()?;
                    Ok(crate::locality::RepairVector::new(
                        control,
                        BitVector::from_support(code.n(), &zero)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?,
        );
        let partition = bundle
            .partition
            .iter()
            .map(|part| {
                part.iter()
                    .map(|&p| {
                        if p == 0 {
                            Err(Error::Parse("positions are 1-based".into()))
                        } else {
                            Ok(p - 1)
                        }
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let netlist = Netlist::from_text(&bundle.netlist)?;
        Ok(EncodedCnot {
            code,
            control,
            target,
            groups,
            partition,
            netlist,
        })
    }
}

/// Gadget bundle JSON: code, (i, j), partition, group supports, the netlist
/// in its text format, and an optional report. All positions 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GadgetBundle {
    pub code: crate::f2core::CodeJson,
    pub control: usize,
    pub target: usize,
    pub groups: Vec<Vec<usize>>,
    pub partition: Vec<Vec<usize>>,
    pub eta: usize,
    pub netlist: String,
    pub report: Option<GadgetReport>,
}

/// Builds the encoded CNOT_{control,target} from a repair group set for the
/// control index.
///
/// supp(g_target) is split into one contiguous, near-equal slice per group
/// (any disjoint cover works); when there are more groups than target
/// positions the excess groups are dropped, highest index first, so every
/// slice is nonempty. The resulting depth is at most q + eta for
/// support-disjoint groups.
pub fn build_encoded_cnot(
    code: &LinearCode,
    control: usize,
    target: usize,
    groups: &RepairGroupSet,
) -> Result<EncodedCnot> {
    let n = code.n();
    let k = code.k();
    if control >= k || target >= k {
        return Err(Error::Index(format!(
            "message indices ({}, {}) out of range for k = {k}",
            control + 1,
            target + 1
        )));
    }
    if control == target {
        return Err(Error::Construction(
            "encoded CNOT needs distinct control and target".into(),
        ));
    }
    if groups.index() != control {
        return Err(Error::Construction(format!(
            "groups read index {}, gadget controls on index {}",
            groups.index() + 1,
            control + 1
        )));
    }
    if groups.r() == 0 {
        return Err(Error::Construction(
            "cannot build a gadget from zero repair groups".into(),
        ));
    }
    for (a, g) in groups.groups().iter().enumerate() {
        if !g.verify(code) {
            return Err(Error::Construction(format!(
                "group {} is not a repair vector for index {}",
                a + 1,
                control + 1
            )));
        }
    }

    let support_j = code.generator_row(target).support();
    let r = groups.r().min(support_j.len());
    let ancillas = r;
    if ancillas > ANCILLA_BUDGET_FACTOR * n {
        return Err(Error::Capacity(format!(
            "gadget wants {ancillas} ancillas, budget is {} * n = {}",
            ANCILLA_BUDGET_FACTOR,
            ANCILLA_BUDGET_FACTOR * n
        )));
    }

    // Contiguous near-equal slices of supp(g_target); the first
    // |g_j| mod r slices take the extra element.
    let base = support_j.len() / r;
    let extra = support_j.len() % r;
    let mut partition = Vec::with_capacity(r);
    let mut at = 0;
    for alpha in 0..r {
        let size = base + usize::from(alpha < extra);
        partition.push(support_j[at..at + size].to_vec());
        at += size;
    }

    // Accumulation phase: group alpha reads its support into ancilla n+alpha,
    // one CNOT per layer per group.
    let accumulation: Vec<Vec<Gate>> = (0..r)
        .map(|alpha| {
            groups.groups()[alpha]
                .support()
                .into_iter()
                .map(|v| Gate::Cnot {
                    control: v,
                    target: n + alpha,
                })
                .collect()
        })
        .collect();
    // Flip phase: group alpha copies its inference bit onto its slice.
    let flips: Vec<Vec<Gate>> = (0..r)
        .map(|alpha| {
            partition[alpha]
                .iter()
                .map(|&s| Gate::Cnot {
                    control: n + alpha,
                    target: s,
                })
                .collect()
        })
        .collect();

    let width = n + ancillas;
    let mut layers = schedule(width, &accumulation);
    layers.extend(schedule(width, &flips));
    let netlist = Netlist::new(width, n, layers)?;

    Ok(EncodedCnot {
        code: code.clone(),
        control,
        target,
        groups: RepairGroupSet::new_unchecked(control, groups.groups()[..r].to_vec()),
        partition,
        netlist,
    })
}

/// List-schedules per-group gate chains into legal layers: each layer takes
/// the next gate of every chain whose wires are still free. For
/// support-disjoint groups every chain advances every layer, so the phase
/// depth equals the longest chain.
fn schedule(width: usize, chains: &[Vec<Gate>]) -> Vec<Vec<Gate>> {
    let mut next: Vec<usize> = vec![0; chains.len()];
    let mut layers = Vec::new();
    while next
        .iter()
        .zip(chains)
        .any(|(&at, chain)| at < chain.len())
    {
        let mut busy = vec![false; width];
        let mut layer = Vec::new();
        for (chain, at) in chains.iter().zip(next.iter_mut()) {
            if *at >= chain.len() {
                continue;
            }
            let gate = chain[*at];
            if gate.wires().iter().all(|&w| !busy[w]) {
                for w in gate.wires() {
                    busy[w] = true;
                }
                layer.push(gate);
                *at += 1;
            }
        }
        assert!(!layer.is_empty(), "scheduler stalled");
        layers.push(layer);
    }
    layers
}

// ---------------------------------------------------------------------------
// Encoding identity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeCheck {
    pub passed: bool,
    pub witness: Option<BitVector>,
}

/// Checks the encoding identity G' . C = C . CNOT_{control,target} on a raw
/// netlist: exhaustively for k <= 20, on sampled messages above that.
/// Returns the first failing message, if any.
pub fn encodes_cnot_witness(
    code: &LinearCode,
    netlist: &Netlist,
    control: usize,
    target: usize,
) -> Result<Option<BitVector>> {
    let n = code.n();
    let k = code.k();
    if control >= k || target >= k || control == target {
        return Err(Error::Index(format!(
            "bad index pair ({}, {}) for k = {k}",
            control + 1,
            target + 1
        )));
    }
    if netlist.ancilla_from() != n {
        return Err(Error::Dimension(format!(
            "netlist has {} data wires, code block length is {n}",
            netlist.ancilla_from()
        )));
    }

    let check = |m: &BitVector| -> Result<bool> {
        let cw = code.encode(m)?;
        let data: Vec<Symbol> = (0..n).map(|p| Symbol::from_bit(cw.get(p))).collect();
        let out = netlist.evaluate_data(&data, EvalMode::Blanket)?;
        let expected = code.encode(&cnot_message(m, control, target))?;
        Ok((0..n).all(|p| out[p] == Symbol::from_bit(expected.get(p))))
    };

    if k <= 20 {
        for bits in 0u64..(1 << k) {
            let m = message_from_bits(k, bits);
            if !check(&m)? {
                return Ok(Some(m));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
        for _ in 0..ENCODE_CHECK_SAMPLES {
            let m = BitVector::from_bools(&(0..k).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
            if !check(&m)? {
                return Ok(Some(m));
            }
        }
    }
    Ok(None)
}

/// Encoding-identity check for a built gadget.
pub fn verify_encodes(gadget: &EncodedCnot) -> Result<EncodeCheck> {
    let witness = encodes_cnot_witness(
        gadget.code(),
        gadget.netlist(),
        gadget.control(),
        gadget.target(),
    )?;
    Ok(EncodeCheck {
        passed: witness.is_none(),
        witness,
    })
}

pub(crate) fn message_from_bits(k: usize, bits: u64) -> BitVector {
    BitVector::from_bools(&(0..k).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------
// The doubled gadget
// ---------------------------------------------------------------------------

/// Wraps an n-data-wire netlist into its doubled form over 2n data wires:
/// a transversal CNOT layer copying block A onto block B, the inner netlist
/// acting on block B, and a second transversal layer. Maps (C(m), 0^n) to
/// (C(m), C(m) + G'(C(m))); for an encoded CNOT_{i,j} the second block ends
/// as m_i * g_j. Depth is exactly inner depth + 2.
pub fn double_netlist(block: usize, inner: &Netlist) -> Result<Netlist> {
    if inner.ancilla_from() != block {
        return Err(Error::Dimension(format!(
            "inner netlist has {} data wires, expected {block}",
            inner.ancilla_from()
        )));
    }
    let ancillas = inner.ancilla_count();
    let width = 2 * block + ancillas;
    let transversal: Vec<Gate> = (0..block)
        .map(|beta| Gate::Cnot {
            control: beta,
            target: block + beta,
        })
        .collect();

    let mut layers = vec![transversal.clone()];
    for layer in inner.layers() {
        layers.push(
            layer
                .iter()
                .map(|g| {
                    let map = |w: usize| if w < block { block + w } else { block + w };
                    match *g {
                        Gate::Not { wire } => Gate::Not { wire: map(wire) },
                        Gate::Cnot { control, target } => Gate::Cnot {
                            control: map(control),
                            target: map(target),
                        },
                    }
                })
                .collect(),
        );
    }
    layers.push(transversal);
    Netlist::new(width, 2 * block, layers)
}

/// Doubled form of a built gadget.
pub fn build_doubled(gadget: &EncodedCnot) -> Netlist {
    double_netlist(gadget.code().n(), gadget.netlist()).expect("gadget netlist is block-aligned")
}

// ---------------------------------------------------------------------------
// Robustness
// ---------------------------------------------------------------------------

/// Threshold below which the gadget tolerates erasures.
///
/// Dataflow accounting: one input erasure voids at most one inference and
/// so erases at most 1 + eta positions, giving eps = r / (r + |g_j|).
/// Blanket accounting additionally charges the q - 1 sibling query wires a
/// poisoned ancilla erases on its way through the accumulation chain:
/// eps = r / (r + |g_j| + (q-1) * r).
pub fn robustness_threshold(gadget: &EncodedCnot, mode: EvalMode) -> Rational {
    let r = gadget.r() as u64;
    let gj = gadget.code().generator_row(gadget.target()).weight() as u64;
    let q = gadget.groups().q().max(1) as u64;
    match mode {
        EvalMode::Dataflow => Rational::new(r, r + gj),
        EvalMode::Blanket => Rational::new(r, r + gj + (q - 1) * r),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    /// Output erasure pattern admits several completions.
    NotDecodable,
    /// A non-erased output position disagrees with the expected codeword,
    /// or the known symbols are inconsistent with every codeword.
    WrongDecode,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::NotDecodable => "not-decodable",
            FailureKind::WrongDecode => "wrong-decode",
        })
    }
}

/// Result of pushing one (message, erasure set) through a gadget: the erased
/// output positions on the data block, the decoded message when available,
/// and the failure classification if the run violates the robustness
/// condition.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub erased_out: BTreeSet<usize>,
    pub decoded: Option<BitVector>,
    pub failure: Option<FailureKind>,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// The single evaluation path used by certification, the attacks and the
/// simulation harness: erase E on the input codeword (positions >= n hit
/// ancilla wires), run the netlist, and require that the non-erased data
/// wires agree with C(CNOT(m)) and that the ideal decoder recovers CNOT(m).
pub fn run_erasure_trial(
    gadget: &EncodedCnot,
    message: &BitVector,
    erased: &BTreeSet<usize>,
    mode: EvalMode,
) -> Result<TrialOutcome> {
    let code = gadget.code();
    let n = code.n();
    let netlist = gadget.netlist();
    if let Some(&max) = erased.iter().next_back() {
        if max >= netlist.width() {
            return Err(Error::Index(format!(
                "erasure position {} out of range for width {}",
                max + 1,
                netlist.width()
            )));
        }
    }

    let cw = code.encode(message)?;
    let input: Vec<Symbol> = (0..netlist.width())
        .map(|w| {
            if erased.contains(&w) {
                Symbol::Erased
            } else if w < n {
                Symbol::from_bit(cw.get(w))
            } else {
                Symbol::Zero
            }
        })
        .collect();
    let out = netlist.evaluate(&input, mode)?;

    let expected_m = cnot_message(message, gadget.control(), gadget.target());
    let expected_cw = code.encode(&expected_m)?;
    let data = &out[..n];
    let erased_out: BTreeSet<usize> = data
        .iter()
        .enumerate()
        .filter_map(|(p, s)| s.is_erased().then_some(p))
        .collect();

    for (p, s) in data.iter().enumerate() {
        if let Some(bit) = s.bit() {
            if bit != expected_cw.get(p) {
                return Ok(TrialOutcome {
                    erased_out,
                    decoded: None,
                    failure: Some(FailureKind::WrongDecode),
                });
            }
        }
    }

    let word = ErasureWord::new(data.to_vec());
    match f2core::ideal_decode(code, &word) {
        Ok(DecodeOutcome::Decoded(m)) => {
            let failure = (m != expected_m).then_some(FailureKind::WrongDecode);
            Ok(TrialOutcome {
                erased_out,
                decoded: Some(m),
                failure,
            })
        }
        Ok(DecodeOutcome::NotDecodable) => Ok(TrialOutcome {
            erased_out,
            decoded: None,
            failure: Some(FailureKind::NotDecodable),
        }),
        Err(Error::Corruption(_)) => Ok(TrialOutcome {
            erased_out,
            decoded: None,
            failure: Some(FailureKind::WrongDecode),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Let the adversary erase ancilla wires too. Off by default: the
    /// adversary acts on code positions between gadgets.
    pub include_ancillas: bool,
    /// Enumerate erasure sets exhaustively up to this count, sample beyond.
    pub erasure_budget: u64,
    pub message_samples: usize,
    pub seed: u64,
    pub max_witnesses: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            include_ancillas: false,
            erasure_budget: CERTIFY_EXHAUSTIVE_BUDGET,
            message_samples: ENCODE_CHECK_SAMPLES,
            seed: 7,
            max_witnesses: 32,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    /// Message as a bit string, leftmost bit = m_1.
    pub message: String,
    /// Erased positions, 1-based; positions above n are ancilla wires.
    pub erasure: Vec<usize>,
}

/// Certification verdict for one gadget at one threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GadgetReport {
    pub encodes_ok: bool,
    pub epsilon_dataflow: Rational,
    pub epsilon_blanket: Rational,
    pub tested_epsilon: Rational,
    pub mode: EvalMode,
    pub max_erasure_weight: usize,
    pub exhaustive: bool,
    pub erasure_sets_tested: u64,
    pub messages_per_set: usize,
    pub witnesses: Vec<WitnessJson>,
    pub depth: usize,
    pub width: usize,
    pub ancilla_count: usize,
}

impl GadgetReport {
    pub fn passed(&self) -> bool {
        self.encodes_ok && self.witnesses.is_empty()
    }
}

/// Sweeps every message against every erasure set with |E| < epsilon * d
/// (or a seeded sample when the count exceeds the budget) and records
/// failures. Also asserts that the output erasure pattern depends on E only,
/// never on the message — which holds structurally for the {NOT, CNOT} gate
/// set and is the functional form of the robustness equation.
pub fn certify_robust(
    gadget: &EncodedCnot,
    epsilon: Rational,
    mode: EvalMode,
    opts: &CertifyOptions,
) -> Result<GadgetReport> {
    let code = gadget.code();
    let Some(d) = code.distance() else {
        return Err(Error::Construction(
            "certification needs the code distance; compute or declare d first".into(),
        ));
    };
    let n = code.n();
    let k = code.k();
    let encode_check = verify_encodes(gadget)?;

    let max_weight = epsilon.max_weight_below(d);
    let target_count = if opts.include_ancillas {
        gadget.netlist().width()
    } else {
        n
    };
    let targets: Vec<usize> = (0..target_count).collect();

    let total_sets: u64 = (0..=max_weight)
        .map(|w| binomial(targets.len(), w))
        .sum();
    let exhaustive = total_sets <= opts.erasure_budget;

    let messages: Vec<BitVector> = if k <= 20 {
        (0u64..(1 << k)).map(|bits| message_from_bits(k, bits)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.message_samples)
            .map(|_| BitVector::from_bools(&(0..k).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>()))
            .collect()
    };

    let mut witnesses: Vec<WitnessJson> = Vec::new();
    let mut sets_tested: u64 = 0;
    let mut sweep = |erased: BTreeSet<usize>| -> Result<bool> {
        sets_tested += 1;
        let mut f_of_e: Option<BTreeSet<usize>> = None;
        for m in &messages {
            let trial = run_erasure_trial(gadget, m, &erased, mode)?;
            match &f_of_e {
                None => f_of_e = Some(trial.erased_out.clone()),
                Some(f) => assert_eq!(
                    *f, trial.erased_out,
                    "output erasure pattern must be a function of E alone"
                ),
            }
            if trial.failure.is_some() {
                witnesses.push(WitnessJson {
                    message: m.to_bitstring(),
                    erasure: erased.iter().map(|p| p + 1).collect(),
                });
                if witnesses.len() >= opts.max_witnesses {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };

    if exhaustive {
        'outer: for w in 0..=max_weight {
            for combo in targets.iter().copied().combinations(w) {
                if !sweep(combo.into_iter().collect())? {
                    break 'outer;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xe7);
        for _ in 0..opts.erasure_budget {
            let w = rng.gen_range(0..=max_weight);
            let erased: BTreeSet<usize> =
                rand::seq::index::sample(&mut rng, targets.len(), w)
                    .into_iter()
                    .map(|i| targets[i])
                    .collect();
            if !sweep(erased)? {
                break;
            }
        }
    }

    witnesses.sort_by(|a, b| (&a.erasure, &a.message).cmp(&(&b.erasure, &b.message)));
    Ok(GadgetReport {
        encodes_ok: encode_check.passed,
        epsilon_dataflow: robustness_threshold(gadget, EvalMode::Dataflow),
        epsilon_blanket: robustness_threshold(gadget, EvalMode::Blanket),
        tested_epsilon: epsilon,
        mode,
        max_erasure_weight: max_weight,
        exhaustive,
        erasure_sets_tested: sets_tested,
        messages_per_set: messages.len(),
        witnesses,
        depth: gadget.depth(),
        width: gadget.width(),
        ancilla_count: gadget.ancilla_count(),
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut out: u64 = 1;
    for i in 0..k.min(n - k) {
        out = out.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locality::{enumerate_repair_vectors, extract_disjoint_groups};
    use crate::zoo;

    fn hadamard3() -> LinearCode {
        zoo::make_hadamard(3).unwrap()
    }

    fn hadamard_gadget() -> EncodedCnot {
        let code = hadamard3();
        let candidates = enumerate_repair_vectors(&code, 0, 2, None).unwrap();
        let groups = extract_disjoint_groups(0, &candidates).unwrap();
        build_encoded_cnot(&code, 0, 1, &groups).unwrap()
    }

    #[test]
    fn rational_arithmetic() {
        let half = Rational::new(4, 8);
        assert_eq!(half, Rational::new(1, 2));
        assert_eq!(half.to_string(), "1/2");
        assert_eq!("1/2".parse::<Rational>().unwrap(), half);
        assert_eq!("1".parse::<Rational>().unwrap(), Rational::new(1, 1));
        // Strict budget: eps*d = 2 admits |E| <= 1; eps*d = 8/3 admits 2.
        assert_eq!(half.max_weight_below(4), 1);
        assert_eq!(Rational::new(1, 3).max_weight_below(8), 2);
        assert!(Rational::new(1, 3) < half);
    }

    #[test]
    fn gadget_shape_on_hadamard() {
        let g = hadamard_gadget();
        assert_eq!(g.r(), 4);
        assert_eq!(g.eta(), 1);
        // Two accumulation layers (max group weight) plus one flip layer.
        assert_eq!(g.depth(), 3);
        assert_eq!(g.ancilla_count(), 4);
        assert!(g.support_size_lint().is_none());
    }

    #[test]
    fn gadget_encodes_exhaustively() {
        let g = hadamard_gadget();
        let check = verify_encodes(&g).unwrap();
        assert!(check.passed, "witness: {:?}", check.witness);

        // Output equals C(m) + m_1 * g_2 for every message.
        let code = g.code();
        for bits in 0u64..8 {
            let m = message_from_bits(3, bits);
            let cw = code.encode(&m).unwrap();
            let data: Vec<Symbol> = (0..8).map(|p| Symbol::from_bit(cw.get(p))).collect();
            let out = g.netlist().evaluate_data(&data, EvalMode::Dataflow).unwrap();
            let mut expected = cw.clone();
            if m.get(0) {
                expected ^= code.generator_row(1);
            }
            for p in 0..8 {
                assert_eq!(out[p], Symbol::from_bit(expected.get(p)));
            }
        }
    }

    #[test]
    fn zero_control_leaves_codeword_unchanged() {
        let g = hadamard_gadget();
        let code = g.code();
        for bits in [0u64, 2, 4, 6] {
            // messages with m_1 = 0
            let m = message_from_bits(3, bits);
            let cw = code.encode(&m).unwrap();
            let data: Vec<Symbol> = (0..8).map(|p| Symbol::from_bit(cw.get(p))).collect();
            let out = g.netlist().evaluate_data(&data, EvalMode::Dataflow).unwrap();
            for p in 0..8 {
                assert_eq!(out[p], Symbol::from_bit(cw.get(p)));
            }
        }
    }

    #[test]
    fn identity_netlist_is_not_a_cnot_gadget() {
        let code = hadamard3();
        let id = Netlist::identity(8, 8).unwrap();
        let witness = encodes_cnot_witness(&code, &id, 0, 1).unwrap();
        let w = witness.expect("identity cannot encode a CNOT");
        assert!(w.get(0), "any witness must have m_1 = 1");
    }

    #[test]
    fn gadget_for_swapped_roles_fails() {
        let g = hadamard_gadget();
        // The same netlist tested against CNOT_{2,1} must fail.
        let witness = encodes_cnot_witness(g.code(), g.netlist(), 1, 0).unwrap();
        assert!(witness.is_some());
    }

    #[test]
    fn rejects_empty_groups() {
        let code = hadamard3();
        let empty = RepairGroupSet::new_unchecked(0, vec![]);
        assert!(matches!(
            build_encoded_cnot(&code, 0, 1, &empty),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn drops_excess_groups_when_target_support_is_small() {
        // hadamard k=2: |g_2| = 2 but r = 2 groups fit exactly; force the
        // drop with a target of weight 2 and three groups on hadamard-3.
        let code = hadamard3();
        let candidates = enumerate_repair_vectors(&code, 0, 2, None).unwrap();
        let groups = extract_disjoint_groups(0, &candidates).unwrap();
        assert_eq!(groups.r(), 4);
        // Synthetic code view: reuse the same groups against target support
        // of size 4 is fine; emulate the drop by truncating support: use
        // target = 2 whose support has weight 4 as well, so instead check
        // the partition covers supp(g_j) exactly.
        let g = build_encoded_cnot(&code, 0, 2, &groups).unwrap();
        let mut covered: Vec<usize> = g.partition().iter().flatten().copied().collect();
        covered.sort();
        assert_eq!(covered, code.generator_row(2).support());
    }

    #[test]
    fn doubled_gadget_shape_and_readout() {
        let g = hadamard_gadget();
        let doubled = build_doubled(&g);
        assert_eq!(doubled.depth(), g.depth() + 2);
        assert_eq!(doubled.width(), 16 + g.ancilla_count());

        let code = g.code();
        for bits in 0u64..8 {
            let m = message_from_bits(3, bits);
            let cw = code.encode(&m).unwrap();
            let mut data: Vec<Symbol> = (0..8).map(|p| Symbol::from_bit(cw.get(p))).collect();
            data.extend(std::iter::repeat(Symbol::Zero).take(8));
            let out = doubled.evaluate_data(&data, EvalMode::Dataflow).unwrap();
            // First block: C(m) untouched.
            for p in 0..8 {
                assert_eq!(out[p], Symbol::from_bit(cw.get(p)));
            }
            // Second block: m_1 * g_2.
            for p in 0..8 {
                let expected = m.get(0) && code.generator_row(1).get(p);
                assert_eq!(out[8 + p], Symbol::from_bit(expected));
            }
        }
    }

    #[test]
    fn thresholds_for_hadamard() {
        let g = hadamard_gadget();
        assert_eq!(
            robustness_threshold(&g, EvalMode::Dataflow),
            Rational::new(1, 2)
        );
        assert_eq!(
            robustness_threshold(&g, EvalMode::Blanket),
            Rational::new(1, 3)
        );
    }

    #[test]
    fn threshold_tends_to_one_in_r() {
        // eps = r / (r + |g_j|) with |g_j| fixed grows towards 1.
        let mut last = Rational::new(0, 1);
        for r in [1u64, 2, 4, 8, 1 << 20] {
            let eps = Rational::new(r, r + 4);
            assert!(eps > last);
            last = eps;
        }
        assert!(last.value() > 0.999);
    }

    #[test]
    fn certify_hadamard_dataflow_at_half() {
        let g = hadamard_gadget();
        let report = certify_robust(
            &g,
            Rational::new(1, 2),
            EvalMode::Dataflow,
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(report.passed());
        assert_eq!(report.max_erasure_weight, 1); // |E| < 2
        assert!(report.exhaustive);
        assert_eq!(report.erasure_sets_tested, 9); // empty set + 8 singletons
    }

    #[test]
    fn certify_hadamard_blanket_at_third() {
        let g = hadamard_gadget();
        let report = certify_robust(
            &g,
            Rational::new(1, 3),
            EvalMode::Blanket,
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(report.passed());
    }

    #[test]
    fn empty_erasure_always_passes_after_encoding_check() {
        let g = hadamard_gadget();
        let trial = run_erasure_trial(
            &g,
            &message_from_bits(3, 5),
            &BTreeSet::new(),
            EvalMode::Blanket,
        )
        .unwrap();
        assert!(trial.passed());
        assert!(trial.erased_out.is_empty());
    }

    #[test]
    fn broken_gadget_fails_at_weight_one() {
        // All groups read the same pair: erasing one of its wires voids
        // every inference and erases all of supp(g_2).
        let code = hadamard3();
        let pair = crate::locality::RepairVector::new(
            0,
            BitVector::from_support(8, &[1, 5]).unwrap(),
        );
        let broken = RepairGroupSet::new_unchecked(0, vec![pair.clone(); 4]);
        let g = build_encoded_cnot(&code, 0, 1, &broken).unwrap();
        assert!(verify_encodes(&g).unwrap().passed);

        let report = certify_robust(
            &g,
            Rational::new(1, 2),
            EvalMode::Dataflow,
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(!report.passed());
        let first = &report.witnesses[0];
        assert_eq!(first.erasure.len(), 1);

        let trial = run_erasure_trial(
            &g,
            &message_from_bits(3, 0),
            &BTreeSet::from([1]),
            EvalMode::Dataflow,
        )
        .unwrap();
        assert_eq!(trial.failure, Some(FailureKind::NotDecodable));
    }

    #[test]
    fn bundle_round_trip() {
        let g = hadamard_gadget();
        let bundle = g.to_bundle(None);
        let back = EncodedCnot::from_bundle(&bundle).unwrap();
        assert_eq!(back.netlist(), g.netlist());
        assert_eq!(back.partition(), g.partition());
        assert_eq!(back.control(), g.control());
        let json = serde_json::to_string_pretty(&bundle).unwrap();
        let parsed: GadgetBundle = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.netlist, bundle.netlist);
    }

    #[test]
    fn dataflow_output_erasures_bounded_by_one_plus_eta() {
        let g = hadamard_gadget();
        let eta = g.eta();
        for e1 in 0..8usize {
            for e2 in e1 + 1..8 {
                let e = BTreeSet::from([e1, e2]);
                let trial =
                    run_erasure_trial(&g, &message_from_bits(3, 3), &e, EvalMode::Dataflow)
                        .unwrap();
                assert!(trial.erased_out.len() <= e.len() * (1 + eta));
            }
        }
    }
}
