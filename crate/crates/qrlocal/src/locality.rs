//! Repair-vector search, disjoint repair-group extraction via greedy
//! hypergraph matching, and the (q,r)-locality / rate-bound audit.
//!
//! A repair vector for message index i is a vector u with
//! `<u, C(m)> = m_i` for every message m; equivalently `<u, g_j> = [j = i]`
//! for every generator row. A repair group set is a family of such vectors
//! with pairwise disjoint supports: r disjoint ways to read one message bit,
//! each touching at most q code positions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::Netlist;
use crate::error::{Error, Result};
use crate::f2core::{BitVector, LinearCode};
use crate::gadgets;

/// Regions larger than this fall back to the weight-bounded search.
pub const REGION_CAP: usize = 24;

/// The linear-system route enumerates 2^t solutions for a t-dimensional
/// null space; beyond this it refuses.
pub const NULLSPACE_CAP: usize = 20;

/// Weight cap for the combinatorial search over the full block.
pub const COMBINATORIAL_WEIGHT_CAP: usize = 3;

/// Exact maximum matching is exhaustive; candidate lists above this are
/// refused.
pub const EXACT_MATCHING_CAP: usize = 20;

// ---------------------------------------------------------------------------
// Repair vectors and group sets
// ---------------------------------------------------------------------------

/// A parity check that reads one message bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairVector {
    pub index: usize,
    pub vector: BitVector,
}

impl RepairVector {
    pub fn new(index: usize, vector: BitVector) -> Self {
        RepairVector { index, vector }
    }

    pub fn weight(&self) -> usize {
        self.vector.weight()
    }

    pub fn support(&self) -> Vec<usize> {
        self.vector.support()
    }

    pub fn verify(&self, code: &LinearCode) -> bool {
        verify_repair_vector(code, self.index, &self.vector)
    }
}

/// True iff `<u, g_j> = [j = index]` for every generator row. Total: any
/// length mismatch or bad index simply fails the check.
pub fn verify_repair_vector(code: &LinearCode, index: usize, u: &BitVector) -> bool {
    if index >= code.k() || u.len() != code.n() {
        return false;
    }
    (0..code.k()).all(|j| match u.inner_product(code.generator_row(j)) {
        Ok(bit) => bit == (j == index),
        Err(_) => false,
    })
}

/// A support-disjoint family of repair vectors for one message index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairGroupSet {
    index: usize,
    groups: Vec<RepairVector>,
}

impl RepairGroupSet {
    /// Validates all three defining properties: every vector reads bit
    /// `index`, supports are pairwise disjoint, and weights are recorded.
    pub fn new(code: &LinearCode, index: usize, groups: Vec<RepairVector>) -> Result<Self> {
        let set = RepairGroupSet { index, groups };
        set.verify(code)?;
        Ok(set)
    }

    /// Skips validation. Exists so tests and attack fixtures can build
    /// deliberately broken families (overlapping supports, wrong index).
    pub fn new_unchecked(index: usize, groups: Vec<RepairVector>) -> Self {
        RepairGroupSet { index, groups }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn groups(&self) -> &[RepairVector] {
        &self.groups
    }

    /// Max Hamming weight over the family (the query count q); 0 when empty.
    pub fn q(&self) -> usize {
        self.groups.iter().map(|g| g.weight()).max().unwrap_or(0)
    }

    /// Number of disjoint repair groups.
    pub fn r(&self) -> usize {
        self.groups.len()
    }

    /// Union of the group supports (the vertices covered by the matching).
    pub fn covered_vertices(&self) -> BTreeSet<usize> {
        self.groups
            .iter()
            .flat_map(|g| g.support())
            .collect()
    }

    /// Re-checks the three defining properties exactly as stated.
    pub fn verify(&self, code: &LinearCode) -> Result<()> {
        let mut used = BTreeSet::new();
        for (a, g) in self.groups.iter().enumerate() {
            if g.index != self.index {
                return Err(Error::Construction(format!(
                    "group {} targets index {} instead of {}",
                    a + 1,
                    g.index + 1,
                    self.index + 1
                )));
            }
            if !g.verify(code) {
                return Err(Error::Construction(format!(
                    "group {} is not a repair vector for index {}",
                    a + 1,
                    self.index + 1
                )));
            }
            for p in g.support() {
                if !used.insert(p) {
                    return Err(Error::Construction(format!(
                        "groups share support at position {}",
                        p + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// All repair vectors for `index` with support inside `region` (or the full
/// block when `region` is `None`) and weight at most `max_weight`.
///
/// Two routes, chosen by the preconditions:
/// - small regions (<= [`REGION_CAP`]): solve the linear system
///   `<u, g_j> = [j = index]` restricted to the region's columns and
///   enumerate its solution space, then filter by weight;
/// - weight at most [`COMBINATORIAL_WEIGHT_CAP`]: bounded-weight search over
///   the allowed positions, bucketing by column profile so that weight-2 and
///   weight-3 supports are found without scanning all subsets.
///
/// Results are sorted by (weight, support) ascending.
pub fn enumerate_repair_vectors(
    code: &LinearCode,
    index: usize,
    max_weight: usize,
    region: Option<&BTreeSet<usize>>,
) -> Result<Vec<RepairVector>> {
    if index >= code.k() {
        return Err(Error::Index(format!(
            "message index {} out of range for k = {}",
            index + 1,
            code.k()
        )));
    }
    if let Some(region) = region {
        if let Some(&max) = region.iter().next_back() {
            if max >= code.n() {
                return Err(Error::Index(format!(
                    "region position {} out of range for n = {}",
                    max + 1,
                    code.n()
                )));
            }
        }
    }

    let full: Vec<usize>;
    let positions: Vec<usize> = match region {
        Some(r) => r.iter().copied().collect(),
        None => {
            full = (0..code.n()).collect();
            full.clone()
        }
    };

    let mut found = if positions.len() <= REGION_CAP {
        enumerate_by_linear_system(code, index, max_weight, &positions)?
    } else if max_weight <= COMBINATORIAL_WEIGHT_CAP {
        enumerate_by_weight(code, index, max_weight, &positions)
    } else {
        return Err(Error::Capacity(format!(
            "region of {} positions exceeds the cap {} and max weight {} exceeds {}",
            positions.len(),
            REGION_CAP,
            max_weight,
            COMBINATORIAL_WEIGHT_CAP
        )));
    };

    found.sort_by_key(|v| (v.weight(), v.support()));
    Ok(found)
}

/// Solves `<u, g_j> = [j = index]` for u supported on `positions` and
/// enumerates the whole affine solution space.
fn enumerate_by_linear_system(
    code: &LinearCode,
    index: usize,
    max_weight: usize,
    positions: &[usize],
) -> Result<Vec<RepairVector>> {
    let k = code.k();
    let cols = positions.len();
    // k rows over (cols + 1) bits; the last bit is the right-hand side.
    let mut rows: Vec<BitVector> = (0..k)
        .map(|j| {
            let mut row = BitVector::zeros(cols + 1);
            for (c, &p) in positions.iter().enumerate() {
                if code.generator_row(j).get(p) {
                    row.set(c, true);
                }
            }
            row.set(cols, j == index);
            row
        })
        .collect();

    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut next = 0;
    for c in 0..cols {
        let Some(r) = (next..k).find(|&r| rows[r].get(c)) else {
            continue;
        };
        rows.swap(next, r);
        let pivot = rows[next].clone();
        for (rr, row) in rows.iter_mut().enumerate() {
            if rr != next && row.get(c) {
                *row ^= &pivot;
            }
        }
        pivot_cols.push(c);
        next += 1;
    }

    // Inconsistent system: no repair vector lives inside this region.
    for row in rows.iter().skip(next) {
        if row.get(cols) {
            return Ok(Vec::new());
        }
    }

    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    if free_cols.len() > NULLSPACE_CAP {
        return Err(Error::Capacity(format!(
            "solution space has dimension {} (> {NULLSPACE_CAP}); restrict the region or the weight",
            free_cols.len()
        )));
    }

    let mut particular = BitVector::zeros(cols);
    for (r, &c) in pivot_cols.iter().enumerate() {
        if rows[r].get(cols) {
            particular.set(c, true);
        }
    }
    let null_basis: Vec<BitVector> = free_cols
        .iter()
        .map(|&f| {
            let mut v = BitVector::zeros(cols);
            v.set(f, true);
            for (r, &c) in pivot_cols.iter().enumerate() {
                if rows[r].get(f) {
                    v.set(c, true);
                }
            }
            v
        })
        .collect();

    let mut out = Vec::new();
    for mask in 0u64..(1 << null_basis.len()) {
        let mut u_cols = particular.clone();
        for (b, basis) in null_basis.iter().enumerate() {
            if mask >> b & 1 == 1 {
                u_cols ^= basis;
            }
        }
        if u_cols.weight() > max_weight {
            continue;
        }
        let support: Vec<usize> = u_cols.support().iter().map(|&c| positions[c]).collect();
        let vector = BitVector::from_support(code.n(), &support)?;
        debug_assert!(verify_repair_vector(code, index, &vector));
        out.push(RepairVector::new(index, vector));
    }
    Ok(out)
}

/// Bounded-weight search. A support S is a repair vector for `index` iff the
/// column profiles over S sum to e_index, so supports of weight 2 and 3 are
/// found by bucketing positions by column profile.
fn enumerate_by_weight(
    code: &LinearCode,
    index: usize,
    max_weight: usize,
    positions: &[usize],
) -> Vec<RepairVector> {
    let target = BitVector::unit(code.k(), index).expect("index checked by caller");
    let mut buckets: HashMap<BitVector, Vec<usize>> = HashMap::new();
    let cols: Vec<(usize, BitVector)> = positions
        .iter()
        .map(|&p| {
            let col = code.column(p);
            buckets.entry(col.clone()).or_default().push(p);
            (p, col)
        })
        .collect();

    let mut supports: Vec<Vec<usize>> = Vec::new();
    if max_weight >= 1 {
        if let Some(ps) = buckets.get(&target) {
            supports.extend(ps.iter().map(|&p| vec![p]));
        }
    }
    if max_weight >= 2 {
        for (p, col) in &cols {
            let need = &target ^ col;
            if let Some(ps) = buckets.get(&need) {
                supports.extend(ps.iter().filter(|&&p2| p2 > *p).map(|&p2| vec![*p, p2]));
            }
        }
    }
    if max_weight >= 3 {
        for (a_idx, (a, col_a)) in cols.iter().enumerate() {
            for (b, col_b) in cols.iter().skip(a_idx + 1) {
                let need = &(&target ^ col_a) ^ col_b;
                if let Some(ps) = buckets.get(&need) {
                    supports.extend(ps.iter().filter(|&&p3| p3 > *b).map(|&p3| vec![*a, *b, p3]));
                }
            }
        }
    }

    supports
        .into_iter()
        .map(|s| {
            let vector = BitVector::from_support(code.n(), &s).expect("positions in range");
            debug_assert!(verify_repair_vector(code, index, &vector));
            RepairVector::new(index, vector)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

/// Greedy maximal matching on the hypergraph whose vertices are code
/// positions and whose hyperedges are candidate supports. Candidates are
/// taken in ascending weight, ties broken by lexicographic support, so the
/// output is deterministic. Maximality (not maximum) is what the
/// vertex-cover attack needs.
pub fn extract_disjoint_groups(
    index: usize,
    candidates: &[RepairVector],
) -> Result<RepairGroupSet> {
    for c in candidates {
        if c.index != index {
            return Err(Error::Construction(format!(
                "candidate targets index {} instead of {}",
                c.index + 1,
                index + 1
            )));
        }
    }
    let mut order: Vec<&RepairVector> = candidates.iter().collect();
    order.sort_by_key(|v| (v.weight(), v.support()));

    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut kept: Vec<RepairVector> = Vec::new();
    for cand in order {
        let support = cand.support();
        if support.iter().all(|p| !used.contains(p)) {
            used.extend(support);
            kept.push(cand.clone());
        }
    }
    Ok(RepairGroupSet {
        index,
        groups: kept,
    })
}

/// Exact maximum matching by exhaustive branch-and-bound. Retained as the
/// oracle against which the greedy matching is measured on tiny instances.
pub fn max_matching_exhaustive(candidates: &[RepairVector]) -> Result<usize> {
    if candidates.len() > EXACT_MATCHING_CAP {
        return Err(Error::Capacity(format!(
            "exact matching handles at most {EXACT_MATCHING_CAP} candidates, got {}",
            candidates.len()
        )));
    }
    let supports: Vec<BTreeSet<usize>> = candidates
        .iter()
        .map(|c| c.support().into_iter().collect())
        .collect();

    fn recurse(supports: &[BTreeSet<usize>], at: usize, used: &mut BTreeSet<usize>) -> usize {
        if at == supports.len() {
            return 0;
        }
        let skip = recurse(supports, at + 1, used);
        if supports[at].iter().any(|p| used.contains(p)) {
            return skip;
        }
        used.extend(supports[at].iter().copied());
        let take = 1 + recurse(supports, at + 1, used);
        for p in &supports[at] {
            used.remove(p);
        }
        take.max(skip)
    }

    Ok(recurse(&supports, 0, &mut BTreeSet::new()))
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Per-index repair group sets for a whole code, plus the derived (q, r).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalityCertificate {
    code_name: String,
    n: usize,
    k: usize,
    per_index: Vec<RepairGroupSet>,
}

impl LocalityCertificate {
    pub fn new(code: &LinearCode, per_index: Vec<RepairGroupSet>) -> Result<Self> {
        if per_index.len() != code.k() {
            return Err(Error::Dimension(format!(
                "certificate has {} index entries, code has k = {}",
                per_index.len(),
                code.k()
            )));
        }
        for (i, set) in per_index.iter().enumerate() {
            if set.index() != i {
                return Err(Error::Construction(format!(
                    "entry {} holds groups for index {}",
                    i + 1,
                    set.index() + 1
                )));
            }
        }
        Ok(LocalityCertificate {
            code_name: code.name().to_string(),
            n: code.n(),
            k: code.k(),
            per_index,
        })
    }

    pub fn code_name(&self) -> &str {
        &self.code_name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn per_index(&self) -> &[RepairGroupSet] {
        &self.per_index
    }

    pub fn group_set(&self, index: usize) -> &RepairGroupSet {
        &self.per_index[index]
    }

    /// Global query bound: the max q over all indices.
    pub fn global_q(&self) -> usize {
        self.per_index.iter().map(|s| s.q()).max().unwrap_or(0)
    }

    /// Global redundancy: the min r over all indices.
    pub fn global_r(&self) -> usize {
        self.per_index.iter().map(|s| s.r()).min().unwrap_or(0)
    }

    /// k * r^(1/q) / n for the global (q, r); 0 when the certificate is
    /// degenerate (some index has no groups).
    pub fn bound_ratio(&self) -> f64 {
        let q = self.global_q();
        let r = self.global_r();
        if q == 0 || r == 0 {
            return 0.0;
        }
        self.k as f64 * (r as f64).powf(1.0 / q as f64) / self.n as f64
    }

    /// Self-verification: re-checks every group set against the code.
    pub fn verify(&self, code: &LinearCode) -> Result<()> {
        if code.n() != self.n || code.k() != self.k {
            return Err(Error::Dimension(format!(
                "certificate was built for [{}, {}], code is [{}, {}]",
                self.n,
                self.k,
                code.n(),
                code.k()
            )));
        }
        for set in &self.per_index {
            set.verify(code)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            code: self.code_name.clone(),
            n: self.n,
            k: self.k,
            q: self.global_q(),
            r: self.global_r(),
            bound_ratio: self.bound_ratio(),
            indices: self
                .per_index
                .iter()
                .map(|set| IndexCertificateJson {
                    i: set.index() + 1,
                    q: set.q(),
                    r: set.r(),
                    groups: set
                        .groups()
                        .iter()
                        .map(|g| g.support().iter().map(|p| p + 1).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &CertificateJson) -> Result<Self> {
        let mut per_index = Vec::with_capacity(json.k);
        for (slot, entry) in json.indices.iter().enumerate() {
            if entry.i != slot + 1 {
                return Err(Error::Parse(format!(
                    "certificate entries must cover i = 1..k in order; found i = {} at slot {}",
                    entry.i,
                    slot + 1
                )));
            }
            let index = entry.i - 1;
            let groups = entry
                .groups
                .iter()
                .map(|support| {
                    let zero_based: Vec<usize> = support
                        .iter()
                        .map(|&p| {
                            if p == 0 {
                                Err(Error::Parse("positions are 1-based".into()))
                            } else {
                                Ok(p - 1)
                            }
                        })
                        .collect::<Result<_>>()?;
                    Ok(RepairVector::new(
                        index,
                        BitVector::from_support(json.n, &zero_based)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            per_index.push(RepairGroupSet::new_unchecked(index, groups));
        }
        if per_index.len() != json.k {
            return Err(Error::Parse(format!(
                "certificate lists {} indices, expected k = {}",
                per_index.len(),
                json.k
            )));
        }
        Ok(LocalityCertificate {
            code_name: json.code.clone(),
            n: json.n,
            k: json.k,
            per_index,
        })
    }
}

/// Certificate JSON: per message index the repair-vector supports as 1-based
/// position arrays; round-trips losslessly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub q: usize,
    pub r: usize,
    pub bound_ratio: f64,
    pub indices: Vec<IndexCertificateJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexCertificateJson {
    pub i: usize,
    pub q: usize,
    pub r: usize,
    pub groups: Vec<Vec<usize>>,
}

/// Enumerates candidates and extracts disjoint groups for every message
/// index of the code.
pub fn extract_certificate(code: &LinearCode, max_weight: usize) -> Result<LocalityCertificate> {
    let mut per_index = Vec::with_capacity(code.k());
    for i in 0..code.k() {
        let candidates = enumerate_repair_vectors(code, i, max_weight, None)?;
        per_index.push(extract_disjoint_groups(i, &candidates)?);
    }
    LocalityCertificate::new(code, per_index)
}

// ---------------------------------------------------------------------------
// Screening and the rate bound
// ---------------------------------------------------------------------------

/// Outcome of the weight-1 screen: which indices are readable only by
/// single-position probes, and whether k*d > c*n holds (reported, never
/// enforced — the asymptotic premise has no finite meaning).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightOneScreen {
    /// 0-based indices whose groups are all weight 1 (nonempty families only).
    pub flagged: Vec<usize>,
    pub k_times_d: Option<usize>,
    pub n: usize,
    pub premise_factor: f64,
    pub premise_met: Option<bool>,
}

pub fn screen_weight_one(
    cert: &LocalityCertificate,
    code: &LinearCode,
    premise_factor: f64,
) -> WeightOneScreen {
    let flagged = cert
        .per_index()
        .iter()
        .filter(|set| set.r() > 0 && set.groups().iter().all(|g| g.weight() == 1))
        .map(|set| set.index())
        .collect();
    let k_times_d = code.distance().map(|d| code.k() * d);
    WeightOneScreen {
        flagged,
        k_times_d,
        n: code.n(),
        premise_factor,
        premise_met: k_times_d.map(|kd| kd as f64 > premise_factor * code.n() as f64),
    }
}

/// One row of the rate-bound table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateBoundRow {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub q: usize,
    pub r: usize,
    /// k * d^(1/q) / n
    pub ratio_distance: f64,
    /// k * r^(1/q) / n
    pub ratio_groups: f64,
    /// Set when every group family is weight-1: the trivial regime the
    /// audit excludes.
    pub weight_one_excluded: bool,
}

impl RateBoundRow {
    /// Exact check of k <= n / d^(1/q), computed as k^q * d <= n^q over
    /// integers so no floating-point tolerance is involved.
    pub fn dimension_within_bound(&self) -> Result<bool> {
        let kq = (self.k as u128)
            .checked_pow(self.q as u32)
            .ok_or_else(|| Error::Capacity("k^q overflows".into()))?;
        let nq = (self.n as u128)
            .checked_pow(self.q as u32)
            .ok_or_else(|| Error::Capacity("n^q overflows".into()))?;
        let lhs = kq
            .checked_mul(self.d as u128)
            .ok_or_else(|| Error::Capacity("k^q * d overflows".into()))?;
        Ok(lhs <= nq)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateBoundReport {
    pub rows: Vec<RateBoundRow>,
    pub warnings: Vec<String>,
}

impl fmt::Display for RateBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>6} {:>4} {:>5} {:>3} {:>5} {:>14} {:>14} {:>9}",
            "code", "n", "k", "d", "q", "r", "k*d^(1/q)/n", "k*r^(1/q)/n", "excluded"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<16} {:>6} {:>4} {:>5} {:>3} {:>5} {:>14.6} {:>14.6} {:>9}",
                row.name,
                row.n,
                row.k,
                row.d,
                row.q,
                row.r,
                row.ratio_distance,
                row.ratio_groups,
                if row.weight_one_excluded { "yes" } else { "no" }
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Builds the per-code ratio table. Certificates are re-verified; codes with
/// no known distance are omitted with a warning. The table never issues a
/// pass/fail verdict — the bound is asymptotic — but
/// [`ratios_strictly_decreasing`] and
/// [`RateBoundRow::dimension_within_bound`] give exact family-level checks.
pub fn rate_bound_report(
    entries: &[(&LinearCode, &LocalityCertificate)],
) -> Result<RateBoundReport> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (code, cert) in entries {
        cert.verify(code)?;
        let Some(d) = code.distance() else {
            warnings.push(format!(
                "code {:?} has no known distance; row omitted",
                code.name()
            ));
            continue;
        };
        let q = cert.global_q();
        let r = cert.global_r();
        let screen = screen_weight_one(cert, code, 1.0);
        let (ratio_distance, ratio_groups) = if q == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let k = code.k() as f64;
            let n = code.n() as f64;
            (
                k * (d as f64).powf(1.0 / q as f64) / n,
                k * (r as f64).powf(1.0 / q as f64) / n,
            )
        };
        rows.push(RateBoundRow {
            name: code.name().to_string(),
            n: code.n(),
            k: code.k(),
            d,
            q,
            r,
            ratio_distance,
            ratio_groups,
            weight_one_excluded: !screen.flagged.is_empty(),
        });
    }
    Ok(RateBoundReport { rows, warnings })
}

/// Exact strict-monotonicity check of k * d^(1/q) / n along a family. All
/// rows must share the same q; the comparison is done on integers
/// (k2^q * d2 * n1^q < k1^q * d1 * n2^q), zero tolerance.
pub fn ratios_strictly_decreasing(rows: &[RateBoundRow]) -> Result<bool> {
    let Some(first) = rows.first() else {
        return Ok(true);
    };
    let q = first.q;
    if rows.iter().any(|r| r.q != q) {
        return Err(Error::Usage(
            "monotonicity is only defined for a family with a single q".into(),
        ));
    }
    let pow = |base: usize| -> Result<u128> {
        (base as u128)
            .checked_pow(q as u32)
            .ok_or_else(|| Error::Capacity("overflow in exact ratio comparison".into()))
    };
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let lhs = pow(b.k)?
            .checked_mul(b.d as u128)
            .and_then(|x| x.checked_mul(pow(a.n).ok()?))
            .ok_or_else(|| Error::Capacity("overflow in exact ratio comparison".into()))?;
        let rhs = pow(a.k)?
            .checked_mul(a.d as u128)
            .and_then(|x| x.checked_mul(pow(b.n).ok()?))
            .ok_or_else(|| Error::Capacity("overflow in exact ratio comparison".into()))?;
        if lhs >= rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// From gadget to locality
// ---------------------------------------------------------------------------

/// Recovers a repair group set for `control` from a netlist claimed to
/// encode CNOT_{control,target}:
///
/// 1. verify the encoding identity (the precondition);
/// 2. build the doubled netlist and, for each position beta in supp(g_target),
///    compute the influence of readout wire n + beta restricted to the first
///    code block;
/// 3. enumerate repair vectors inside each influence region, pool them, and
///    extract a greedy maximal matching.
///
/// Every region has at most 4 * 2^depth positions (the doubled netlist has
/// depth l + 2 and fan-in 2), so every returned vector has weight at most
/// 4 * 2^l. A region with no repair vector at all is a contradiction: the
/// netlist cannot encode the CNOT, and the precondition check should already
/// have failed.
pub fn extract_locality_from_gadget(
    code: &LinearCode,
    netlist: &Netlist,
    control: usize,
    target: usize,
) -> Result<RepairGroupSet> {
    if let Some(witness) = gadgets::encodes_cnot_witness(code, netlist, control, target)? {
        return Err(Error::Construction(format!(
            "netlist does not encode CNOT_{{{},{}}}: wrong output for message {}",
            control + 1,
            target + 1,
            witness
        )));
    }
    let n = code.n();
    let depth = netlist.depth();
    let doubled = gadgets::double_netlist(n, netlist)?;
    let query_cap = 4usize.saturating_mul(1usize.checked_shl(depth as u32).unwrap_or(usize::MAX));

    let mut pooled: Vec<RepairVector> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for beta in code.generator_row(target).support() {
        let influence = doubled.influence(n + beta)?;
        let region: BTreeSet<usize> = influence
            .members
            .iter()
            .copied()
            .filter(|&w| w < n)
            .collect();
        debug_assert!(influence.members.len() <= query_cap.max(4));
        let candidates = enumerate_repair_vectors(code, control, region.len(), Some(&region))?;
        if candidates.is_empty() {
            return Err(Error::Contradiction(format!(
                "no repair vector for index {} inside the influence of output {}; \
                 the netlist cannot encode CNOT_{{{},{}}}",
                control + 1,
                beta + 1,
                control + 1,
                target + 1
            )));
        }
        for c in candidates {
            if seen.insert(c.support()) {
                pooled.push(c);
            }
        }
    }
    let groups = extract_disjoint_groups(control, &pooled)?;
    debug_assert!(groups.groups().iter().all(|g| g.weight() <= query_cap));
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn hadamard3() -> LinearCode {
        zoo::make_hadamard(3).unwrap()
    }

    fn bv(s: &str) -> BitVector {
        BitVector::from_bitstring(s).unwrap()
    }

    #[test]
    fn verify_examples() {
        let code = hadamard3();
        // Indicator of the points x = 000 and x = 100.
        assert!(verify_repair_vector(&code, 0, &bv("10001000")));
        assert!(!verify_repair_vector(&code, 0, &BitVector::zeros(8)));
        let rep = zoo::make_repetition(3).unwrap();
        assert!(verify_repair_vector(&rep, 0, &bv("010")));
    }

    #[test]
    fn enumerate_hadamard_weight_two() {
        // Exhausting all supports of weight <= 2 finds the four pairs
        // {x, x + e_1} and the singleton at x = e_1 (position 5, 1-based):
        // that coordinate holds the evaluation at e_1, which is m_1 itself.
        let code = hadamard3();
        let found = enumerate_repair_vectors(&code, 0, 2, None).unwrap();
        let supports: Vec<Vec<usize>> = found.iter().map(|v| v.support()).collect();
        assert_eq!(
            supports,
            vec![vec![4], vec![0, 4], vec![1, 5], vec![2, 6], vec![3, 7]]
        );

        // Cross-check against the brute-force oracle over all supports.
        let mut oracle = Vec::new();
        for a in 0..8 {
            let v = BitVector::from_support(8, &[a]).unwrap();
            if verify_repair_vector(&code, 0, &v) {
                oracle.push(vec![a]);
            }
        }
        for a in 0..8 {
            for b in a + 1..8 {
                let v = BitVector::from_support(8, &[a, b]).unwrap();
                if verify_repair_vector(&code, 0, &v) {
                    oracle.push(vec![a, b]);
                }
            }
        }
        let mut sorted = supports.clone();
        sorted.sort_by_key(|s| (s.len(), s.clone()));
        oracle.sort_by_key(|s| (s.len(), s.clone()));
        assert_eq!(sorted, oracle);
    }

    #[test]
    fn enumerate_repetition_weight_one() {
        let code = zoo::make_repetition(3).unwrap();
        let found = enumerate_repair_vectors(&code, 0, 1, None).unwrap();
        let supports: Vec<Vec<usize>> = found.iter().map(|v| v.support()).collect();
        assert_eq!(supports, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn enumerate_hadamard_weight_one() {
        // Exactly one single coordinate reads m_1: the evaluation point e_1.
        let code = hadamard3();
        let found = enumerate_repair_vectors(&code, 0, 1, None).unwrap();
        let supports: Vec<Vec<usize>> = found.iter().map(|v| v.support()).collect();
        assert_eq!(supports, vec![vec![4]]);
    }

    #[test]
    fn enumerate_routes_agree_on_region() {
        let code = hadamard3();
        let region: BTreeSet<usize> = (0..8).collect();
        let linear = enumerate_repair_vectors(&code, 0, 2, Some(&region)).unwrap();
        let combinatorial = enumerate_repair_vectors(&code, 0, 2, None).unwrap();
        assert_eq!(
            linear.iter().map(|v| v.support()).collect::<Vec<_>>(),
            combinatorial.iter().map(|v| v.support()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn enumerate_capacity_error() {
        let code = zoo::make_hadamard(6).unwrap(); // n = 64
        assert!(matches!(
            enumerate_repair_vectors(&code, 0, 10, None),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn greedy_keeps_disjoint_pairs() {
        let code = hadamard3();
        let pairs: Vec<RepairVector> = [(0usize, 4usize), (1, 5), (2, 6), (3, 7)]
            .iter()
            .map(|&(a, b)| {
                RepairVector::new(0, BitVector::from_support(8, &[a, b]).unwrap())
            })
            .collect();
        let set = extract_disjoint_groups(0, &pairs).unwrap();
        assert_eq!(set.r(), 4);
        assert_eq!(set.q(), 2);
        set.verify(&code).unwrap();
    }

    #[test]
    fn greedy_on_overlapping_candidates() {
        let a = RepairVector::new(0, bv("1100"));
        let b = RepairVector::new(0, bv("0110"));
        let set = extract_disjoint_groups(0, &[a, b]).unwrap();
        assert_eq!(set.r(), 1);
    }

    #[test]
    fn greedy_is_maximal() {
        let code = hadamard3();
        let candidates = enumerate_repair_vectors(&code, 0, 2, None).unwrap();
        let set = extract_disjoint_groups(0, &candidates).unwrap();
        let used = set.covered_vertices();
        let kept: BTreeSet<Vec<usize>> = set.groups().iter().map(|g| g.support()).collect();
        for cand in &candidates {
            if !kept.contains(&cand.support()) {
                assert!(
                    cand.support().iter().any(|p| used.contains(p)),
                    "greedy output is not maximal"
                );
            }
        }
    }

    #[test]
    fn greedy_certificate_for_hadamard() {
        // Greedy takes the weight-1 singleton first, blocking one pair, and
        // still ends with r = 4 disjoint groups of max weight 2.
        let code = hadamard3();
        let candidates = enumerate_repair_vectors(&code, 0, 2, None).unwrap();
        let set = extract_disjoint_groups(0, &candidates).unwrap();
        let supports: Vec<Vec<usize>> = set.groups().iter().map(|g| g.support()).collect();
        assert_eq!(supports, vec![vec![4], vec![1, 5], vec![2, 6], vec![3, 7]]);
    }

    #[test]
    fn empty_candidates_give_empty_set() {
        let set = extract_disjoint_groups(0, &[]).unwrap();
        assert_eq!(set.r(), 0);
        assert_eq!(set.q(), 0);
    }

    #[test]
    fn greedy_within_factor_q_of_exact() {
        let code = hadamard3();
        for i in 0..3 {
            let candidates = enumerate_repair_vectors(&code, i, 2, None).unwrap();
            assert!(candidates.len() <= 12);
            let greedy = extract_disjoint_groups(i, &candidates).unwrap();
            let exact = max_matching_exhaustive(&candidates).unwrap();
            let q = greedy.q().max(1);
            assert!(greedy.r() * q >= exact);
            assert!(greedy.r() <= exact);
        }
    }

    #[test]
    fn certificate_round_trip_and_ratio() {
        let code = hadamard3();
        let cert = extract_certificate(&code, 2).unwrap();
        assert_eq!(cert.global_q(), 2);
        assert_eq!(cert.global_r(), 4);
        cert.verify(&code).unwrap();
        let json = cert.to_json();
        let back = LocalityCertificate::from_json(&json).unwrap();
        assert_eq!(back, cert);
        back.verify(&code).unwrap();
        // k * r^(1/q) / n = 3 * 2 / 8
        assert!((cert.bound_ratio() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn screen_flags_repetition_only() {
        let rep = zoo::make_repetition(3).unwrap();
        let cert = extract_certificate(&rep, 1).unwrap();
        let screen = screen_weight_one(&cert, &rep, 1.0);
        assert_eq!(screen.flagged, vec![0]);
        assert_eq!(screen.k_times_d, Some(3));
        assert_eq!(screen.premise_met, Some(false)); // k*d = n, not above it

        let had = hadamard3();
        let cert = extract_certificate(&had, 2).unwrap();
        let screen = screen_weight_one(&cert, &had, 1.0);
        assert!(screen.flagged.is_empty());
        assert_eq!(screen.k_times_d, Some(12));
        assert_eq!(screen.premise_met, Some(true));

        let rm = zoo::make_rm1(4).unwrap();
        let cert = extract_certificate(&rm, 3).unwrap();
        let screen = screen_weight_one(&cert, &rm, 1.0);
        assert!(screen.flagged.is_empty());
    }

    #[test]
    fn rate_report_excludes_weight_one_regime() {
        let rep = zoo::make_repetition(3).unwrap();
        let rep_cert = extract_certificate(&rep, 1).unwrap();
        let had = hadamard3();
        let had_cert = extract_certificate(&had, 2).unwrap();
        let report = rate_bound_report(&[(&rep, &rep_cert), (&had, &had_cert)]).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].weight_one_excluded);
        assert!(!report.rows[1].weight_one_excluded);
        // k = 3 <= n / d^(1/q) = 8 / 2.
        assert!(report.rows[1].dimension_within_bound().unwrap());
    }

    #[test]
    fn rate_report_warns_on_missing_distance() {
        let rows = vec![bv("00001111"), bv("00110011"), bv("01010101")];
        let code = LinearCode::new("hadamard-3-no-d", rows, None).unwrap();
        let cert = extract_certificate(&code, 2).unwrap();
        let report = rate_bound_report(&[(&code, &cert)]).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn pipeline_rejects_identity_netlist() {
        let code = hadamard3();
        let id = Netlist::identity(8, 8).unwrap();
        assert!(matches!(
            extract_locality_from_gadget(&code, &id, 0, 1),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn pipeline_on_transversal_cnot_over_concatenated_repetition() {
        // Two message bits, each carried by its own repetition block. The
        // encoded CNOT is one transversal CNOT per position pair, and the
        // recovered groups are the d weight-1 readers of the control block.
        let block = 4;
        let code = LinearCode::new(
            "rep-pair-4",
            vec![bv("11110000"), bv("00001111")],
            Some(block),
        )
        .unwrap();
        let layer: Vec<crate::circuit::Gate> = (0..block)
            .map(|p| crate::circuit::Gate::Cnot {
                control: p,
                target: block + p,
            })
            .collect();
        let netlist = Netlist::new(2 * block, 2 * block, vec![layer]).unwrap();
        let groups = extract_locality_from_gadget(&code, &netlist, 0, 1).unwrap();
        assert_eq!(groups.r(), block);
        assert!(groups.groups().iter().all(|g| g.weight() == 1));
        groups.verify(&code).unwrap();
    }
}
