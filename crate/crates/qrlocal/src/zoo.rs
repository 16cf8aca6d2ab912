//! Built-in code families with known locality structure, used as fixtures
//! for the gadget suite and the rate-bound audit.

use crate::error::{Error, Result};
use crate::f2core::{BitVector, LinearCode};

/// A code family with per-parameter constructors and known (q, r, d)
/// metadata. The metadata is validated against brute force on the smallest
/// members by the test suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// [n, 1, n]: one all-ones generator row.
    Repetition,
    /// [2^k, k, 2^(k-1)]: row i evaluates x -> x_i over F2^k in
    /// lexicographic order (x_1 is the leftmost, most significant bit).
    Hadamard,
    /// First-order Reed-Muller RM(1, m) = [2^m, m+1, 2^(m-1)]: the Hadamard
    /// rows plus the all-ones row. Every basis codeword has weight
    /// 2^(m-1) or 2^m, on the order of the distance.
    ReedMuller1,
}

pub const FAMILIES: [Family; 3] = [Family::Repetition, Family::Hadamard, Family::ReedMuller1];

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Repetition => "repetition",
            Family::Hadamard => "hadamard",
            Family::ReedMuller1 => "rm1",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        FAMILIES
            .iter()
            .copied()
            .find(|f| f.name() == name)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown family {name:?}; known: repetition, hadamard, rm1"
                ))
            })
    }

    pub fn parameter_range(&self) -> (usize, usize) {
        match self {
            Family::Repetition => (1, 4096),
            Family::Hadamard => (2, 12),
            Family::ReedMuller1 => (2, 12),
        }
    }

    pub fn code(&self, param: usize) -> Result<LinearCode> {
        match self {
            Family::Repetition => make_repetition(param),
            Family::Hadamard => make_hadamard(param),
            Family::ReedMuller1 => make_rm1(param),
        }
    }

    /// Distance formula for the family.
    pub fn declared_distance(&self, param: usize) -> usize {
        match self {
            Family::Repetition => param,
            Family::Hadamard | Family::ReedMuller1 => 1 << (param - 1),
        }
    }

    /// Known (q, r) certificate shape, where a closed form exists. RM(1, m)
    /// has none: its constant bit is read by one singleton and a packing of
    /// triples, and the extraction pipeline is the ground truth there.
    pub fn known_locality(&self, param: usize) -> Option<(usize, usize)> {
        match self {
            Family::Repetition => Some((1, param)),
            Family::Hadamard => Some((2, 1 << (param - 1))),
            Family::ReedMuller1 => None,
        }
    }

    /// Max repair-vector weight that suffices to certify the family.
    pub fn certificate_weight(&self) -> usize {
        match self {
            Family::Repetition => 1,
            Family::Hadamard => 2,
            Family::ReedMuller1 => 3,
        }
    }

    fn check_param(&self, param: usize) -> Result<()> {
        let (lo, hi) = self.parameter_range();
        if param < lo || param > hi {
            return Err(Error::Usage(format!(
                "{} parameter {param} outside {lo}..={hi}",
                self.name()
            )));
        }
        Ok(())
    }
}

pub fn make_repetition(n: usize) -> Result<LinearCode> {
    Family::Repetition.check_param(n)?;
    let row = BitVector::from_support(n, &(0..n).collect::<Vec<_>>())?;
    LinearCode::new(format!("repetition-{n}"), vec![row], Some(n))
}

fn hadamard_rows(k: usize) -> Vec<BitVector> {
    let n = 1usize << k;
    (0..k)
        .map(|i| {
            let mut row = BitVector::zeros(n);
            for p in 0..n {
                // Position p encodes the evaluation point x with x_1 as the
                // most significant bit, so x_i = bit (k - 1 - i) of p.
                if p >> (k - 1 - i) & 1 == 1 {
                    row.set(p, true);
                }
            }
            row
        })
        .collect()
}

pub fn make_hadamard(k: usize) -> Result<LinearCode> {
    Family::Hadamard.check_param(k)?;
    LinearCode::new(
        format!("hadamard-{k}"),
        hadamard_rows(k),
        Some(1 << (k - 1)),
    )
}

pub fn make_rm1(m: usize) -> Result<LinearCode> {
    Family::ReedMuller1.check_param(m)?;
    let n = 1usize << m;
    let mut rows = hadamard_rows(m);
    rows.push(BitVector::from_support(n, &(0..n).collect::<Vec<_>>())?);
    LinearCode::new(format!("rm1-{m}"), rows, Some(1 << (m - 1)))
}
