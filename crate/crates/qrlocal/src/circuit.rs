//! Layered netlists of fan-in/fan-out <= 2 gates, evaluation over
//! {0, 1, erased}, erasure propagation, influence sets, and
//! depth/width/volume accounting.
//!
//! Two erasure-propagation modes are supported. `Blanket` is the worst-case
//! rule: any gate with an erased input erases all of its output wires.
//! `Dataflow` erases an output only when an erased input sits in its
//! functional dependency set; for a CNOT the control output depends only on
//! the control input. For the {NOT, CNOT} gate set both modes are
//! value-independent, so an erasure pattern evolves the same way for every
//! input word.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2core::Symbol;

/// A gate with fan-in and fan-out at most 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Not { wire: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::Not { wire } => vec![wire],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn max_wire(&self) -> usize {
        match *self {
            Gate::Not { wire } => wire,
            Gate::Cnot { control, target } => control.max(target),
        }
    }

    fn shifted(&self, map: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::Not { wire } => Gate::Not { wire: map(wire) },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: map(control),
                target: map(target),
            },
        }
    }
}

impl fmt::Display for Gate {
    // 1-based wires, matching the netlist text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Not { wire } => write!(f, "NOT {}", wire + 1),
            Gate::Cnot { control, target } => write!(f, "CNOT {} {}", control + 1, target + 1),
        }
    }
}

/// Erasure propagation rule used by [`Netlist::evaluate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Blanket,
    Dataflow,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Blanket => "blanket",
            EvalMode::Dataflow => "dataflow",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blanket" => Ok(EvalMode::Blanket),
            "dataflow" => Ok(EvalMode::Dataflow),
            _ => Err(Error::Parse(format!(
                "unknown evaluation mode {s:?}; expected \"blanket\" or \"dataflow\""
            ))),
        }
    }
}

/// A layered circuit over `width` wires. Wires `0..ancilla_from` are data
/// wires; wires `ancilla_from..width` are ancillas that start at 0.
///
/// Within a layer no wire may appear in two gates: each bit participates in
/// at most one gate per time step. Netlists are immutable after construction,
/// so evaluation and analysis are pure and safe to run concurrently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    width: usize,
    ancilla_from: usize,
    layers: Vec<Vec<Gate>>,
}

impl Netlist {
    pub fn new(width: usize, ancilla_from: usize, layers: Vec<Vec<Gate>>) -> Result<Self> {
        let netlist = Netlist {
            width,
            ancilla_from,
            layers,
        };
        netlist.validate()?;
        Ok(netlist)
    }

    /// Netlist with no gates at all.
    pub fn identity(width: usize, ancilla_from: usize) -> Result<Self> {
        Netlist::new(width, ancilla_from, Vec::new())
    }

    /// Re-checks all construction invariants.
    pub fn validate(&self) -> Result<()> {
        if self.ancilla_from > self.width {
            return Err(Error::Dimension(format!(
                "ancilla_from {} exceeds width {}",
                self.ancilla_from, self.width
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = BTreeSet::new();
            for gate in layer {
                if let Gate::Cnot { control, target } = gate {
                    if control == target {
                        return Err(Error::Construction(format!(
                            "layer {}: CNOT control and target coincide on wire {}",
                            l + 1,
                            control + 1
                        )));
                    }
                }
                for w in gate.wires() {
                    if w >= self.width {
                        return Err(Error::Index(format!(
                            "layer {}: wire {} out of range for width {}",
                            l + 1,
                            w + 1,
                            self.width
                        )));
                    }
                    if !used.insert(w) {
                        return Err(Error::Construction(format!(
                            "layer {}: wire {} participates in two gates",
                            l + 1,
                            w + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ancilla_from(&self) -> usize {
        self.ancilla_from
    }

    pub fn ancilla_count(&self) -> usize {
        self.width - self.ancilla_from
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn volume(&self) -> usize {
        self.width * self.depth()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    /// Layer-by-layer evaluation of a full-width input word.
    pub fn evaluate(&self, input: &[Symbol], mode: EvalMode) -> Result<Vec<Symbol>> {
        if input.len() != self.width {
            return Err(Error::Dimension(format!(
                "input length {} does not match width {}",
                input.len(),
                self.width
            )));
        }
        let mut state = input.to_vec();
        for layer in &self.layers {
            // Wires within a layer are disjoint, so in-place update is safe.
            for gate in layer {
                match *gate {
                    Gate::Not { wire } => {
                        state[wire] = match state[wire] {
                            Symbol::Zero => Symbol::One,
                            Symbol::One => Symbol::Zero,
                            Symbol::Erased => Symbol::Erased,
                        };
                    }
                    Gate::Cnot { control, target } => {
                        let c = state[control];
                        let t = state[target];
                        match mode {
                            EvalMode::Blanket => {
                                if c.is_erased() || t.is_erased() {
                                    state[control] = Symbol::Erased;
                                    state[target] = Symbol::Erased;
                                } else {
                                    state[target] = t.xor(c);
                                }
                            }
                            EvalMode::Dataflow => {
                                state[target] = t.xor(c);
                            }
                        }
                    }
                }
            }
        }
        Ok(state)
    }

    /// Evaluates a data-wire word, padding the ancilla wires with 0.
    pub fn evaluate_data(&self, data: &[Symbol], mode: EvalMode) -> Result<Vec<Symbol>> {
        if data.len() != self.ancilla_from {
            return Err(Error::Dimension(format!(
                "data length {} does not match data width {}",
                data.len(),
                self.ancilla_from
            )));
        }
        let mut input = data.to_vec();
        input.resize(self.width, Symbol::Zero);
        self.evaluate(&input, mode)
    }

    /// Input wires with a gate-graph path to output `beta`, where every gate
    /// connects each of its inputs to each of its outputs.
    pub fn influence(&self, beta: usize) -> Result<InfluenceSet> {
        if beta >= self.width {
            return Err(Error::Index(format!(
                "output wire {} out of range for width {}",
                beta + 1,
                self.width
            )));
        }
        let mut members: BTreeSet<usize> = BTreeSet::from([beta]);
        for layer in self.layers.iter().rev() {
            let mut next = BTreeSet::new();
            for &w in &members {
                match layer.iter().find(|g| g.wires().contains(&w)) {
                    Some(gate) => next.extend(gate.wires()),
                    None => {
                        next.insert(w);
                    }
                }
            }
            members = next;
        }
        if self.depth() < usize::BITS as usize {
            debug_assert!(members.len() <= 1 << self.depth());
        }
        Ok(InfluenceSet { beta, members })
    }

    /// Exact erased set after blanket-mode evaluation with erasures on `E`.
    /// Input values are immaterial: blanket propagation is value-independent.
    ///
    /// Asserts the growth law |F| <= 2^depth * |E|.
    pub fn erasure_growth_bound(&self, erased: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        if let Some(&max) = erased.iter().next_back() {
            if max >= self.width {
                return Err(Error::Index(format!(
                    "erasure position {} out of range for width {}",
                    max + 1,
                    self.width
                )));
            }
        }
        let mut current = erased.clone();
        for layer in &self.layers {
            let mut next = current.clone();
            for gate in layer {
                let wires = gate.wires();
                if wires.iter().any(|w| current.contains(w)) {
                    next.extend(wires);
                }
            }
            current = next;
        }
        if let Some(bound) = 1usize
            .checked_shl(self.depth().min(u32::MAX as usize) as u32)
            .and_then(|g| g.checked_mul(erased.len()))
        {
            assert!(
                current.len() <= bound,
                "erasure growth exceeded 2^depth * |E|"
            );
        }
        Ok(current)
    }

    /// Sequential composition: `self` runs first, then `other`. Depth adds,
    /// width maxes. Both operands must agree on the data/ancilla boundary.
    pub fn compose(&self, other: &Netlist) -> Result<Netlist> {
        if self.ancilla_from != other.ancilla_from {
            return Err(Error::Dimension(format!(
                "compose: data widths differ ({} vs {})",
                self.ancilla_from, other.ancilla_from
            )));
        }
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().cloned());
        Netlist::new(self.width.max(other.width), self.ancilla_from, layers)
    }

    /// Parallel composition on disjoint wire blocks: width adds, depth maxes.
    /// Wires are renumbered so both data blocks precede both ancilla blocks.
    pub fn tensor(&self, other: &Netlist) -> Result<Netlist> {
        let (da, db) = (self.ancilla_from, other.ancilla_from);
        let map_a = |w: usize| if w < da { w } else { db + w };
        let map_b = move |w: usize| {
            if w < db {
                da + w
            } else {
                da + self.width + w - db
            }
        };
        let depth = self.depth().max(other.depth());
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let mut layer = Vec::new();
            if let Some(gates) = self.layers.get(l) {
                layer.extend(gates.iter().map(|g| g.shifted(map_a)));
            }
            if let Some(gates) = other.layers.get(l) {
                layer.extend(gates.iter().map(|g| g.shifted(map_b)));
            }
            layers.push(layer);
        }
        Netlist::new(self.width + other.width, da + db, layers)
    }

    /// Netlist text format, 1-based:
    ///
    /// ```text
    /// width=12 ancilla_from=9
    /// 1: CNOT 1 9; CNOT 2 10
    /// 2: NOT 3
    /// ```
    ///
    /// `ancilla_from` in the header is the 1-based index of the first
    /// ancilla wire; a netlist with no ancillas writes `width + 1`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "width={} ancilla_from={}\n",
            self.width,
            self.ancilla_from + 1
        );
        for (l, layer) in self.layers.iter().enumerate() {
            let gates = layer
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            if gates.is_empty() {
                out.push_str(&format!("{}:\n", l + 1));
            } else {
                out.push_str(&format!("{}: {}\n", l + 1, gates));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty netlist text".into()))?;
        let mut width = None;
        let mut ancilla_from = None;
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header token {token:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad header value in {token:?}")))?;
            match key {
                "width" => width = Some(value),
                "ancilla_from" => ancilla_from = Some(value),
                _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
            }
        }
        let width = width.ok_or_else(|| Error::Parse("header missing width".into()))?;
        let ancilla_from =
            ancilla_from.ok_or_else(|| Error::Parse("header missing ancilla_from".into()))?;
        if ancilla_from == 0 {
            return Err(Error::Parse("ancilla_from is 1-based and must be >= 1".into()));
        }

        let mut layers = Vec::new();
        for line in lines {
            let (label, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("layer line missing ':': {line:?}")))?;
            let label: usize = label
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad layer label {label:?}")))?;
            if label != layers.len() + 1 {
                return Err(Error::Parse(format!(
                    "layer labels must be sequential; expected {}, found {label}",
                    layers.len() + 1
                )));
            }
            let mut gates = Vec::new();
            for part in rest.split(';') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                gates.push(parse_gate(part)?);
            }
            layers.push(gates);
        }
        Netlist::new(width, ancilla_from - 1, layers)
    }
}

fn parse_wire(token: &str) -> Result<usize> {
    let w: usize = token
        .parse()
        .map_err(|_| Error::Parse(format!("bad wire index {token:?}")))?;
    if w == 0 {
        return Err(Error::Parse("wire indices are 1-based".into()));
    }
    Ok(w - 1)
}

fn parse_gate(text: &str) -> Result<Gate> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.as_slice() {
        ["NOT", w] => Ok(Gate::Not {
            wire: parse_wire(w)?,
        }),
        ["CNOT", c, t] => Ok(Gate::Cnot {
            control: parse_wire(c)?,
            target: parse_wire(t)?,
        }),
        _ => Err(Error::Parse(format!("unrecognized gate {text:?}"))),
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Netlist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Netlist::from_text(s)
    }
}

/// Input wires that can reach output wire `beta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfluenceSet {
    pub beta: usize,
    pub members: BTreeSet<usize>,
}

/// Sparse ideal-circuit text format: one `CNOT i j` line per time step, with
/// 1-based message indices. Returns 0-based (control, target) pairs.
pub fn parse_sparse_circuit(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut steps = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["CNOT", i, j] => steps.push((parse_wire(i)?, parse_wire(j)?)),
            _ => {
                return Err(Error::Parse(format!(
                    "sparse circuits hold one \"CNOT i j\" per line, found {line:?}"
                )))
            }
        }
    }
    Ok(steps)
}

pub fn sparse_circuit_to_text(steps: &[(usize, usize)]) -> String {
    steps
        .iter()
        .map(|&(i, j)| format!("CNOT {} {}\n", i + 1, j + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Vec<Symbol> {
        s.chars().map(|c| Symbol::from_char(c).unwrap()).collect()
    }

    fn single_cnot() -> Netlist {
        Netlist::new(
            2,
            2,
            vec![vec![Gate::Cnot {
                control: 0,
                target: 1,
            }]],
        )
        .unwrap()
    }

    #[test]
    fn cnot_truth_table() {
        let n = single_cnot();
        assert_eq!(n.evaluate(&sym("10"), EvalMode::Blanket).unwrap(), sym("11"));
        assert_eq!(n.evaluate(&sym("11"), EvalMode::Blanket).unwrap(), sym("10"));
        assert_eq!(n.evaluate(&sym("01"), EvalMode::Dataflow).unwrap(), sym("01"));
    }

    #[test]
    fn erased_control_erases_both_outputs_in_both_modes() {
        let n = single_cnot();
        for mode in [EvalMode::Blanket, EvalMode::Dataflow] {
            assert_eq!(n.evaluate(&sym("?0"), mode).unwrap(), sym("??"));
        }
    }

    #[test]
    fn erased_target_differs_by_mode() {
        let n = single_cnot();
        assert_eq!(n.evaluate(&sym("1?"), EvalMode::Blanket).unwrap(), sym("??"));
        assert_eq!(n.evaluate(&sym("1?"), EvalMode::Dataflow).unwrap(), sym("1?"));
    }

    #[test]
    fn evaluate_checks_width() {
        let n = single_cnot();
        assert!(matches!(
            n.evaluate(&sym("100"), EvalMode::Blanket),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn layer_legality_enforced() {
        let bad = Netlist::new(
            3,
            3,
            vec![vec![
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::Not { wire: 1 },
            ]],
        );
        assert!(matches!(bad, Err(Error::Construction(_))));
        let degenerate = Netlist::new(
            2,
            2,
            vec![vec![Gate::Cnot {
                control: 1,
                target: 1,
            }]],
        );
        assert!(matches!(degenerate, Err(Error::Construction(_))));
    }

    #[test]
    fn influence_of_cnot_target() {
        let n = single_cnot();
        assert_eq!(
            n.influence(1).unwrap().members,
            BTreeSet::from([0, 1])
        );
    }

    #[test]
    fn influence_of_identity_is_self() {
        let n = Netlist::identity(4, 4).unwrap();
        assert_eq!(n.influence(2).unwrap().members, BTreeSet::from([2]));
    }

    #[test]
    fn growth_examples() {
        let n = single_cnot();
        assert_eq!(
            n.erasure_growth_bound(&BTreeSet::from([0])).unwrap(),
            BTreeSet::from([0, 1])
        );
        assert!(n.erasure_growth_bound(&BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn growth_monotone_and_dataflow_subset_blanket() {
        // Three layers over 4 wires.
        let n = Netlist::new(
            4,
            4,
            vec![
                vec![Gate::Cnot { control: 0, target: 1 }, Gate::Not { wire: 3 }],
                vec![Gate::Cnot { control: 1, target: 2 }],
                vec![Gate::Cnot { control: 3, target: 0 }],
            ],
        )
        .unwrap();
        let e1 = BTreeSet::from([0]);
        let e2 = BTreeSet::from([0, 3]);
        let f1 = n.erasure_growth_bound(&e1).unwrap();
        let f2 = n.erasure_growth_bound(&e2).unwrap();
        assert!(f1.is_subset(&f2));

        // Dataflow-erased output positions are a subset of blanket ones.
        for e in [&e1, &e2] {
            let input: Vec<Symbol> = (0..4)
                .map(|i| {
                    if e.contains(&i) {
                        Symbol::Erased
                    } else {
                        Symbol::Zero
                    }
                })
                .collect();
            let df = n.evaluate(&input, EvalMode::Dataflow).unwrap();
            let bl = n.evaluate(&input, EvalMode::Blanket).unwrap();
            for (d, b) in df.iter().zip(&bl) {
                if d.is_erased() {
                    assert!(b.is_erased());
                }
            }
            // Blanket evaluation erases exactly the growth-bound set.
            let f = n.erasure_growth_bound(e).unwrap();
            for (i, s) in bl.iter().enumerate() {
                assert_eq!(s.is_erased(), f.contains(&i));
            }
        }
    }

    #[test]
    fn compose_and_tensor_accounting() {
        let a = Netlist::new(
            3,
            3,
            vec![
                vec![Gate::Cnot { control: 0, target: 1 }],
                vec![Gate::Cnot { control: 1, target: 2 }],
            ],
        )
        .unwrap();
        let b = Netlist::new(
            3,
            3,
            vec![
                vec![Gate::Not { wire: 0 }],
                vec![Gate::Not { wire: 1 }],
                vec![Gate::Not { wire: 2 }],
            ],
        )
        .unwrap();
        let c = a.compose(&b).unwrap();
        assert_eq!(c.depth(), 5);
        assert_eq!(c.width(), 3);

        let t = a.tensor(&b).unwrap();
        assert_eq!(t.width(), 6);
        assert_eq!(t.depth(), 3);

        // compose(identity, n) acts like n on all inputs.
        let id = Netlist::identity(3, 3).unwrap();
        let composed = id.compose(&a).unwrap();
        for bits in 0..8u32 {
            let input: Vec<Symbol> = (0..3).map(|i| Symbol::from_bit(bits >> i & 1 == 1)).collect();
            assert_eq!(
                composed.evaluate(&input, EvalMode::Blanket).unwrap(),
                a.evaluate(&input, EvalMode::Blanket).unwrap()
            );
        }
    }

    #[test]
    fn tensor_renumbers_ancillas_after_data() {
        // Both operands have one ancilla; the tensor keeps data wires first.
        let a = Netlist::new(2, 1, vec![vec![Gate::Cnot { control: 0, target: 1 }]]).unwrap();
        let b = Netlist::new(2, 1, vec![vec![Gate::Cnot { control: 0, target: 1 }]]).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.width(), 4);
        assert_eq!(t.ancilla_from(), 2);
        // Data wires 0 and 1 feed ancillas 2 and 3 respectively.
        let out = t
            .evaluate(&sym("1100"), EvalMode::Blanket)
            .unwrap();
        assert_eq!(out, sym("1111"));
    }

    #[test]
    fn influence_matches_growth_cross_check() {
        let n = Netlist::new(
            5,
            5,
            vec![
                vec![Gate::Cnot { control: 0, target: 1 }, Gate::Cnot { control: 2, target: 3 }],
                vec![Gate::Cnot { control: 1, target: 2 }, Gate::Not { wire: 4 }],
            ],
        )
        .unwrap();
        for beta in 0..5 {
            let inf = n.influence(beta).unwrap().members;
            let via_growth: BTreeSet<usize> = (0..5)
                .filter(|&x| {
                    n.erasure_growth_bound(&BTreeSet::from([x]))
                        .unwrap()
                        .contains(&beta)
                })
                .collect();
            assert_eq!(inf, via_growth);
        }
    }

    #[test]
    fn text_round_trip() {
        let n = Netlist::new(
            4,
            3,
            vec![
                vec![Gate::Cnot { control: 0, target: 3 }, Gate::Not { wire: 1 }],
                vec![],
                vec![Gate::Cnot { control: 3, target: 2 }],
            ],
        )
        .unwrap();
        let text = n.to_text();
        assert!(text.starts_with("width=4 ancilla_from=4\n"));
        let back = Netlist::from_text(&text).unwrap();
        assert_eq!(back, n);
    }

    #[test]
    fn sparse_circuit_round_trip() {
        let text = "CNOT 1 2\nCNOT 3 1\n";
        let steps = parse_sparse_circuit(text).unwrap();
        assert_eq!(steps, vec![(0, 1), (2, 0)]);
        assert_eq!(sparse_circuit_to_text(&steps), text);
        assert!(parse_sparse_circuit("XOR 1 2").is_err());
    }
}
