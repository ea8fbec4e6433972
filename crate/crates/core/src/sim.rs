//! Levelized two-valued simulation.
//!
//! The workhorse is [`simulate_words`], which evaluates 64 input vectors at
//! once (one per bit lane). The vector-level functions are thin wrappers.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::netlist::{DagState, Netlist, NodeId};
use crate::BitVec;

/// One value per primary input, in declaration order.
pub type PatternVector = BitVec;

pub const LANES: usize = 64;

/// Vectors of a common width.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternBatch {
    pub vectors: Vec<PatternVector>,
}

impl PatternBatch {
    pub fn new(vectors: Vec<PatternVector>) -> Self {
        PatternBatch { vectors }
    }

    /// Packs `vectors[start..start + 64]` into one word per primary input.
    pub fn pack(&self, start: usize, width: usize) -> Vec<u64> {
        pack_lanes(
            &self.vectors[start..(start + LANES).min(self.vectors.len())],
            width,
        )
    }
}

/// Packs up to 64 vectors; lane `l` carries `vectors[l]`.
pub fn pack_lanes(vectors: &[PatternVector], width: usize) -> Vec<u64> {
    debug_assert!(vectors.len() <= LANES);
    let mut words = vec![0u64; width];
    for (lane, v) in vectors.iter().enumerate() {
        for (i, w) in words.iter_mut().enumerate() {
            if v.get(i) {
                *w |= 1 << lane;
            }
        }
    }
    words
}

fn check_width(netlist: &Netlist, found: usize) -> Result<()> {
    let expected = netlist.inputs().len();
    if expected != found {
        return Err(Error::WidthMismatch { expected, found });
    }
    Ok(())
}

/// Evaluates 64 vectors at once. `inputs[i]` holds the lanes of primary
/// input `i`; the result is indexed by [`NodeId`].
pub fn simulate_words(netlist: &Netlist, inputs: &[u64]) -> Result<Vec<u64>> {
    netlist.ensure_combinational()?;
    check_width(netlist, inputs.len())?;
    let mut values = vec![0u64; netlist.node_count()];
    simulate_words_into(netlist, inputs, &mut values);
    Ok(values)
}

/// As [`simulate_words`] but reuses `values`; the caller guarantees the
/// netlist is combinational and the width is right.
pub(crate) fn simulate_words_into(netlist: &Netlist, inputs: &[u64], values: &mut Vec<u64>) {
    values.resize(netlist.node_count(), 0);
    for (&pi, &w) in netlist.inputs().iter().zip(inputs) {
        values[pi.index()] = w;
    }
    for g in netlist.topo_gates() {
        let v = g
            .kind
            .eval_words(g.inputs.iter().map(|i| values[i.index()]));
        values[g.output.index()] = v;
    }
}

/// Extracts lane `lane` of word-level node values as a [`DagState`].
pub fn lane_state(netlist: &Netlist, values: &[u64], lane: usize) -> DagState {
    let order = netlist.flatten_order().expect("combinational netlist");
    DagState {
        bits: order
            .iter()
            .map(|id| (values[id.index()] >> lane) & 1 == 1)
            .collect(),
    }
}

pub fn simulate(netlist: &Netlist, input: &PatternVector) -> Result<DagState> {
    netlist.ensure_combinational()?;
    check_width(netlist, input.len())?;
    let words: Vec<u64> = input.iter().map(|b| b as u64).collect();
    let values = simulate_words(netlist, &words)?;
    Ok(lane_state(netlist, &values, 0))
}

pub fn simulate_batch(netlist: &Netlist, batch: &PatternBatch) -> Result<Vec<DagState>> {
    netlist.ensure_combinational()?;
    let width = netlist.inputs().len();
    for v in &batch.vectors {
        check_width(netlist, v.len())?;
    }
    let mut out = Vec::with_capacity(batch.vectors.len());
    let mut values = Vec::new();
    for start in (0..batch.vectors.len()).step_by(LANES) {
        let words = batch.pack(start, width);
        simulate_words_into(netlist, &words, &mut values);
        let lanes = (batch.vectors.len() - start).min(LANES);
        out.extend((0..lanes).map(|l| lane_state(netlist, &values, l)));
    }
    Ok(out)
}

/// Primary-output bits of a state, in output declaration order.
pub fn primary_outputs_of(state: &DagState, netlist: &Netlist) -> BitVec {
    netlist
        .outputs()
        .iter()
        .map(|&o| node_value(state, netlist, o))
        .collect()
}

/// Value of one node inside a state.
#[inline]
pub fn node_value(state: &DagState, netlist: &Netlist, id: NodeId) -> bool {
    state.bits.get(netlist.position(id))
}

/// Primary-output words (one per output) for 64 packed vectors.
pub fn output_words(netlist: &Netlist, values: &[u64]) -> Vec<u64> {
    netlist
        .outputs()
        .iter()
        .map(|o| values[o.index()])
        .collect()
}

pub fn random_vector<R: RngCore + ?Sized>(width: usize, rng: &mut R) -> PatternVector {
    let mut v = BitVec::zeros(width);
    let mut word = 0u64;
    for i in 0..width {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        v.set(i, (word >> (i % 64)) & 1 == 1);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    #[test]
    fn and_truth_table() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let s = simulate(&n, &BitVec::from_bools([a, b])).unwrap();
            assert_eq!(
                primary_outputs_of(&s, &n).to_01(),
                if a && b { "1" } else { "0" }
            );
            assert_eq!(s.len(), 3);
        }
    }

    #[test]
    fn xor_with_active_trigger_inverts() {
        let n = parse_bench("INPUT(a)\nINPUT(t)\nOUTPUT(o)\no = XOR(a, t)").unwrap();
        for a in [false, true] {
            let s = simulate(&n, &BitVec::from_bools([a, true])).unwrap();
            assert_eq!(primary_outputs_of(&s, &n).get(0), !a);
        }
    }

    #[test]
    fn width_mismatch() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = OR(a, b)").unwrap();
        assert_eq!(
            simulate(&n, &BitVec::zeros(3)).unwrap_err(),
            Error::WidthMismatch {
                expected: 2,
                found: 3
            }
        );
        assert!(simulate_batch(&n, &PatternBatch::default())
            .unwrap()
            .is_empty());
    }
}
