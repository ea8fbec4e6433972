//! On-chip pattern generation: a one-hot cyclic shift register selects tap
//! columns of an OR-gate network, so the network replays a stored test set.
//!
//! Timing convention: at clock `t` the network emits the column of the stage
//! holding the 1, then the register shifts right by one (the last stage feeds
//! the first). With the 1 starting at stage `k0`, vector `t` of the test set
//! lives in column `(k0 - 1 + t) mod I` (0-based).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::netlist::Netlist;
use crate::sim::{self, PatternVector};
use crate::BitVec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TapMatrix {
    /// Output bits (rows).
    pub width: usize,
    /// `columns[j]` holds the taps of stage `j + 1`.
    pub columns: Vec<BitVec>,
    /// 1-based stage holding the 1 in the initial state.
    pub init_position: usize,
}

impl TapMatrix {
    pub fn sr_length(&self) -> usize {
        self.columns.len()
    }

    pub fn tap(&self, row: usize, stage: usize) -> bool {
        self.columns[stage].get(row)
    }

    pub fn tap_count(&self) -> usize {
        self.columns.iter().map(BitVec::count_ones).sum()
    }

    /// One-hot initial state.
    pub fn init_state(&self) -> BitVec {
        let mut d = BitVec::zeros(self.sr_length());
        d.set(self.init_position - 1, true);
        d
    }

    /// Row-major bit string (row 0 first, stage 1 first within a row).
    pub fn to_row_major(&self) -> String {
        (0..self.width)
            .flat_map(|r| {
                self.columns
                    .iter()
                    .map(move |c| if c.get(r) { '1' } else { '0' })
            })
            .collect()
    }

    pub fn from_row_major(
        width: usize,
        stages: usize,
        init_position: usize,
        bits: &str,
    ) -> Result<TapMatrix> {
        if bits.len() != width * stages || stages == 0 || !(1..=stages).contains(&init_position) {
            return Err(invalid("tap matrix dimensions do not match"));
        }
        let raw = bits.as_bytes();
        let mut columns = vec![BitVec::zeros(width); stages];
        for r in 0..width {
            for (j, col) in columns.iter_mut().enumerate() {
                match raw[r * stages + j] {
                    b'1' => col.set(r, true),
                    b'0' => {}
                    _ => return Err(invalid("tap matrix bits must be 0 or 1")),
                }
            }
        }
        Ok(TapMatrix {
            width,
            columns,
            init_position,
        })
    }
}

/// Places the test set on the register so that starting at `init_position`
/// replays it in order.
pub fn derive_tap_matrix(test_set: &[PatternVector], init_position: usize) -> Result<TapMatrix> {
    let Some(first) = test_set.first() else {
        return Err(invalid("test set is empty"));
    };
    let width = first.len();
    if test_set.iter().any(|v| v.len() != width) {
        return Err(invalid("test vectors differ in width"));
    }
    let i = test_set.len();
    if !(1..=i).contains(&init_position) {
        return Err(invalid("init position out of range"));
    }
    let mut columns = vec![BitVec::zeros(width); i];
    for (t, v) in test_set.iter().enumerate() {
        columns[(init_position - 1 + t) % i] = v.clone();
    }
    Ok(TapMatrix {
        width,
        columns,
        init_position,
    })
}

/// Output of the OR network for an arbitrary register state.
pub fn network_output(tap: &TapMatrix, state: &BitVec) -> BitVec {
    let mut x = BitVec::zeros(tap.width);
    for (j, col) in tap.columns.iter().enumerate() {
        if state.get(j) {
            for r in 0..tap.width {
                if col.get(r) {
                    x.set(r, true);
                }
            }
        }
    }
    x
}

/// Runs the generator for `cycles` clocks from its one-hot initial state.
pub fn simulate_tpg(tap: &TapMatrix, cycles: usize) -> Vec<BitVec> {
    let n = tap.sr_length();
    let mut state = tap.init_state();
    let mut out = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        out.push(network_output(tap, &state));
        let last = state.get(n - 1);
        let mut next = BitVec::zeros(n);
        for j in 1..n {
            next.set(j, state.get(j - 1));
        }
        next.set(0, last);
        state = next;
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// One response analyzer per cluster; clusters run in parallel.
    #[default]
    Distributed,
    /// One shared analyzer; clusters run one after another.
    Centralized,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub tap: TapMatrix,
    /// Test-set index range `start..end`.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    /// Primary-input positions driven by this cluster, ascending.
    pub inputs: Vec<usize>,
    pub tap: TapMatrix,
}

/// Either a chunked plan (segments sharing one register of `ring_length`
/// stages, selected by a counter and a mux per output bit) or a clustered
/// plan (one register per independent input cluster).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TpgPlan {
    pub width: usize,
    pub ring_length: usize,
    pub segments: Vec<Segment>,
    pub clusters: Vec<Cluster>,
    pub mode: Mode,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cost {
    pub ff_count: usize,
    pub or_tap_count: usize,
    pub mux_2to1_count: usize,
    pub cycles_total: usize,
}

impl Cost {
    /// Unit-gate total used to rank plans.
    pub fn scalar(&self) -> usize {
        self.ff_count + self.or_tap_count + self.mux_2to1_count
    }
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Splits the test set into `ceil(I / chunk)` segments replayed one after
/// another by a single register of `chunk` stages.
pub fn plan_chunked(test_set: &[PatternVector], chunk: usize) -> Result<TpgPlan> {
    if test_set.is_empty() {
        return Err(invalid("test set is empty"));
    }
    if chunk == 0 || chunk > test_set.len() {
        return Err(invalid("chunk size must be in 1..=I"));
    }
    let segments = test_set
        .chunks(chunk)
        .enumerate()
        .map(|(k, part)| {
            Ok(Segment {
                tap: derive_tap_matrix(part, 1)?,
                start: k * chunk,
                end: k * chunk + part.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TpgPlan {
        width: test_set[0].len(),
        ring_length: chunk,
        segments,
        clusters: Vec::new(),
        mode: Mode::Centralized,
    })
}

/// Groups primary inputs that share a fanin cone somewhere in the circuit.
pub fn input_clusters(netlist: &Netlist) -> Result<Vec<Vec<usize>>> {
    netlist.ensure_combinational()?;
    let pis = netlist.inputs();
    let mut parent: Vec<usize> = (0..pis.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut rep: Vec<Option<usize>> = vec![None; netlist.node_count()];
    for (k, pi) in pis.iter().enumerate() {
        rep[pi.index()] = Some(k);
    }
    for g in netlist.topo_gates() {
        let mut mine = None;
        for i in &g.inputs {
            if let Some(r) = rep[i.index()] {
                match mine {
                    None => mine = Some(r),
                    Some(m) => {
                        let (a, b) = (find(&mut parent, m), find(&mut parent, r));
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        rep[g.output.index()] = mine;
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; pis.len()];
    for k in 0..pis.len() {
        let root = find(&mut parent, k);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(k);
    }
    Ok(groups)
}

/// One register per input cluster, each replaying its slice of every vector.
pub fn plan_clustered(
    netlist: &Netlist,
    test_set: &[PatternVector],
    mode: Mode,
) -> Result<TpgPlan> {
    if test_set.is_empty() {
        return Err(invalid("test set is empty"));
    }
    let width = netlist.inputs().len();
    if let Some(v) = test_set.iter().find(|v| v.len() != width) {
        return Err(crate::Error::WidthMismatch {
            expected: width,
            found: v.len(),
        });
    }
    let clusters = input_clusters(netlist)?
        .into_iter()
        .map(|inputs| {
            let part: Vec<PatternVector> = test_set
                .iter()
                .map(|v| inputs.iter().map(|&i| v.get(i)).collect())
                .collect();
            Ok(Cluster {
                tap: derive_tap_matrix(&part, 1)?,
                inputs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TpgPlan {
        width,
        ring_length: test_set.len(),
        segments: Vec::new(),
        clusters,
        mode,
    })
}

/// Replays a plan: segments back to back, or clusters merged by input position.
pub fn replay(plan: &TpgPlan) -> Vec<BitVec> {
    if plan.clusters.is_empty() {
        return plan
            .segments
            .iter()
            .flat_map(|s| simulate_tpg(&s.tap, s.end - s.start))
            .collect();
    }
    let mut out = vec![BitVec::zeros(plan.width); plan.ring_length];
    for c in &plan.clusters {
        for (t, x) in simulate_tpg(&c.tap, plan.ring_length)
            .into_iter()
            .enumerate()
        {
            for (k, &pi) in c.inputs.iter().enumerate() {
                out[t].set(pi, x.get(k));
            }
        }
    }
    out
}

pub fn estimate_cost(plan: &TpgPlan) -> Cost {
    if plan.clusters.is_empty() {
        let s = plan.segments.len();
        let counter = ceil_log2(s);
        Cost {
            ff_count: plan.ring_length + counter,
            or_tap_count: plan.segments.iter().map(|x| x.tap.tap_count()).sum(),
            mux_2to1_count: s.saturating_sub(1) * plan.width,
            cycles_total: s * plan.ring_length,
        }
    } else {
        let k = plan.clusters.len();
        let (counter, cycles) = match plan.mode {
            Mode::Distributed => (0, plan.ring_length),
            Mode::Centralized => (ceil_log2(k), k * plan.ring_length),
        };
        Cost {
            ff_count: plan
                .clusters
                .iter()
                .map(|c| c.tap.sr_length())
                .sum::<usize>()
                + counter,
            or_tap_count: plan.clusters.iter().map(|c| c.tap.tap_count()).sum(),
            mux_2to1_count: 0,
            cycles_total: cycles,
        }
    }
}

/// Cost of every chunk size `1..=I`, and the cheapest one (smallest size on ties).
pub fn sweep_chunk_sizes(test_set: &[PatternVector]) -> Result<(Vec<(usize, Cost)>, usize)> {
    let costs = (1..=test_set.len())
        .map(|c| Ok((c, estimate_cost(&plan_chunked(test_set, c)?))))
        .collect::<Result<Vec<_>>>()?;
    let best = costs
        .iter()
        .min_by_key(|(c, cost)| (cost.scalar(), *c))
        .map(|x| x.0)
        .unwrap_or(1);
    Ok((costs, best))
}

/// Response-buffer depth: `ceil(po_count / rom_word_bits)` words per
/// comparison, and whether the response fits one word (no buffer needed).
pub fn size_response_buffer(po_count: usize, rom_word_bits: usize) -> Result<(usize, bool)> {
    if po_count == 0 || rom_word_bits == 0 {
        return Err(invalid("po_count and rom_word_bits must be at least 1"));
    }
    Ok((po_count.div_ceil(rom_word_bits), po_count <= rom_word_bits))
}

/// Golden responses packed into ROM words, `ceil(po / bits)` words per
/// vector; output `i` is bit `i % bits` of word `i / bits`.
pub fn golden_rom(
    netlist: &Netlist,
    test_set: &[PatternVector],
    word_bits: usize,
) -> Result<Vec<u64>> {
    if !(1..=64).contains(&word_bits) {
        return Err(invalid("ROM words must be 1 to 64 bits wide"));
    }
    let states = sim::simulate_batch(netlist, &sim::PatternBatch::new(test_set.to_vec()))?;
    let per = netlist.outputs().len().div_ceil(word_bits);
    let mut words = Vec::with_capacity(per * states.len());
    for s in &states {
        let po = sim::primary_outputs_of(s, netlist);
        for w in 0..per {
            let mut word = 0u64;
            for b in 0..word_bits {
                let i = w * word_bits + b;
                if i < po.len() && po.get(i) {
                    word |= 1 << b;
                }
            }
            words.push(word);
        }
    }
    Ok(words)
}

struct Emitter {
    text: String,
    gates: usize,
}

impl Emitter {
    fn gate(&mut self, out: &str, kind: &str, ins: &[String]) {
        self.text
            .push_str(&format!("{out} = {kind}({})\n", ins.join(", ")));
        self.gates += 1;
    }

    /// OR of `taps` (a BUFF for one tap, a constant 0 for none).
    fn or_net(&mut self, out: &str, taps: &[String], zero_from: &str) {
        match taps.len() {
            0 => self.gate(out, "XOR", &[zero_from.into(), zero_from.into()]),
            1 => self.gate(out, "BUFF", taps),
            _ => self.gate(out, "OR", taps),
        }
    }

    fn ring(&mut self, prefix: &str, n: usize) -> Vec<String> {
        let names: Vec<String> = (1..=n).map(|j| format!("{prefix}s{j}")).collect();
        for j in 0..n {
            let prev = &names[(j + n - 1) % n];
            self.gate(&names[j], "DFF", core::slice::from_ref(prev));
        }
        names
    }
}

/// Structural bench text with DFFs: the register(s), one OR network per
/// output bit and, for chunked plans, a segment counter plus a 2:1 mux tree.
///
/// Outputs are `x0..x{width-1}`. All flip-flops power up as free values;
/// load the one-hot register state (and a zero counter) to replay the plan.
pub fn emit_structural(plan: &TpgPlan) -> String {
    let mut e = Emitter {
        text: String::new(),
        gates: 0,
    };
    let outs: Vec<String> = (0..plan.width).map(|i| format!("x{i}")).collect();
    if plan.clusters.is_empty() {
        let stages = e.ring("", plan.ring_length);
        let s = plan.segments.len();
        let bits = ceil_log2(s);
        let counter: Vec<String> = (0..bits).map(|b| format!("c{b}")).collect();
        if bits > 0 {
            let wrap = stages[plan.ring_length - 1].clone();
            let mut carry = wrap;
            for (b, c) in counter.iter().enumerate() {
                let next = format!("c{b}_next");
                e.gate(&next, "XOR", &[c.clone(), carry.clone()]);
                e.gate(c, "DFF", &[next]);
                if b + 1 < bits {
                    let nc = format!("c{b}_carry");
                    e.gate(&nc, "AND", &[carry, c.clone()]);
                    carry = nc;
                }
            }
            for (b, c) in counter.iter().enumerate() {
                e.gate(&format!("c{b}_n"), "NOT", core::slice::from_ref(c));
            }
        }
        for (i, out) in outs.iter().enumerate() {
            let mut layer: Vec<String> = Vec::with_capacity(s);
            for (k, seg) in plan.segments.iter().enumerate() {
                let taps: Vec<String> = (0..seg.tap.sr_length())
                    .filter(|&j| seg.tap.tap(i, j))
                    .map(|j| stages[j].clone())
                    .collect();
                let name = if s == 1 {
                    out.clone()
                } else {
                    format!("x{i}_g{k}")
                };
                e.or_net(&name, &taps, &stages[0]);
                layer.push(name);
            }
            for (b, c) in counter.iter().enumerate() {
                let mut next = Vec::with_capacity(layer.len().div_ceil(2));
                for (m, pair) in layer.chunks(2).enumerate() {
                    if pair.len() == 1 {
                        next.push(pair[0].clone());
                        continue;
                    }
                    let top = layer.len() <= 2;
                    let name = if top {
                        out.clone()
                    } else {
                        format!("x{i}_m{b}_{m}")
                    };
                    let lo = format!("{name}_lo");
                    let hi = format!("{name}_hi");
                    e.gate(&lo, "AND", &[pair[0].clone(), format!("c{b}_n")]);
                    e.gate(&hi, "AND", &[pair[1].clone(), c.clone()]);
                    e.gate(&name, "OR", &[lo, hi]);
                    next.push(name);
                }
                layer = next;
            }
        }
    } else {
        for (k, c) in plan.clusters.iter().enumerate() {
            let stages = e.ring(&format!("k{k}_"), c.tap.sr_length());
            for (row, &pi) in c.inputs.iter().enumerate() {
                let taps: Vec<String> = (0..c.tap.sr_length())
                    .filter(|&j| c.tap.tap(row, j))
                    .map(|j| stages[j].clone())
                    .collect();
                e.or_net(&outs[pi], &taps, &stages[0]);
            }
        }
    }
    let mut head = format!(
        "# cyclic shift-register pattern generator: {} gates\n",
        e.gates
    );
    for o in &outs {
        head.push_str(&format!("OUTPUT({o})\n"));
    }
    head + &e.text
}
