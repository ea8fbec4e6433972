//! Gate-level netlists in the ISCAS bench dialect.
//!
//! A [`Netlist`] is immutable once built. Node ids are dense and assigned in
//! order of first definition (`INPUT(..)` lines and gate outputs), so two
//! parses of the same text always agree on ids and on [`Netlist::flatten_order`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Dff,
}

impl GateKind {
    pub fn from_keyword(word: &str) -> Option<GateKind> {
        let kind = match word.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "DFF" => GateKind::Dff,
            _ => return None,
        };
        Some(kind)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUFF",
            GateKind::Dff => "DFF",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buf | GateKind::Dff)
    }

    fn arity_ok(self, n: usize) -> bool {
        if self.is_unary() {
            n == 1
        } else {
            n >= 2
        }
    }

    /// Evaluates 64 independent lanes at once.
    ///
    /// Must not be called on [`GateKind::Dff`].
    #[inline]
    pub fn eval_words<I: Iterator<Item = u64>>(self, mut inputs: I) -> u64 {
        let first = inputs.next().unwrap_or(0);
        match self {
            GateKind::And => inputs.fold(first, |a, b| a & b),
            GateKind::Nand => !inputs.fold(first, |a, b| a & b),
            GateKind::Or => inputs.fold(first, |a, b| a | b),
            GateKind::Nor => !inputs.fold(first, |a, b| a | b),
            GateKind::Xor => inputs.fold(first, |a, b| a ^ b),
            GateKind::Xnor => !inputs.fold(first, |a, b| a ^ b),
            GateKind::Not => !first,
            GateKind::Buf => first,
            GateKind::Dff => unreachable!("flip-flops are not combinational"),
        }
    }

    pub fn eval_bits<I: Iterator<Item = bool>>(self, inputs: I) -> bool {
        self.eval_words(inputs.map(|b| if b { !0 } else { 0 })) & 1 == 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NodeId>,
    pub output: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    Undefined(String),
    Duplicate(String),
    UnknownGate(String),
    Cycle(String),
    Arity {
        signal: String,
        kind: GateKind,
        count: usize,
    },
}

/// A netlist construction error; `line` is 1-based, or 0 for netlists built
/// programmatically.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        match &self.kind {
            ParseErrorKind::Syntax(s) => write!(f, "syntax error: {s}"),
            ParseErrorKind::Undefined(s) => write!(f, "undefined signal `{s}`"),
            ParseErrorKind::Duplicate(s) => write!(f, "duplicate definition of `{s}`"),
            ParseErrorKind::UnknownGate(s) => write!(f, "unknown gate kind `{s}`"),
            ParseErrorKind::Cycle(s) => write!(f, "combinational cycle through `{s}`"),
            ParseErrorKind::Arity {
                signal,
                kind,
                count,
            } => {
                write!(f, "{kind} gate `{signal}` has {count} input(s)")
            }
        }
    }
}

/// Node values under one input vector, one bit per node in flatten order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DagState {
    pub bits: crate::BitVec,
}

impl DagState {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Netlist {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
    gates: Vec<Gate>,
    driver: Vec<Option<u32>>,
    levels: Vec<u32>,
    order: Vec<NodeId>,
    position: Vec<u32>,
    topo_gates: Vec<u32>,
    sequential: bool,
}

impl Netlist {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Gates that are not flip-flops.
    pub fn combinational_gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind != GateKind::Dff)
            .count()
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn driver(&self, id: NodeId) -> Option<&Gate> {
        self.driver[id.index()].map(|g| &self.gates[g as usize])
    }

    pub fn level(&self, id: NodeId) -> u32 {
        self.levels[id.index()]
    }

    pub fn is_sequential(&self) -> bool {
        self.sequential
    }

    pub fn is_input(&self, id: NodeId) -> bool {
        self.driver[id.index()].is_none()
    }

    pub fn flip_flops(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| g.kind == GateKind::Dff)
    }

    pub(crate) fn ensure_combinational(&self) -> Result<()> {
        if self.sequential {
            Err(Error::Sequential)
        } else {
            Ok(())
        }
    }

    /// Level-major node order (ties by ascending id): the canonical layout of
    /// a [`DagState`].
    pub fn flatten_order(&self) -> Result<&[NodeId]> {
        self.ensure_combinational()?;
        Ok(&self.order)
    }

    /// Position of `id` inside [`Netlist::flatten_order`].
    #[inline]
    pub fn position(&self, id: NodeId) -> usize {
        self.position[id.index()] as usize
    }

    /// Combinational gates in evaluation order.
    pub fn topo_gates(&self) -> impl ExactSizeIterator<Item = &Gate> + '_ {
        self.topo_gates
            .iter()
            .map(move |&g| &self.gates[g as usize])
    }

    /// For every node, the nodes driven by gates reading it (one entry per pin).
    pub fn fanouts(&self) -> Vec<Vec<NodeId>> {
        let mut fan = vec![Vec::new(); self.node_count()];
        for g in &self.gates {
            for &i in &g.inputs {
                fan[i.index()].push(g.output);
            }
        }
        fan
    }

    /// Marks every node in the combinational transitive fanin of `roots`
    /// (roots included). Flip-flops stop the traversal.
    pub fn transitive_fanin(&self, roots: &[NodeId]) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(n) = stack.pop() {
            if core::mem::replace(&mut seen[n.index()], true) {
                continue;
            }
            if let Some(g) = self.driver(n) {
                if g.kind != GateKind::Dff {
                    stack.extend(g.inputs.iter().copied());
                }
            }
        }
        seen
    }

    /// Canonical bench text: inputs, outputs, then gates by output id.
    pub fn to_bench(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# {} inputs, {} outputs, {} gates\n",
            self.inputs.len(),
            self.outputs.len(),
            self.gates.len()
        ));
        for &i in &self.inputs {
            s.push_str(&format!("INPUT({})\n", self.name(i)));
        }
        for &o in &self.outputs {
            s.push_str(&format!("OUTPUT({})\n", self.name(o)));
        }
        let mut gates: Vec<&Gate> = self.gates.iter().collect();
        gates.sort_by_key(|g| g.output);
        for g in gates {
            let args: Vec<&str> = g.inputs.iter().map(|&i| self.name(i)).collect();
            s.push_str(&format!(
                "{} = {}({})\n",
                self.name(g.output),
                g.kind,
                args.join(", ")
            ));
        }
        s
    }

    /// Replaces every flip-flop by `frames` copies of the combinational logic.
    ///
    /// Frame `k` names its nodes `name@k`. Frame-0 flip-flop outputs become
    /// pseudo primary inputs (listed after all real inputs of all frames);
    /// in frame `k > 0` a flip-flop output is the frame `k - 1` value of its
    /// data input. The outputs of every frame are exposed, frame by frame.
    pub fn unroll_sequential(&self, frames: usize) -> Result<Netlist> {
        if frames == 0 {
            return Err(crate::error::invalid("frames must be at least 1"));
        }
        if !self.sequential {
            return Err(Error::NotSequential);
        }
        let mut b = NetlistBuilder::new();
        let mut prev: Vec<String> = Vec::new();
        let mut pseudo = Vec::new();
        for k in 0..frames {
            let mut map: Vec<String> = self.names.iter().map(|n| format!("{n}@{k}")).collect();
            for g in self.flip_flops() {
                if k > 0 {
                    map[g.output.index()] = prev[g.inputs[0].index()].clone();
                } else {
                    pseudo.push(map[g.output.index()].clone());
                }
            }
            for &i in &self.inputs {
                b.input(&map[i.index()]);
            }
            for &gi in &self.topo_gates {
                let g = &self.gates[gi as usize];
                let ins: Vec<&str> = g.inputs.iter().map(|i| map[i.index()].as_str()).collect();
                b.gate(g.kind, &map[g.output.index()], &ins);
            }
            for &o in &self.outputs {
                b.output(&map[o.index()]);
            }
            prev = map;
        }
        for p in &pseudo {
            b.input(p);
        }
        Ok(b.build()?)
    }
}

/// Parses bench text (`INPUT(x)`, `OUTPUT(y)`, `y = KIND(a, b, ...)`, `#`
/// comments).
pub fn parse_bench(text: &str) -> Result<Netlist, ParseError> {
    let mut b = NetlistBuilder::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        b.line = lineno + 1;
        let syntax = |msg: &str| ParseError {
            line: lineno + 1,
            kind: ParseErrorKind::Syntax(format!("{msg}: `{line}`")),
        };
        if let Some((lhs, rhs)) = line.split_once('=') {
            let out = lhs.trim();
            let rhs = rhs.trim();
            let open = rhs
                .find('(')
                .ok_or_else(|| syntax("expected `KIND(...)`"))?;
            if !rhs.ends_with(')') {
                return Err(syntax("missing `)`"));
            }
            let word = rhs[..open].trim();
            let kind = GateKind::from_keyword(word).ok_or_else(|| ParseError {
                line: lineno + 1,
                kind: ParseErrorKind::UnknownGate(word.to_string()),
            })?;
            if !valid_name(out) {
                return Err(syntax("bad signal name"));
            }
            let args: Vec<&str> = rhs[open + 1..rhs.len() - 1]
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .collect();
            if args.iter().any(|a| !valid_name(a)) {
                return Err(syntax("bad signal name"));
            }
            b.gate(kind, out, &args);
        } else {
            let open = line
                .find('(')
                .ok_or_else(|| syntax("unrecognized statement"))?;
            if !line.ends_with(')') {
                return Err(syntax("missing `)`"));
            }
            let name = line[open + 1..line.len() - 1].trim();
            if !valid_name(name) {
                return Err(syntax("bad signal name"));
            }
            match line[..open].trim().to_ascii_uppercase().as_str() {
                "INPUT" => b.input(name),
                "OUTPUT" => b.output(name),
                _ => return Err(syntax("unrecognized statement")),
            }
        }
    }
    b.build()
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || "(),=#".contains(c))
}

/// Name-based netlist construction; references may precede definitions.
#[derive(Default)]
pub struct NetlistBuilder {
    line: usize,
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    def_line: Vec<usize>,
    inputs: Vec<NodeId>,
    outputs: Vec<(String, usize)>,
    /// (kind, output, operands with their line numbers)
    gates: Vec<(GateKind, NodeId, Vec<Operand>)>,
    first_error: Option<ParseError>,
}

type Operand = (String, usize);

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn define(&mut self, name: &str) -> Option<NodeId> {
        if self.index.contains_key(name) {
            if self.first_error.is_none() {
                self.first_error = Some(ParseError {
                    line: self.line,
                    kind: ParseErrorKind::Duplicate(name.to_string()),
                });
            }
            return None;
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.def_line.push(self.line);
        Some(id)
    }

    pub fn input(&mut self, name: &str) {
        if let Some(id) = self.define(name) {
            self.inputs.push(id);
        }
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push((name.to_string(), self.line));
    }

    pub fn gate(&mut self, kind: GateKind, output: &str, inputs: &[&str]) {
        if let Some(id) = self.define(output) {
            let ins = inputs.iter().map(|s| (s.to_string(), self.line)).collect();
            self.gates.push((kind, id, ins));
        }
    }

    pub fn build(self) -> Result<Netlist, ParseError> {
        if let Some(e) = self.first_error {
            return Err(e);
        }
        let resolve = |(name, line): &(String, usize)| {
            self.index
                .get(name.as_str())
                .copied()
                .ok_or_else(|| ParseError {
                    line: *line,
                    kind: ParseErrorKind::Undefined(name.clone()),
                })
        };
        let mut gates = Vec::with_capacity(self.gates.len());
        for (kind, out, ins) in &self.gates {
            let inputs = ins.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
            gates.push(Gate {
                kind: *kind,
                inputs,
                output: *out,
            });
        }
        let outputs = self
            .outputs
            .iter()
            .map(resolve)
            .collect::<Result<Vec<_>, _>>()?;
        for g in &gates {
            if !g.kind.arity_ok(g.inputs.len()) {
                return Err(ParseError {
                    line: self.def_line[g.output.index()],
                    kind: ParseErrorKind::Arity {
                        signal: self.names[g.output.index()].clone(),
                        kind: g.kind,
                        count: g.inputs.len(),
                    },
                });
            }
        }
        levelize(
            self.names,
            self.index,
            self.inputs,
            outputs,
            gates,
            &self.def_line,
        )
    }
}

fn levelize(
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
    gates: Vec<Gate>,
    def_line: &[usize],
) -> Result<Netlist, ParseError> {
    let n = names.len();
    let mut driver = vec![None; n];
    for (gi, g) in gates.iter().enumerate() {
        driver[g.output.index()] = Some(gi as u32);
    }
    // Kahn over combinational edges; flip-flop outputs are sources.
    let mut pending = vec![0u32; gates.len()];
    let mut readers: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (gi, g) in gates.iter().enumerate() {
        if g.kind == GateKind::Dff {
            continue;
        }
        for &i in &g.inputs {
            let comb_source =
                matches!(driver[i.index()], Some(d) if gates[d as usize].kind != GateKind::Dff);
            if comb_source {
                pending[gi] += 1;
                readers[i.index()].push(gi as u32);
            }
        }
    }
    let mut levels = vec![0u32; n];
    let mut ready: Vec<u32> = (0..gates.len() as u32)
        .filter(|&gi| gates[gi as usize].kind != GateKind::Dff && pending[gi as usize] == 0)
        .collect();
    let mut topo = Vec::with_capacity(gates.len());
    while let Some(gi) = ready.pop() {
        let g = &gates[gi as usize];
        levels[g.output.index()] = 1 + g
            .inputs
            .iter()
            .map(|i| levels[i.index()])
            .max()
            .unwrap_or(0);
        topo.push(gi);
        for &r in &readers[g.output.index()] {
            pending[r as usize] -= 1;
            if pending[r as usize] == 0 {
                ready.push(r);
            }
        }
    }
    let comb = gates.iter().filter(|g| g.kind != GateKind::Dff).count();
    if topo.len() != comb {
        let stuck = gates
            .iter()
            .enumerate()
            .filter(|(gi, g)| g.kind != GateKind::Dff && pending[*gi] > 0)
            .map(|(_, g)| g.output)
            .min()
            .expect("cycle implies a blocked gate");
        return Err(ParseError {
            line: def_line[stuck.index()],
            kind: ParseErrorKind::Cycle(names[stuck.index()].clone()),
        });
    }
    let mut order: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
    order.sort_by_key(|id| (levels[id.index()], *id));
    let mut position = vec![0u32; n];
    for (p, id) in order.iter().enumerate() {
        position[id.index()] = p as u32;
    }
    // Evaluation order follows the flatten order so a single pass suffices.
    let mut topo_gates: Vec<u32> = topo;
    topo_gates.sort_by_key(|&gi| position[gates[gi as usize].output.index()]);
    let sequential = gates.iter().any(|g| g.kind == GateKind::Dff);
    Ok(Netlist {
        names,
        index,
        inputs,
        outputs,
        gates,
        driver,
        levels,
        order,
        position,
        topo_gates,
        sequential,
    })
}
