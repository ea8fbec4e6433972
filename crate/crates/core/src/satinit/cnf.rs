use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::netlist::{GateKind, Netlist, NodeId};

/// A CNF formula with DIMACS-style literals: variable `v` (1-based) is `v`,
/// its negation `-v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub variable_count: usize,
    pub clauses: Vec<Vec<i32>>,
    /// DIMACS variable of each node, indexed by [`NodeId`].
    pub node_var: Vec<i32>,
}

impl Cnf {
    /// Literal asserting that `node` takes `value`.
    pub fn lit(&self, node: NodeId, value: bool) -> i32 {
        let v = self.node_var[node.index()];
        if value {
            v
        } else {
            -v
        }
    }

    fn fresh(&mut self) -> i32 {
        self.variable_count += 1;
        self.variable_count as i32
    }

    /// True if `values` (indexed by variable − 1) satisfies every clause.
    pub fn satisfied_by(&self, values: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|&l| values[l.unsigned_abs() as usize - 1] == (l > 0))
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.variable_count, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                s.push_str(&format!("{l} "));
            }
            s.push_str("0\n");
        }
        s
    }
}

/// Tseitin encoding. Node `i` gets variable `i + 1`; n-ary XOR/XNOR gates are
/// chained through auxiliary variables numbered after the nodes.
pub fn encode_cnf(netlist: &Netlist) -> Result<Cnf> {
    netlist.ensure_combinational()?;
    let n = netlist.node_count();
    let mut cnf = Cnf {
        variable_count: n,
        clauses: Vec::new(),
        node_var: (1..=n as i32).collect(),
    };
    let mut gates: Vec<_> = netlist.gates().iter().collect();
    gates.sort_by_key(|g| g.output);
    for g in gates {
        let c = cnf.node_var[g.output.index()];
        let ins: Vec<i32> = g.inputs.iter().map(|i| cnf.node_var[i.index()]).collect();
        // AND-like gates: out = pol_out(AND over pol_in(inputs)).
        let and_like = |cnf: &mut Cnf, out: i32, inv_in: bool| {
            let lit = |a: i32| if inv_in { -a } else { a };
            for &a in &ins {
                cnf.clauses.push(vec![-out, lit(a)]);
            }
            let mut big = vec![out];
            big.extend(ins.iter().map(|&a| -lit(a)));
            cnf.clauses.push(big);
        };
        match g.kind {
            GateKind::And => and_like(&mut cnf, c, false),
            GateKind::Nand => and_like(&mut cnf, -c, false),
            GateKind::Or => and_like(&mut cnf, -c, true),
            GateKind::Nor => and_like(&mut cnf, c, true),
            GateKind::Not => {
                cnf.clauses.push(vec![-c, -ins[0]]);
                cnf.clauses.push(vec![c, ins[0]]);
            }
            GateKind::Buf => {
                cnf.clauses.push(vec![-c, ins[0]]);
                cnf.clauses.push(vec![c, -ins[0]]);
            }
            GateKind::Xor | GateKind::Xnor => {
                let mut acc = ins[0];
                for (k, &b) in ins.iter().enumerate().skip(1) {
                    let out = if k + 1 == ins.len() {
                        if g.kind == GateKind::Xor {
                            c
                        } else {
                            -c
                        }
                    } else {
                        cnf.fresh()
                    };
                    xor2(&mut cnf, out, acc, b);
                    acc = out;
                }
            }
            GateKind::Dff => unreachable!(),
        }
    }
    Ok(cnf)
}

fn xor2(cnf: &mut Cnf, c: i32, a: i32, b: i32) {
    cnf.clauses.push(vec![-c, a, b]);
    cnf.clauses.push(vec![-c, -a, -b]);
    cnf.clauses.push(vec![c, -a, b]);
    cnf.clauses.push(vec![c, a, -b]);
}
