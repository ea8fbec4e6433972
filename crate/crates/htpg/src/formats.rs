//! On-disk formats: profile JSON, pattern files, trace and report CSV,
//! Trojan specs, tap matrices and ROM images.

use std::path::Path;

use htpg_core::eval::DetectionReport;
use htpg_core::hwgen::{Cost, TapMatrix, TpgPlan};
use htpg_core::netlist::{parse_bench, Netlist, NodeId};
use htpg_core::profile::{Profile, RareNode, Scoap};
use htpg_core::tpg::TracePoint;
use htpg_core::trojan::{TriggerLiteral, TrojanSpec};
use htpg_core::BitVec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Parses a bench file, unrolling it when `frames` is given. A sequential
/// netlist without `frames` is rejected.
pub fn load_netlist(path: &Path, frames: Option<usize>) -> Result<Netlist> {
    let text = read_text(path)?;
    let n = parse_bench(&text).map_err(|source| CliError::Netlist {
        path: path.into(),
        source,
    })?;
    match frames {
        Some(f) if n.is_sequential() => Ok(n.unroll_sequential(f)?),
        Some(_) => Err(CliError::data(
            path,
            "--unroll given but the netlist has no flip-flops",
        )),
        None if n.is_sequential() => Err(CliError::data(
            path,
            "netlist is sequential; pass --unroll <frames>",
        )),
        None => Ok(n),
    }
}

/// Stem of a file name, used as the circuit name in reports.
pub fn circuit_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Config {
        path: path.into(),
        msg: e.to_string(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    name: String,
    p_one: f64,
    p_trans: f64,
    cc0: u64,
    cc1: u64,
    /// `null` when no primary output is reachable.
    co: Option<u64>,
    rare: bool,
    rare_value: Option<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    circuit: String,
    theta: f64,
    trials: usize,
    seed: u64,
    rare_count: usize,
    nodes: Vec<NodeDoc>,
}

pub fn profile_to_json(circuit: &str, netlist: &Netlist, p: &Profile) -> String {
    let rare: std::collections::HashMap<NodeId, &RareNode> =
        p.rare_set.iter().map(|r| (r.node, r)).collect();
    let nodes = (0..netlist.node_count())
        .map(|i| {
            let s = p.scoap[i];
            let r = rare.get(&NodeId(i as u32));
            NodeDoc {
                name: netlist.name(NodeId(i as u32)).into(),
                p_one: p.p_one[i],
                p_trans: p.p_trans[i],
                cc0: s.cc0,
                cc1: s.cc1,
                co: s.is_observable().then_some(s.co),
                rare: r.is_some(),
                rare_value: r.map(|r| r.rare_value as u8),
            }
        })
        .collect();
    to_json(&ProfileDoc {
        circuit: circuit.into(),
        theta: p.theta,
        trials: p.trials,
        seed: p.seed,
        rare_count: p.rare_set.len(),
        nodes,
    })
}

pub fn profile_from_json(path: &Path, text: &str, netlist: &Netlist) -> Result<Profile> {
    let doc: ProfileDoc = from_json(path, text)?;
    if doc.nodes.len() != netlist.node_count() {
        return Err(CliError::data(
            path,
            "profile does not match the netlist (node count)",
        ));
    }
    let n = netlist.node_count();
    let (mut p_one, mut p_trans, mut scoap) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![
            Scoap {
                cc0: 1,
                cc1: 1,
                co: 0
            };
            n
        ],
    );
    let mut rare_set = Vec::new();
    for d in doc.nodes {
        let id = netlist.id(&d.name).ok_or_else(|| {
            CliError::data(path, format!("profile names unknown node `{}`", d.name))
        })?;
        p_one[id.index()] = d.p_one;
        p_trans[id.index()] = d.p_trans;
        scoap[id.index()] = Scoap {
            cc0: d.cc0,
            cc1: d.cc1,
            co: d.co.unwrap_or(Scoap::UNOBSERVABLE),
        };
        if d.rare {
            let rv = d.rare_value.ok_or_else(|| {
                CliError::data(path, format!("rare node `{}` lacks rare_value", d.name))
            })?;
            rare_set.push(RareNode {
                node: id,
                rare_value: rv == 1,
                p_one: d.p_one,
                p_trans: d.p_trans,
            });
        }
    }
    rare_set.sort_by_key(|r| r.node);
    Ok(Profile {
        p_one,
        p_trans,
        rare_set,
        scoap,
        theta: doc.theta,
        trials: doc.trials,
        seed: doc.seed,
    })
}

/// One `0`/`1` row per vector.
pub fn write_patterns(vectors: &[BitVec]) -> String {
    let mut s = String::with_capacity(vectors.len() * (vectors.first().map_or(0, |v| v.len()) + 1));
    for v in vectors {
        s.push_str(&v.to_01());
        s.push('\n');
    }
    s
}

/// Reads a pattern file; `#` lines and blank lines are skipped. With `width`
/// every row must have that many bits.
pub fn read_patterns(path: &Path, text: &str, width: Option<usize>) -> Result<Vec<BitVec>> {
    let mut out: Vec<BitVec> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = BitVec::from_01(line).ok_or_else(|| {
            CliError::data(
                path,
                format!("line {}: pattern rows hold only 0 and 1", k + 1),
            )
        })?;
        let want = width.or(out.first().map(BitVec::len)).unwrap_or(v.len());
        if v.len() != want {
            return Err(CliError::data(
                path,
                format!("line {}: expected {want} bits, found {}", k + 1, v.len()),
            ));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in trace {
        w.serialize(t).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

#[derive(Serialize)]
struct ReportRow<'a> {
    circuit: &'a str,
    method: &'a str,
    test_vectors: f64,
    evaluated_vectors: f64,
    generation_time_s: f64,
    trigger_coverage_pct: f64,
    trojan_coverage_pct: f64,
    full_trigger_pct: f64,
}

pub fn report_csv(reports: &[DetectionReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(ReportRow {
            circuit: &r.circuit,
            method: r.method.name(),
            test_vectors: r.test_vector_count,
            evaluated_vectors: r.evaluated_vector_count,
            generation_time_s: r.generation_time_seconds,
            trigger_coverage_pct: r.trigger_coverage_pct,
            trojan_coverage_pct: r.trojan_coverage_pct,
            full_trigger_pct: r.full_trigger_pct,
        })
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LiteralDoc {
    pub node: String,
    pub value: u8,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrojanDoc {
    pub id: String,
    pub trigger: Vec<LiteralDoc>,
    pub payload: String,
}

pub fn trojan_doc(netlist: &Netlist, t: &TrojanSpec) -> TrojanDoc {
    TrojanDoc {
        id: t.id.clone(),
        trigger: t
            .trigger
            .iter()
            .map(|l| LiteralDoc {
                node: netlist.name(l.node).into(),
                value: l.value as u8,
            })
            .collect(),
        payload: netlist.name(t.payload).into(),
    }
}

pub fn trojan_from_doc(path: &Path, netlist: &Netlist, d: &TrojanDoc) -> Result<TrojanSpec> {
    let id = |name: &str| {
        netlist
            .id(name)
            .ok_or_else(|| CliError::data(path, format!("unknown node `{name}`")))
    };
    let trigger = d
        .trigger
        .iter()
        .map(|l| {
            Ok(TriggerLiteral {
                node: id(&l.node)?,
                value: l.value == 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrojanSpec {
        id: d.id.clone(),
        trigger,
        payload: id(&d.payload)?,
    })
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TapDoc {
    pub rows: usize,
    pub stages: usize,
    pub init_position: usize,
    /// Row-major, row 0 first.
    pub bits: String,
}

impl From<&TapMatrix> for TapDoc {
    fn from(t: &TapMatrix) -> Self {
        TapDoc {
            rows: t.width,
            stages: t.sr_length(),
            init_position: t.init_position,
            bits: t.to_row_major(),
        }
    }
}

impl TapDoc {
    pub fn to_matrix(&self) -> htpg_core::Result<TapMatrix> {
        TapMatrix::from_row_major(self.rows, self.stages, self.init_position, &self.bits)
    }
}

#[derive(Serialize)]
struct SegmentDoc {
    start: usize,
    end: usize,
    tap: TapDoc,
}

#[derive(Serialize)]
struct ClusterDoc {
    inputs: Vec<usize>,
    tap: TapDoc,
}

#[derive(Serialize)]
pub struct PlanDoc {
    width: usize,
    ring_length: usize,
    mode: htpg_core::hwgen::Mode,
    segments: Vec<SegmentDoc>,
    clusters: Vec<ClusterDoc>,
    cost: Cost,
}

pub fn plan_doc(plan: &TpgPlan, cost: Cost) -> PlanDoc {
    PlanDoc {
        width: plan.width,
        ring_length: plan.ring_length,
        mode: plan.mode,
        segments: plan
            .segments
            .iter()
            .map(|s| SegmentDoc {
                start: s.start,
                end: s.end,
                tap: (&s.tap).into(),
            })
            .collect(),
        clusters: plan
            .clusters
            .iter()
            .map(|c| ClusterDoc {
                inputs: c.inputs.clone(),
                tap: (&c.tap).into(),
            })
            .collect(),
        cost,
    }
}

/// One word per line, `ceil(bits / 4)` lowercase hex digits.
pub fn rom_hex(words: &[u64], bits: usize) -> String {
    let digits = bits.div_ceil(4);
    words.iter().map(|w| format!("{w:0digits$x}\n")).collect()
}
