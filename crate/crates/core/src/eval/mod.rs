//! Detection metrics, baselines and campaigns.

mod campaign;
mod mero;
mod triage;

pub use campaign::{
    run_campaign, CampaignConfig, Clock, DetectionReport, Method, NoClock, OracleMode,
    TrojanOutcome,
};
pub use mero::{run_mero, MeroConfig};
pub use triage::{run_triage, TriageConfig, TriageResult};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::netlist::Netlist;
use crate::sim::{pack_lanes, simulate_words_into, PatternVector, LANES};
use crate::trojan::{insert_trojan, TrojanSpec};

/// What one test set achieves against one Trojan.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    /// Fraction of trigger literals that some vector puts at their value.
    pub trigger_fraction: f64,
    /// Some single vector fires the whole trigger.
    pub fully_triggered: bool,
    /// Some vector makes the primary outputs differ from the golden circuit.
    pub detected: bool,
}

/// Simulates `vectors` on the golden and infected circuit of every Trojan.
pub fn assess(
    vectors: &[PatternVector],
    golden: &Netlist,
    trojans: &[TrojanSpec],
) -> Result<Vec<Detection>> {
    golden.ensure_combinational()?;
    let width = golden.inputs().len();
    if let Some(v) = vectors.iter().find(|v| v.len() != width) {
        return Err(crate::Error::WidthMismatch {
            expected: width,
            found: v.len(),
        });
    }
    let infected = trojans
        .iter()
        .map(|t| insert_trojan(golden, t))
        .collect::<Result<Vec<_>>>()?;
    let mut hit: Vec<Vec<bool>> = trojans
        .iter()
        .map(|t| vec![false; t.trigger.len()])
        .collect();
    let mut out: Vec<Detection> = trojans
        .iter()
        .map(|_| Detection {
            trigger_fraction: 0.0,
            fully_triggered: false,
            detected: false,
        })
        .collect();
    let mut gv = Vec::new();
    let mut tv = Vec::new();
    for chunk in vectors.chunks(LANES) {
        let mask = if chunk.len() == LANES {
            !0
        } else {
            (1u64 << chunk.len()) - 1
        };
        let words = pack_lanes(chunk, width);
        simulate_words_into(golden, &words, &mut gv);
        for (k, t) in trojans.iter().enumerate() {
            for (h, l) in hit[k].iter_mut().zip(&t.trigger) {
                let w = if l.value {
                    gv[l.node.index()]
                } else {
                    !gv[l.node.index()]
                };
                *h |= w & mask != 0;
            }
            out[k].fully_triggered |= t.fires_words(&gv) & mask != 0;
            if !out[k].detected {
                simulate_words_into(&infected[k], &words, &mut tv);
                out[k].detected = golden
                    .outputs()
                    .iter()
                    .zip(infected[k].outputs())
                    .any(|(g, i)| (gv[g.index()] ^ tv[i.index()]) & mask != 0);
            }
        }
    }
    for (d, h) in out.iter_mut().zip(&hit) {
        d.trigger_fraction = h.iter().filter(|&&x| x).count() as f64 / h.len() as f64;
    }
    Ok(out)
}

/// Mean per-Trojan percentage of trigger nodes driven to their rare value.
pub fn trigger_coverage(
    vectors: &[PatternVector],
    golden: &Netlist,
    trojans: &[TrojanSpec],
) -> Result<f64> {
    if trojans.is_empty() {
        return Err(invalid("no trojans to evaluate"));
    }
    let d = assess(vectors, golden, trojans)?;
    Ok(100.0 * d.iter().map(|x| x.trigger_fraction).sum::<f64>() / d.len() as f64)
}

/// Percentage of Trojans revealed by a primary-output mismatch.
pub fn trojan_coverage(
    vectors: &[PatternVector],
    golden: &Netlist,
    trojans: &[TrojanSpec],
) -> Result<f64> {
    if trojans.is_empty() {
        return Err(invalid("no trojans to evaluate"));
    }
    let d = assess(vectors, golden, trojans)?;
    Ok(100.0 * d.iter().filter(|x| x.detected).count() as f64 / d.len() as f64)
}

/// Per-vector activation flags for every rare literal, 64 vectors at a time.
pub(crate) fn activation_words(
    netlist: &Netlist,
    rare: &[(crate::netlist::NodeId, bool)],
    chunk: &[PatternVector],
    values: &mut Vec<u64>,
) -> Vec<u64> {
    let words = pack_lanes(chunk, netlist.inputs().len());
    simulate_words_into(netlist, &words, values);
    rare.iter()
        .map(|&(n, v)| {
            if v {
                values[n.index()]
            } else {
                !values[n.index()]
            }
        })
        .collect()
}
