use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FlowRates;

/// One line of the per-run event trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    /// `arrival`, `rejected`, `flow_finished`, `group_finished`,
    /// `coflow_finished`, `link_fail`, `link_recover`, `bandwidth_change`
    /// or `rates_applied`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coflow: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
    /// Digest of the rates in force after this instant.
    pub rates_snapshot_digest: String,
}

/// SHA-256 over flows, path links and rate bits, in key order.
pub(crate) fn rates_digest(rates: &FlowRates) -> String {
    let mut h = Sha256::new();
    for ((c, f), shares) in rates {
        h.update(c.0.to_le_bytes());
        h.update(f.to_le_bytes());
        for s in shares {
            h.update((s.links.len() as u64).to_le_bytes());
            for l in &s.links {
                h.update((l.0 as u64).to_le_bytes());
            }
            h.update(s.rate.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

pub fn trace_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coflow::CoflowId;
    use crate::sim::PathShare;
    use crate::topology::LinkId;

    #[test]
    fn digest_tracks_rate_bits() {
        let mut a = FlowRates::new();
        a.insert((CoflowId(1), 0), vec![PathShare { links: vec![LinkId(0)], rate: 1.0 }]);
        let mut b = a.clone();
        assert_eq!(rates_digest(&a), rates_digest(&b));
        b.get_mut(&(CoflowId(1), 0)).unwrap()[0].rate = 1.0 + f64::EPSILON;
        assert_ne!(rates_digest(&a), rates_digest(&b));
    }

    #[test]
    fn jsonl_one_line_per_record() {
        let r = TraceRecord { t: 0.5, kind: "arrival".into(), coflow: Some(3), link: None, rates_snapshot_digest: "x".into() };
        let text = trace_jsonl(&[r.clone(), r]);
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains("link"));
    }
}
