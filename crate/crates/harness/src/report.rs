//! Run reports: JSON lines for machines, a table for people.

use std::fmt::Write as _;

use mpcstream_core::mpc_engine::RoundStats;
use serde::Serialize;

use crate::runner::Verdict;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatchRecord {
    pub batch_index: usize,
    pub rounds: u64,
    pub peak_machine_memory: u64,
    pub total_communication: u64,
    pub broadcasts: u64,
}

impl BatchRecord {
    pub fn new(batch_index: usize, s: &RoundStats) -> Self {
        BatchRecord {
            batch_index,
            rounds: s.rounds,
            peak_machine_memory: s.peak_machine_memory,
            total_communication: s.total_communication,
            broadcasts: s.broadcasts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub batch_index: usize,
    pub check: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(batch_index: usize, v: &Verdict) -> Self {
        CheckRecord { batch_index, check: v.check.to_string(), pass: v.pass, ratio: v.ratio.filter(|r| r.is_finite()), detail: v.detail.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub batches: usize,
    pub max_rounds: u64,
    pub peak_machine_memory: u64,
    pub peak_total_memory: u64,
    pub checks: usize,
    pub failures: usize,
    pub within_budget: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub batches: Vec<BatchRecord>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn finish(&mut self, peak_total_memory: u64, failure_budget: f64) {
        let ratios: Vec<f64> = self.checks.iter().filter_map(|c| c.ratio).collect();
        let failures = self.checks.iter().filter(|c| !c.pass).count();
        self.summary = Summary {
            batches: self.batches.len(),
            max_rounds: self.batches.iter().map(|b| b.rounds).max().unwrap_or(0),
            peak_machine_memory: self.batches.iter().map(|b| b.peak_machine_memory).max().unwrap_or(0),
            peak_total_memory,
            checks: self.checks.len(),
            failures,
            within_budget: failures as f64 <= failure_budget * self.checks.len() as f64,
            max_ratio: ratios.iter().copied().reduce(f64::max),
            mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        };
    }

    /// One JSON object per line: batch records, then checks, then the summary.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for b in &self.batches {
            out.push_str(&serde_json::to_string(b).expect("serializable"));
            out.push('\n');
        }
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("serializable"));
            out.push('\n');
        }
        out.push_str(&serde_json::json!({ "summary": self.summary }).to_string());
        out.push('\n');
        out
    }

    pub fn table(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let ratio = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"));
        let rows = [
            ("batches", s.batches.to_string()),
            ("max rounds / batch", s.max_rounds.to_string()),
            ("peak machine memory", s.peak_machine_memory.to_string()),
            ("peak total memory", s.peak_total_memory.to_string()),
            ("checks", s.checks.to_string()),
            ("failures", s.failures.to_string()),
            ("within budget", s.within_budget.to_string()),
            ("max ratio", ratio(s.max_ratio)),
            ("mean ratio", ratio(s.mean_ratio)),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<22} {v:>14}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_lines_have_five_fields() {
        let mut r = RunReport::default();
        r.batches.push(BatchRecord::new(0, &RoundStats { rounds: 3, peak_machine_memory: 10, total_communication: 7, broadcasts: 2 }));
        r.finish(10, 0.0);
        let first: serde_json::Value = serde_json::from_str(r.to_json_lines().lines().next().unwrap()).unwrap();
        let keys: Vec<&String> = first.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        assert_eq!(first["rounds"], 3);
        assert!(r.table().contains("max rounds / batch"));
    }
}
