//! Transcript lines (JSONL), mechanism digests and the regret ledger CSV.

use std::fmt::Write as _;
use std::path::Path;

use moderator_core::behavior::{QueryKind, QueryRecord};
use moderator_core::ce::RegretLedger;
use moderator_core::cutting::RoundRecord;
use moderator_core::Mechanism;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::json::{self, format_float};

/// SHA-256 of the probabilities written at 17 significant digits.
pub fn mechanism_digest(x: &Mechanism) -> String {
    let text: Vec<String> = x.probs().iter().map(|&p| format_float(p)).collect();
    let hash = Sha256::digest(text.join(",").as_bytes());
    hash.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// One quantal-response query of the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryLine {
    pub query: usize,
    pub kind: String,
    pub agent: usize,
    pub rec: usize,
    pub mechanism: Vec<f64>,
    pub mechanism_digest: String,
    pub response: Vec<usize>,
}

impl QueryLine {
    pub fn new(query: usize, r: &QueryRecord) -> Self {
        Self {
            query,
            kind: match r.kind {
                QueryKind::SignPattern => "sign_pattern",
                QueryKind::Bisection => "bisection",
            }
            .into(),
            agent: r.agent,
            rec: r.rec,
            mechanism: r.mechanism.probs().to_vec(),
            mechanism_digest: mechanism_digest(&r.mechanism),
            response: r.response.clone(),
        }
    }

    pub fn to_record(&self) -> CliResult<QueryRecord> {
        let kind = match self.kind.as_str() {
            "sign_pattern" => QueryKind::SignPattern,
            "bisection" => QueryKind::Bisection,
            other => {
                return Err(CliError::Precondition(format!(
                    "unknown query kind `{other}`"
                )))
            }
        };
        let mechanism = Mechanism::new(self.mechanism.clone())?;
        if mechanism_digest(&mechanism) != self.mechanism_digest {
            return Err(CliError::Precondition(format!(
                "query {}: digest mismatch",
                self.query
            )));
        }
        Ok(QueryRecord {
            kind,
            mechanism,
            agent: self.agent,
            rec: self.rec,
            response: self.response.clone(),
        })
    }
}

/// One round of the recommendation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundLine {
    pub round: u64,
    pub mechanism_digest: String,
    pub recommended: usize,
    pub realized: usize,
    pub regret: f64,
    pub cut: bool,
    /// Cut normal `q^(t)` when a cut was applied.
    pub cut_normal: Option<Vec<f64>>,
    /// Query point `w^(t)`.
    pub query_point: Option<Vec<f64>>,
    pub centroid_se: Option<f64>,
}

impl From<&RoundRecord> for RoundLine {
    fn from(r: &RoundRecord) -> Self {
        Self {
            round: r.round,
            mechanism_digest: mechanism_digest(&r.mechanism),
            recommended: r.recommended,
            realized: r.realized,
            regret: r.regret,
            cut: r.cut.is_some(),
            cut_normal: r.cut.as_ref().map(|c| c.normal.clone()),
            query_point: Some(r.query_point.clone()),
            centroid_se: r.centroid_se,
        }
    }
}

pub fn to_jsonl<T: Serialize>(lines: &[T]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&json::to_string(line).expect("transcript lines serialize"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Precondition(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub const LEDGER_HEADER: &str = "round,regret,cumulative_regret";

pub fn ledger_csv(regrets: &[f64], cumulative: &[f64]) -> String {
    let mut out = String::from(LEDGER_HEADER);
    out.push('\n');
    for (t, (r, c)) in regrets.iter().zip(cumulative).enumerate() {
        let _ = writeln!(out, "{t},{},{}", format_float(*r), format_float(*c));
    }
    out
}

pub fn ledger_to_csv(ledger: &RegretLedger) -> String {
    ledger_csv(ledger.regrets(), ledger.cumulative())
}

/// `(round, regret, cumulative)` rows of a ledger CSV.
pub fn parse_ledger_csv(text: &str) -> CliResult<Vec<(u64, f64, f64)>> {
    let mut lines = text.lines();
    if lines.next() != Some(LEDGER_HEADER) {
        return Err(CliError::Precondition("ledger CSV header mismatch".into()));
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let parse = || -> Option<(u64, f64, f64)> {
                Some((
                    f.first()?.parse().ok()?,
                    f.get(1)?.parse().ok()?,
                    f.get(2)?.parse().ok()?,
                ))
            };
            match (f.len(), parse()) {
                (3, Some(row)) => Ok(row),
                _ => Err(CliError::Precondition(format!("bad ledger row `{l}`"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = Mechanism::uniform(4);
        assert_eq!(
            mechanism_digest(&a),
            mechanism_digest(&Mechanism::uniform(4))
        );
        assert_eq!(mechanism_digest(&a).len(), 64);
        assert_ne!(
            mechanism_digest(&a),
            mechanism_digest(&Mechanism::point_mass(4, 0))
        );
    }

    #[test]
    fn ledger_round_trip() {
        let csv = ledger_csv(&[0.5, 0.0, 0.25], &[0.5, 0.5, 0.75]);
        assert!(csv.starts_with("round,regret,cumulative_regret\n0,5.0000000000000000e-1,"));
        let rows = parse_ledger_csv(&csv).unwrap();
        assert_eq!(rows, vec![(0, 0.5, 0.5), (1, 0.0, 0.5), (2, 0.25, 0.75)]);
    }
}
