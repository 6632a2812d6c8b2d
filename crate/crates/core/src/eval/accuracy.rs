use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sandbox::{EventKind, EventLog};

/// Hit fraction of one user: |T ∩ S| / |T|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserHit {
    pub user: String,
    pub hits: usize,
    pub truth_len: usize,
    pub fraction: f64,
}

/// a@(a+b) accuracy: the mean of per-user hit fractions, as a percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub a: usize,
    pub b: usize,
    pub users: Vec<UserHit>,
    /// Users whose decision produced no selection; each scores zero.
    pub abstentions: usize,
    pub accuracy: f64,
}

impl AccuracyReport {
    pub fn setting(&self) -> String {
        format!("{}@{}", self.a, self.a + self.b)
    }

    pub(crate) fn from_hits(a: usize, b: usize, users: Vec<UserHit>, abstentions: usize) -> Self {
        let accuracy = if users.is_empty() {
            0.0
        } else {
            users.iter().map(|u| u.fraction).sum::<f64>() / users.len() as f64 * 100.0
        };
        AccuracyReport {
            a,
            b,
            users,
            abstentions,
            accuracy,
        }
    }
}

pub(crate) fn user_hit(user: &str, selected: &[String], truth: &[String]) -> UserHit {
    let t: BTreeSet<&str> = truth.iter().map(String::as_str).collect();
    let s: BTreeSet<&str> = selected.iter().map(String::as_str).collect();
    let hits = t.intersection(&s).count();
    UserHit {
        user: user.to_string(),
        hits,
        truth_len: t.len(),
        fraction: hits as f64 / t.len() as f64,
    }
}

/// Scores per-user selections against ground truth. Every user must have
/// the same nonzero set size on both sides.
///
/// `b` only labels the report; pass the distractor count of the lists the
/// selections were made from.
pub fn purchase_accuracy(
    selections: &[(String, Vec<String>)],
    truths: &[(String, Vec<String>)],
    b: usize,
) -> Result<AccuracyReport> {
    if selections.len() != truths.len() {
        return Err(Error::Validation(format!(
            "{} selections for {} users",
            selections.len(),
            truths.len()
        )));
    }
    let a = truths.first().map_or(0, |(_, t)| t.len());
    let mut users = Vec::with_capacity(truths.len());
    for ((su, s), (tu, t)) in selections.iter().zip(truths) {
        if su != tu {
            return Err(Error::Validation(format!("selection for {su} paired with truth for {tu}")));
        }
        if t.is_empty() || t.len() != a || s.len() != a {
            return Err(Error::Validation(format!(
                "user {tu}: selected {} and truth {} items, expected {a} each",
                s.len(),
                t.len()
            )));
        }
        users.push(user_hit(tu, s, t));
    }
    Ok(AccuracyReport::from_hits(a, b, users, 0))
}

/// Recomputes accuracy from the `selection` events of an evaluation log by
/// plain set overlap, independent of the report that produced them.
pub fn recount_from_log(log: &EventLog) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for e in log.of_kind(EventKind::Selection) {
        let list = |k: &str| -> Result<Vec<String>> {
            serde_json::from_value(e.payload[k].clone())
                .map_err(|err| Error::Validation(format!("selection event {}: field {k}: {err}", e.seq)))
        };
        let truth = list("truth")?;
        let selected = list("selected")?;
        if truth.is_empty() {
            return Err(Error::Validation(format!("selection event {} has no truth", e.seq)));
        }
        let hits = truth.iter().filter(|t| selected.contains(t)).count();
        total += hits as f64 / truth.len() as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Validation("log holds no selection events".into()));
    }
    Ok(total / n as f64 * 100.0)
}
