use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{purpose, rng_for};
use crate::sandbox::{Catalog, PurchaseRecord};

pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Category co-purchase association over users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmiMatrix {
    pub categories: Vec<String>,
    /// Users who bought in category i (diagonal) or in both i and j.
    /// A diagonal pair count is the users with two or more distinct
    /// purchases in that category.
    pub pair_counts: Vec<Vec<u64>>,
    pub marginals: Vec<u64>,
    pub users: u64,
    pub smoothing: f64,
    /// Row-major, `values[i][j] == values[j][i]`.
    pub values: Vec<Vec<f64>>,
}

impl PmiMatrix {
    pub fn get(&self, x: &str, y: &str) -> Option<f64> {
        let i = self.categories.iter().position(|c| c == x)?;
        let j = self.categories.iter().position(|c| c == y)?;
        Some(self.values[i][j])
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.categories.len();
        (0..n).all(|i| (0..n).all(|j| self.values[i][j].to_bits() == self.values[j][i].to_bits()))
    }
}

/// PMI(x, y) = log2[(n(x,y) + ε) · n / ((n(x) + ε)(n(y) + ε))], counting
/// users. Each user's whole purchase set is one co-occurrence unit.
pub fn pmi_matrix(ledger: &[PurchaseRecord], category_of: &BTreeMap<String, String>, smoothing: f64) -> Result<PmiMatrix> {
    if ledger.is_empty() {
        return Err(Error::Validation("purchase ledger is empty".into()));
    }
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::param("smoothing", "must be positive and finite"));
    }
    // user -> category -> distinct products
    let mut per_user: BTreeMap<&str, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    for r in ledger {
        let c = category_of
            .get(&r.product_id)
            .ok_or_else(|| Error::Validation(format!("product {} has no category", r.product_id)))?;
        per_user
            .entry(&r.user_id)
            .or_default()
            .entry(c)
            .or_default()
            .insert(&r.product_id);
    }
    let categories: Vec<String> = category_of.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<&str, usize> = categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let m = categories.len();
    let mut pair_counts = vec![vec![0u64; m]; m];
    let mut marginals = vec![0u64; m];
    for cats in per_user.values() {
        let present: Vec<(usize, usize)> = cats.iter().map(|(c, ps)| (index[c], ps.len())).collect();
        for &(i, n_i) in &present {
            marginals[i] += 1;
            if n_i >= 2 {
                pair_counts[i][i] += 1;
            }
            for &(j, _) in &present {
                if i != j {
                    pair_counts[i][j] += 1;
                }
            }
        }
    }
    let users = per_user.len() as u64;
    let n = users as f64;
    let mut values = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let joint = pair_counts[i][j] as f64 + smoothing;
            let v = (joint * n / ((marginals[i] as f64 + smoothing) * (marginals[j] as f64 + smoothing))).log2();
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(PmiMatrix {
        categories,
        pair_counts,
        marginals,
        users,
        smoothing,
        values,
    })
}

/// Product → category lookup for a catalog.
pub fn category_map(catalog: &Catalog) -> BTreeMap<String, String> {
    catalog
        .products()
        .iter()
        .map(|p| (p.product_id.clone(), p.category.clone()))
        .collect()
}

/// A ledger in which every user buys in each category independently with
/// probability `rate`, one uniformly chosen product per category bought.
pub fn independent_ledger(catalog: &Catalog, users: usize, rate: f64, seed: u64) -> Result<Vec<PurchaseRecord>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::param("rate", "must lie in [0, 1]"));
    }
    let categories = catalog.categories();
    let mut out = Vec::new();
    for u in 0..users {
        let mut rng = rng_for(seed, &[purpose::USERS, u as u64]);
        for c in &categories {
            if rng.random::<f64>() < rate {
                let &i = catalog.in_category(c).choose(&mut rng).expect("categories are nonempty");
                out.push(PurchaseRecord {
                    user_id: format!("U{u:06}"),
                    product_id: catalog.products()[i].product_id.clone(),
                    timestamp: out.len() as u64,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, product: &str) -> PurchaseRecord {
        PurchaseRecord {
            user_id: user.into(),
            product_id: product.into(),
            timestamp: 0,
        }
    }

    #[test]
    fn hand_computed_values() {
        // two users: u1 buys x and y, u2 buys x only
        let cats: BTreeMap<String, String> = [("a", "x"), ("b", "y")]
            .iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect();
        let m = pmi_matrix(&[rec("u1", "a"), rec("u1", "b"), rec("u2", "a")], &cats, 0.5).unwrap();
        assert_eq!(m.marginals, vec![2, 1]);
        let expected = ((1.0 + 0.5) * 2.0 / ((2.0 + 0.5) * (1.0 + 0.5)) as f64).log2();
        assert!((m.get("x", "y").unwrap() - expected).abs() < 1e-12);
        assert!(m.is_symmetric());
    }

    #[test]
    fn empty_ledger_is_rejected() {
        assert!(matches!(pmi_matrix(&[], &BTreeMap::new(), 0.5), Err(Error::Validation(_))));
    }
}
