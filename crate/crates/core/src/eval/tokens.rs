use serde::{Deserialize, Serialize};

use crate::backend::{Category, MeterSnapshot};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTokens {
    pub category: Category,
    pub with_fast: u64,
    pub without_fast: u64,
    /// Share of the run's total tokens, per mode.
    pub share_with: f64,
    pub share_without: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEfficiency {
    pub with_fast: u64,
    pub without_fast: u64,
    /// (1 − with / without) × 100.
    pub reduction: f64,
    pub categories: Vec<CategoryTokens>,
}

/// Percentage of tokens saved by the run metered in `with` relative to the
/// run metered in `without`.
pub fn token_efficiency(with: &MeterSnapshot, without: &MeterSnapshot) -> Result<TokenEfficiency> {
    let w = with.total.total();
    let wo = without.total.total();
    if wo == 0 {
        return Err(Error::Validation("baseline run consumed no tokens".into()));
    }
    let share = |x: u64, total: u64| if total == 0 { 0.0 } else { x as f64 / total as f64 };
    let categories = Category::ALL
        .iter()
        .map(|&c| {
            let a = with.category(c).usage.total();
            let b = without.category(c).usage.total();
            CategoryTokens {
                category: c,
                with_fast: a,
                without_fast: b,
                share_with: share(a, w),
                share_without: share(b, wo),
            }
        })
        .collect();
    Ok(TokenEfficiency {
        with_fast: w,
        without_fast: wo,
        reduction: (1.0 - w as f64 / wo as f64) * 100.0,
        categories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{CallKind, CallRecord, TokenUsage};

    fn meter(tokens: u64) -> MeterSnapshot {
        MeterSnapshot::from_records(&[CallRecord {
            category: Category::Memory,
            kind: CallKind::Chat,
            usage: TokenUsage::new(tokens, 0),
        }])
    }

    #[test]
    fn arithmetic() {
        assert_eq!(token_efficiency(&meter(60), &meter(100)).unwrap().reduction, 40.0);
        assert_eq!(token_efficiency(&meter(100), &meter(100)).unwrap().reduction, 0.0);
        assert!(token_efficiency(&meter(10), &MeterSnapshot::default()).is_err());
    }
}
