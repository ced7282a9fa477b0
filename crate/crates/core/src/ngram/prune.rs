use std::collections::BTreeMap;

use super::LmError;

/// Per-order count thresholds: an n-gram of order k whose count is at most
/// `thresholds[k]` is dropped before estimation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneSpec {
    pub thresholds: BTreeMap<usize, u64>,
}

impl PruneSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn threshold(&self, order: usize) -> u64 {
        self.thresholds.get(&order).copied().unwrap_or(0)
    }

    /// Schedule used for large character models: 6,7,8-grams seen once and
    /// 9-grams seen at most twice are dropped, as are all n-grams of order
    /// 10 and above seen at most 3 times.
    pub fn char_large_schedule(order: usize) -> Self {
        Self::parse("6:1,7:1,8:1,9:2,10+:3", order).expect("static schedule parses")
    }

    /// Parses `k:c` items separated by commas. `k+:c` applies to every order
    /// from k up to `model_order`; `a-b:c` to an inclusive range. Entries
    /// above `model_order` from open ranges are ignored.
    pub fn parse(spec: &str, model_order: usize) -> Result<Self, LmError> {
        let mut thresholds = BTreeMap::new();
        let bad = |msg: String| LmError::InvalidPrune(msg);
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (orders, count) =
                item.split_once(':').ok_or_else(|| bad(format!("{item:?}: expected order:count")))?;
            let count: u64 =
                count.trim().parse().map_err(|_| bad(format!("{item:?}: bad count")))?;
            let orders = orders.trim();
            let parse_order = |s: &str| -> Result<usize, LmError> {
                s.trim().parse().map_err(|_| bad(format!("{item:?}: bad order")))
            };
            let range = if let Some(lo) = orders.strip_suffix('+') {
                parse_order(lo)?..=model_order
            } else if let Some((lo, hi)) = orders.split_once('-') {
                let (lo, hi) = (parse_order(lo)?, parse_order(hi)?);
                if hi > model_order {
                    return Err(bad(format!("{item:?}: order above model order {model_order}")));
                }
                lo..=hi
            } else {
                let k = parse_order(orders)?;
                if k > model_order {
                    return Err(bad(format!("{item:?}: order above model order {model_order}")));
                }
                k..=k
            };
            for k in range {
                if k < 2 {
                    return Err(bad("unigrams cannot be pruned".into()));
                }
                thresholds.insert(k, count);
            }
        }
        Ok(Self { thresholds })
    }

    pub fn validate(&self, model_order: usize) -> Result<(), LmError> {
        for &k in self.thresholds.keys() {
            if k < 2 || k > model_order {
                return Err(LmError::InvalidPrune(format!("order {k} outside 2..={model_order}")));
            }
        }
        Ok(())
    }
}
