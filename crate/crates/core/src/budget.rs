use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Caps enforced before any exhaustive loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_points: u64,
    pub max_pairs: u64,
    pub max_group: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_points: 100_000, max_pairs: 100_000_000, max_group: 10_000 }
    }
}

impl Budget {
    pub fn with_max_points(mut self, max_points: u64) -> Self {
        self.max_points = max_points;
        self
    }

    pub(crate) fn check(needed: Option<u128>, budget: u64, what: &'static str) -> Result<()> {
        match needed {
            Some(n) if n <= u128::from(budget) => Ok(()),
            Some(n) => Err(Error::BudgetExceeded { what, needed: n.to_string(), budget }),
            None => Err(Error::BudgetExceeded { what, needed: "overflow".into(), budget }),
        }
    }
}
