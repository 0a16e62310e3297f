use crate::error::{NcfError, Result};

/// Environment variable that overrides the default compute cap.
pub const BUDGET_ENV: &str = "NCF_BUDGET";

/// Cap on abstract work units (roughly: inner-loop evaluations) for the
/// grid and Monte Carlo routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub cap: u64,
}

impl Budget {
    pub const DEFAULT_CAP: u64 = 20_000_000_000;

    pub fn new(cap: u64) -> Self {
        Self { cap }
    }

    pub fn unlimited() -> Self {
        Self { cap: u64::MAX }
    }

    /// Default cap, or the value of `NCF_BUDGET` when it parses as an integer.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Self::new)
            .unwrap_or_default()
    }

    pub fn check(&self, required: u64) -> Result<()> {
        if required > self.cap {
            return Err(NcfError::Budget {
                required,
                cap: self.cap,
            });
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(Self::DEFAULT_CAP)
    }
}

/// Saturating product of work factors.
pub(crate) fn work(factors: &[u64]) -> u64 {
    factors.iter().fold(1u64, |acc, &f| acc.saturating_mul(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_respects_cap() {
        let b = Budget::new(100);
        assert!(b.check(100).is_ok());
        assert_eq!(
            b.check(101),
            Err(NcfError::Budget {
                required: 101,
                cap: 100
            })
        );
    }

    #[test]
    fn work_saturates() {
        assert_eq!(work(&[u64::MAX, 2]), u64::MAX);
        assert_eq!(work(&[3, 4, 5]), 60);
    }
}
