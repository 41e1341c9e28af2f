use std::collections::BTreeMap;

use serde::Serialize;

use crate::ids::ApplicationId;
use crate::ratio::Ratio;

use super::DispatchError;

/// Per-application request counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AccessFrequencyTable {
    counts: BTreeMap<ApplicationId, u64>,
    total: u64,
}

impl AccessFrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_access(&mut self, app: &ApplicationId) {
        *self.counts.entry(app.clone()).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn count(&self, app: &ApplicationId) -> u64 {
        self.counts.get(app).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<ApplicationId, u64> {
        &self.counts
    }

    /// Share of all recorded requests that asked for `app`.
    pub fn access_frequency(&self, app: &ApplicationId) -> Result<Ratio, DispatchError> {
        if self.total == 0 {
            return Err(DispatchError::EmptyTable);
        }
        Ok(Ratio::new(self.count(app), self.total))
    }
}
