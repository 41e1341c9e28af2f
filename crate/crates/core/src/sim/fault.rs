use serde::{Deserialize, Serialize};

use crate::catalog::NsMap;
use crate::ids::{NetworkId, ServerId, ServerRef};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashSpec {
    pub network: NetworkId,
    pub server: ServerId,
    pub time: u64,
}

impl CrashSpec {
    pub fn server_ref(&self) -> ServerRef {
        ServerRef::new(self.network.clone(), self.server.clone())
    }
}

/// Server crashes and random frame loss for one run. Drop decisions come
/// only from a generator seeded with `rng_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultPlan {
    #[serde(default)]
    pub crashes: Vec<CrashSpec>,
    #[serde(default)]
    pub frame_drop_rate: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for FaultPlan {
    fn default() -> Self {
        Self { crashes: Vec::new(), frame_drop_rate: 0.0, rng_seed: 0 }
    }
}

impl FaultPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, map: &NsMap) -> Result<(), SimError> {
        if !(0.0..1.0).contains(&self.frame_drop_rate) {
            return Err(SimError::Config(format!("frame_drop_rate {} outside [0, 1)", self.frame_drop_rate)));
        }
        for c in &self.crashes {
            if map.server(c.network.as_str(), c.server.as_str()).is_err() {
                return Err(SimError::UnknownServer(c.server_ref()));
            }
        }
        Ok(())
    }
}

pub fn load_fault_plan(bytes: &[u8]) -> Result<FaultPlan, SimError> {
    serde_json::from_slice(bytes).map_err(|e| SimError::Config(format!("fault plan: {e}")))
}

/// xorshift64* (Vigna). Fixed here so recorded traces stay reproducible.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub const NAME: &'static str = "xorshift64*";

    pub fn new(seed: u64) -> Self {
        let state = seed ^ 0x9e37_79b9_7f4a_7c15;
        Self { state: if state == 0 { 0x9e37_79b9_7f4a_7c15 } else { state } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
