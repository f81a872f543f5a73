use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::Tick;

/// Chain-wide parameters agreed by the quorum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Sequence length: a summary block closes every `delta_l` blocks.
    pub delta_l: u64,
    /// Pruning starts once the live chain is longer than this.
    pub l_max: u64,
    /// Pruning never leaves fewer live blocks than this.
    pub l_min: u64,
    #[serde(default = "one")]
    pub min_summary_blocks: u64,
    #[serde(default)]
    pub min_time_coverage: Tick,
    #[serde(default = "one")]
    pub heartbeat_interval: Tick,
    #[serde(default)]
    pub redundancy_enabled: bool,
}

fn one() -> u64 {
    1
}

impl ChainConfig {
    /// Config with `l_min = delta_l` and permissive guards.
    pub fn new(delta_l: u64, l_max: u64) -> Self {
        ChainConfig {
            delta_l,
            l_max,
            l_min: delta_l,
            min_summary_blocks: 1,
            min_time_coverage: 0,
            heartbeat_interval: 1,
            redundancy_enabled: false,
        }
    }

    pub fn with_redundancy(mut self, enabled: bool) -> Self {
        self.redundancy_enabled = enabled;
        self
    }

    /// Checks that at least one sequence can be pruned once the chain first
    /// exceeds `l_max`: at that point the chain holds `l_max + 1` blocks plus
    /// the new summary, and dropping one sequence must keep `l_min`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.delta_l < 2 {
            return Err(ConfigError::SequenceTooShort(self.delta_l));
        }
        if self.l_min < self.delta_l {
            return Err(ConfigError::MinimumBelowSequence { l_min: self.l_min, delta_l: self.delta_l });
        }
        if self.l_max + 2 < self.l_min + self.delta_l {
            return Err(ConfigError::NoPrunableSequence {
                l_max: self.l_max,
                l_min: self.l_min,
                delta_l: self.delta_l,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_boundaries() {
        assert!(ChainConfig::new(3, 5).validate().is_ok());
        assert_eq!(ChainConfig::new(1, 5).validate(), Err(ConfigError::SequenceTooShort(1)));
        let mut c = ChainConfig::new(3, 5);
        c.l_min = 2;
        assert!(matches!(c.validate(), Err(ConfigError::MinimumBelowSequence { .. })));
        assert!(matches!(ChainConfig::new(3, 3).validate(), Err(ConfigError::NoPrunableSequence { .. })));
        assert!(ChainConfig::new(3, 4).validate().is_ok());
    }

    #[test]
    fn yaml_defaults() {
        let c: ChainConfig = serde_yaml::from_str("delta_l: 3\nl_max: 5\nl_min: 3\n").unwrap();
        assert_eq!(c, ChainConfig::new(3, 5));
        assert!(serde_yaml::from_str::<ChainConfig>("delta_l: 3\nl_max: 5\nl_min: 3\nbogus: 1\n").is_err());
    }
}
