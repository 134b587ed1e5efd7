use serde::{Deserialize, Serialize};

use super::SimError;
use crate::node::NodeConfig;
use crate::primitives::{Address, Amount, UnixTime};

/// A reproducible scenario. Every field has a default, so a file only needs
/// to name what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub ticks: u64,
    pub epoch_length: u64,
    pub tick_seconds: u64,
    pub start_time: UnixTime,
    /// Initial incentive pool.
    pub pool: Amount,
    /// Extra accounts besides the agents' own.
    pub genesis: Vec<GenesisAccount>,
    pub populations: Populations,
    /// Protocol parameters; defaults are the standard ones.
    pub overrides: NodeConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            ticks: 100,
            epoch_length: 10,
            tick_seconds: 3_600,
            start_time: 1_700_000_000,
            pool: Amount::pct(100_000),
            genesis: Vec::new(),
            populations: Populations::default(),
            overrides: NodeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenesisAccount {
    pub address: Address,
    pub balance: Amount,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Populations {
    pub honest_creators: CreatorPopulation,
    pub spammers: SpammerPopulation,
    pub validators: ValidatorPopulation,
    pub sybil: SybilPopulation,
    pub curators: CuratorPopulation,
    pub consumers: ConsumerPopulation,
    pub plagiarists: PlagiaristPopulation,
    pub reporters: ReporterPopulation,
}

/// Each creator draws a mean quality uniformly from `[quality_min,
/// quality_max]`; each prompt they publish scatters around it by `spread`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreatorPopulation {
    pub count: usize,
    pub balance: Amount,
    pub quality_min: f64,
    pub quality_max: f64,
    pub spread: f64,
    /// Chance of publishing in a given tick.
    pub publish_rate: f64,
}

impl Default for CreatorPopulation {
    fn default() -> Self {
        CreatorPopulation { count: 0, balance: Amount::pct(2_000), quality_min: 3.0, quality_max: 10.0, spread: 0.5, publish_rate: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpammerPopulation {
    pub count: usize,
    pub balance: Amount,
    /// Latent quality is uniform on `[0, quality_max]`.
    pub quality_max: f64,
    pub publish_rate: f64,
}

impl Default for SpammerPopulation {
    fn default() -> Self {
        SpammerPopulation { count: 0, balance: Amount::pct(2_000), quality_max: 2.0, publish_rate: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidatorPopulation {
    pub count: usize,
    pub balance: Amount,
    /// Standard deviation of a validator's reading of latent quality.
    pub sigma: f64,
    /// Honest reviewers the harness assigns to every new prompt.
    pub reviewers_per_prompt: usize,
    pub stake: Amount,
}

impl Default for ValidatorPopulation {
    fn default() -> Self {
        ValidatorPopulation { count: 0, balance: Amount::pct(5_000), sigma: 0.5, reviewers_per_prompt: 3, stake: Amount::pct(50) }
    }
}

/// One adversary controlling `identities` validator accounts that share
/// `budget`. It pushes each attacked prompt's score `bias` points away from
/// the truth, towards whichever end of the scale leaves room for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SybilPopulation {
    pub identities: usize,
    pub budget: Amount,
    pub bias: f64,
    /// Chance of attacking a given new prompt.
    pub attack_rate: f64,
    pub stake: Amount,
}

impl Default for SybilPopulation {
    fn default() -> Self {
        SybilPopulation { identities: 0, budget: Amount::pct(20_000), bias: 5.0, attack_rate: 1.0, stake: Amount::pct(50) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuratorPopulation {
    pub count: usize,
    pub balance: Amount,
    pub collection_size: usize,
    /// Epochs between refreshes of the collection.
    pub refresh_every: u64,
}

impl Default for CuratorPopulation {
    fn default() -> Self {
        CuratorPopulation { count: 0, balance: Amount::pct(1_000), collection_size: 5, refresh_every: 2 }
    }
}

/// Consumers pick Validated prompts with probability proportional to
/// `preference ^ score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsumerPopulation {
    pub count: usize,
    pub balance: Amount,
    /// Mean uses per consumer per tick.
    pub usage_rate: f64,
    pub preference: f64,
}

impl Default for ConsumerPopulation {
    fn default() -> Self {
        ConsumerPopulation { count: 0, balance: Amount::pct(1_000), usage_rate: 1.0, preference: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlagiaristPopulation {
    pub count: usize,
    pub balance: Amount,
    pub publish_rate: f64,
}

impl Default for PlagiaristPopulation {
    fn default() -> Self {
        PlagiaristPopulation { count: 0, balance: Amount::pct(2_000), publish_rate: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReporterPopulation {
    pub count: usize,
    pub balance: Amount,
    /// Chance per tick of noticing a given plagiarized prompt.
    pub detection_rate: f64,
}

impl Default for ReporterPopulation {
    fn default() -> Self {
        ReporterPopulation { count: 0, balance: Amount::pct(500), detection_rate: 0.2 }
    }
}

fn probability(name: &str, p: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::ConfigInvalid(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<(), SimError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(SimError::ConfigInvalid(format!("{name} must be finite and non-negative, got {x}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: &str| Err(SimError::ConfigInvalid(m.to_owned()));
        if self.epoch_length == 0 {
            return invalid("epoch_length must be at least 1");
        }
        if self.tick_seconds == 0 {
            return invalid("tick_seconds must be at least 1");
        }
        let p = &self.populations;
        let c = &p.honest_creators;
        non_negative("honest_creators.quality_min", c.quality_min)?;
        non_negative("honest_creators.spread", c.spread)?;
        if !(c.quality_min <= c.quality_max && c.quality_max <= 10.0) {
            return invalid("honest creator quality range must satisfy 0 <= min <= max <= 10");
        }
        probability("honest_creators.publish_rate", c.publish_rate)?;
        non_negative("spammers.quality_max", p.spammers.quality_max)?;
        if p.spammers.quality_max > 10.0 {
            return invalid("spammers.quality_max must be at most 10");
        }
        probability("spammers.publish_rate", p.spammers.publish_rate)?;
        non_negative("validators.sigma", p.validators.sigma)?;
        let publishers = c.count + p.spammers.count + p.plagiarists.count;
        if publishers > 0 && p.validators.reviewers_per_prompt > p.validators.count {
            return invalid("validators.reviewers_per_prompt exceeds validators.count");
        }
        non_negative("sybil.bias", p.sybil.bias)?;
        if p.sybil.bias > 10.0 {
            return invalid("sybil.bias must be at most 10");
        }
        probability("sybil.attack_rate", p.sybil.attack_rate)?;
        non_negative("consumers.usage_rate", p.consumers.usage_rate)?;
        non_negative("consumers.preference", p.consumers.preference)?;
        probability("plagiarists.publish_rate", p.plagiarists.publish_rate)?;
        probability("reporters.detection_rate", p.reporters.detection_rate)?;
        if p.curators.count > 0 && (p.curators.collection_size == 0 || p.curators.refresh_every == 0) {
            return invalid("curators need a positive collection_size and refresh_every");
        }
        if self.overrides.governance.quorum == 0 {
            return invalid("governance quorum must be at least 1");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}
