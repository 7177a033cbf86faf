//! Run configuration, read from a TOML file.
//!
//! The file is found through `--config`, then the `BANKLAINE_CONFIG`
//! environment variable; without either the built-in defaults apply.
//! Every key is optional:
//!
//! ```toml
//! [tolerances]
//! ode = 1e-10         # local error per accepted step
//! quad = 1e-10        # absolute, for path integrals
//! zeros = 1e-10       # Newton refinement
//! bank_laine = 1e-8   # allowed ||E'| - 1| at zeros
//! picard = 1e-12      # sup-norm change that stops the iteration
//!
//! [decay]
//! n_ic = 4
//! seed = 20240601
//! burn_in = 0.25
//! slack = 0.1
//! liouville_threshold = 5e3
//!
//! [nevanlinna]
//! nodes = 256
//! max_nodes = 65536
//! tol = 1e-4
//!
//! [grids]
//! picard_points = 38
//! trace_max_step = 1.0
//! decay_length = 400.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "BANKLAINE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode: f64,
    pub quad: f64,
    pub zeros: f64,
    pub bank_laine: f64,
    pub picard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ode: 1e-10, quad: 1e-10, zeros: 1e-10, bank_laine: 1e-8, picard: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub n_ic: usize,
    pub seed: u64,
    pub burn_in: f64,
    pub slack: f64,
    pub liouville_threshold: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        let d = banklaine_core::asymptotics::DecayOptions::default();
        DecayConfig { n_ic: d.n_ic, seed: d.seed, burn_in: d.burn_in, slack: d.slack, liouville_threshold: d.liouville_threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NevanConfig {
    pub nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
}

impl Default for NevanConfig {
    fn default() -> Self {
        let q = banklaine_core::nevanlinna::CircleQuadrature::default();
        NevanConfig { nodes: q.nodes, max_nodes: q.max_nodes, tol: q.tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub picard_points: usize,
    pub trace_max_step: f64,
    pub decay_length: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { picard_points: 38, trace_max_step: 1.0, decay_length: 400.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tolerances: Tolerances,
    pub decay: DecayConfig,
    pub nevanlinna: NevanConfig,
    pub grids: Grids,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, String> {
        toml::from_str(text).map_err(|e| format!("bad config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Config::from_toml(&text)
    }

    /// `--config` first, then the environment variable, then defaults.
    pub fn resolve(flag: Option<&Path>) -> Result<Config, String> {
        match flag {
            Some(p) => Config::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Config::load(Path::new(&p)),
                _ => Ok(Config::default()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_keep_defaults() {
        let c = Config::from_toml("[tolerances]\node = 1e-12\n").unwrap();
        assert_eq!(c.tolerances.ode, 1e-12);
        assert_eq!(c.tolerances.quad, 1e-10);
        assert_eq!(c.decay, DecayConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml("[tolerances]\nodee = 1\n").is_err());
        assert!(Config::from_toml("colour = 1\n").is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let text = toml::to_string(&Config::default()).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), Config::default());
    }
}
