//! Shipped scenario configs, one per reproduced figure.

use crate::config::{parse_config, ScenarioConfig};
use crate::error::CliError;

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub const CATALOG: [Entry; 6] = [
    Entry {
        name: "fig1a",
        description: "one spin, weak damping: fixed point near +omega_hat",
        source: include_str!("../catalog/fig1a.toml"),
    },
    Entry {
        name: "fig1b",
        description: "one spin, strong damping: fixed point near -s_hat",
        source: include_str!("../catalog/fig1b.toml"),
    },
    Entry {
        name: "fig2",
        description: "thermalization in a fluctuating field, 10-member ensemble",
        source: include_str!("../catalog/fig2.toml"),
    },
    Entry {
        name: "fig3-1",
        description: "two spins from a perturbed singlet (low purity)",
        source: include_str!("../catalog/fig3-1.toml"),
    },
    Entry {
        name: "fig3-2",
        description: "two spins from a weakly entangled state (high purity)",
        source: include_str!("../catalog/fig3-2.toml"),
    },
    Entry {
        name: "fig4",
        description: "driven two-spin system with noise: limit cycle of S1z",
        source: include_str!("../catalog/fig4.toml"),
    },
];

pub fn find(name: &str) -> Result<&'static Entry, CliError> {
    CATALOG.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<&str> = CATALOG.iter().map(|e| e.name).collect();
        CliError::config(format!("no catalog entry \"{name}\"; available: {}", names.join(", ")))
    })
}

pub fn load(name: &str) -> Result<(&'static Entry, ScenarioConfig), CliError> {
    let entry = find(name)?;
    Ok((entry, parse_config(entry.source)?))
}
