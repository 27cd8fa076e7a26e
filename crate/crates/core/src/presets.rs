//! Named scenario bundles shipped as TOML files in `presets/`.
//!
//! A preset file holds a base config (`[run]`, `[model]`, optional
//! `[selforg]`) and one `[[member]]` table per simulation, each overriding a
//! few base fields.

use serde::{Deserialize, Serialize};

use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::io::{ConfigFile, ModelSection, RunSection, SelfOrgSection};

pub const PRESET_NAMES: [&str; 5] = [
    "fig1_dist",
    "fig2_intermittency",
    "fig3_sf",
    "fig4_volatility",
    "fig5_selforg",
];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1_dist" => include_str!("../presets/fig1_dist.toml"),
        "fig2_intermittency" => include_str!("../presets/fig2_intermittency.toml"),
        "fig3_sf" => include_str!("../presets/fig3_sf.toml"),
        "fig4_volatility" => include_str!("../presets/fig4_volatility.toml"),
        "fig5_selforg" => include_str!("../presets/fig5_selforg.toml"),
        _ => return None,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MemberOverride {
    label: String,
    n_initial: Option<usize>,
    steps: Option<u64>,
    seed: Option<u64>,
    horizon: Option<usize>,
    horizons: Option<Vec<usize>>,
    horizon_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PresetFile {
    description: String,
    run: RunSection,
    model: ModelSection,
    selforg: Option<SelfOrgSection>,
    member: Vec<MemberOverride>,
}

/// One simulation of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetMember {
    pub label: String,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub members: Vec<PresetMember>,
}

fn member_config(file: &PresetFile, m: &MemberOverride) -> Result<SimConfig> {
    let mut cfg = ConfigFile {
        run: file.run.clone(),
        model: file.model.clone(),
        selforg: file.selforg.clone(),
    };
    if let Some(n) = m.n_initial {
        cfg.run.n_initial = n;
    }
    if let Some(s) = m.steps {
        cfg.run.steps = s;
    }
    if let Some(s) = m.seed {
        cfg.run.seed = s;
    }
    if m.horizon.is_some() || m.horizons.is_some() {
        cfg.model.horizon = m.horizon;
        cfg.model.horizons = m.horizons.clone();
        cfg.model.horizon_weights = m.horizon_weights.clone();
    }
    cfg.to_config()
}

pub fn load_preset(name: &str) -> Result<Preset> {
    let text = source(name).ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    let file: PresetFile = toml::from_str(text).map_err(|e| Error::Parse(format!("preset {name}: {e}")))?;
    let members = file
        .member
        .iter()
        .map(|m| {
            Ok(PresetMember {
                label: m.label.clone(),
                config: member_config(&file, m)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Preset {
        name: name.to_string(),
        description: file.description.trim().to_string(),
        members,
    })
}

/// The configurations of a named preset.
pub fn preset(name: &str) -> Result<Vec<SimConfig>> {
    Ok(load_preset(name)?.members.into_iter().map(|m| m.config).collect())
}
