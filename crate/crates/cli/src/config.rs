//! Run configuration: defaults, file loading, and flag overrides.
//!
//! The file format is TOML with one section per parameter group; unknown keys
//! are rejected. Defaults reproduce the reference simulation parameters, and
//! command-line flags take precedence over file values.

use qsdc_core::{LinkParams, Mode, Protocol, SourceParams};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeOpt {
    Finite,
    Infinite,
}

impl From<ModeOpt> for Mode {
    fn from(m: ModeOpt) -> Mode {
        match m {
            ModeOpt::Finite => Mode::Finite,
            ModeOpt::Infinite => Mode::Infinite,
        }
    }
}

impl ModeOpt {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeOpt::Finite => "finite",
            ModeOpt::Infinite => "infinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolOpt {
    Hsps,
    Dl04,
}

impl From<ProtocolOpt> for Protocol {
    fn from(p: ProtocolOpt) -> Protocol {
        match p {
            ProtocolOpt::Hsps => Protocol::Hsps,
            ProtocolOpt::Dl04 => Protocol::Dl04,
        }
    }
}

impl ProtocolOpt {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolOpt::Hsps => "hsps",
            ProtocolOpt::Dl04 => "dl04",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LegOpt {
    Ba,
    Bab,
}

impl From<LegOpt> for qsdc_core::Leg {
    fn from(l: LegOpt) -> qsdc_core::Leg {
        match l {
            LegOpt::Ba => qsdc_core::Leg::Ba,
            LegOpt::Bab => qsdc_core::Leg::Bab,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub mu: f64,
    pub eta_x: f64,
    pub eta_h: f64,
    pub eta_1: f64,
    pub eta_2: f64,
    pub t: f64,
    pub d_1: f64,
    pub d_2: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let p = SourceParams::default();
        SourceSection {
            mu: p.mu,
            eta_x: p.eta_x,
            eta_h: p.eta_h,
            eta_1: p.eta_1,
            eta_2: p.eta_2,
            t: p.t,
            d_1: p.d_1,
            d_2: p.d_2,
        }
    }
}

impl SourceSection {
    pub fn to_params(&self) -> SourceParams {
        SourceParams {
            mu: self.mu,
            eta_x: self.eta_x,
            eta_h: self.eta_h,
            eta_1: self.eta_1,
            eta_2: self.eta_2,
            t: self.t,
            d_1: self.d_1,
            d_2: self.d_2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    /// Channel attenuation on the sweep axis (round trip unless --one-way).
    pub alpha_db: f64,
    pub eta_opt_ba: f64,
    pub eta_opt_bab: f64,
    pub eta_d_a: f64,
    pub eta_d_b: f64,
    pub y0_a: f64,
    pub y0_b: f64,
    pub e_d_a: f64,
    pub e_d_b: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        let l = LinkParams::default();
        LinkSection {
            alpha_db: 4.0,
            eta_opt_ba: l.eta_opt_ba,
            eta_opt_bab: l.eta_opt_bab,
            eta_d_a: l.eta_d_a,
            eta_d_b: l.eta_d_b,
            y0_a: l.y0_a,
            y0_b: l.y0_b,
            e_d_a: l.e_d_a,
            e_d_b: l.e_d_b,
        }
    }
}

impl LinkSection {
    /// Link parameters for an axis value; the axis is the round-trip loss by
    /// default or the one-way loss when `one_way` is set.
    pub fn to_params(&self, axis_db: f64, one_way: bool) -> LinkParams {
        LinkParams {
            alpha_ba_db: if one_way { axis_db } else { axis_db / 2.0 },
            eta_opt_ba: self.eta_opt_ba,
            eta_opt_bab: self.eta_opt_bab,
            eta_d_a: self.eta_d_a,
            eta_d_b: self.eta_d_b,
            y0_a: self.y0_a,
            y0_b: self.y0_b,
            e_d_a: self.e_d_a,
            e_d_b: self.e_d_b,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alpha_min_db: f64,
    pub alpha_max_db: f64,
    pub step_db: f64,
    /// Intensities to sweep; defaults to the single configured source mu.
    pub mu_values: Option<Vec<f64>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            alpha_min_db: 0.0,
            alpha_max_db: 8.0,
            step_db: 0.01,
            mu_values: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub shots: u64,
    pub seed: u64,
    pub leg: LegOpt,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            shots: 10_000_000,
            seed: 42,
            leg: LegOpt::Ba,
        }
    }
}

/// Full run configuration (defaults = reference simulation parameters).
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Option<ModeOpt>,
    pub protocol: Option<ProtocolOpt>,
    pub eve_ratio: Option<f64>,
    pub n_max: Option<usize>,
    pub source: SourceSection,
    pub link: LinkSection,
    pub sweep: SweepSection,
    pub mc: McSection,
}

impl RunConfig {
    pub fn mode(&self) -> ModeOpt {
        self.mode.unwrap_or(ModeOpt::Finite)
    }

    pub fn protocol(&self) -> ProtocolOpt {
        self.protocol.unwrap_or(ProtocolOpt::Hsps)
    }

    pub fn eve_ratio(&self) -> f64 {
        self.eve_ratio.unwrap_or(1.0)
    }

    pub fn n_max(&self) -> usize {
        self.n_max.unwrap_or(20)
    }

    pub fn parse(text: &str) -> Result<RunConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
