//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::adaptive::AdaptiveConfig;
use crate::error::{Error, Result};
use crate::optics::{AncillaCrossTerm, OpticalConvention, PhaseArm, PlateOrder, ValidatedConvention};
use crate::sensitivity::SearchConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionConfig {
    /// Intensity transmissivity of both beamsplitters.
    pub bs_transmissivity: f64,
    pub phase_arm: PhaseArm,
    pub plate_order: PlateOrder,
    pub qwp_angle_ratio: f64,
    pub ancilla_cross_term: AncillaCrossTerm,
}

impl Default for ConventionConfig {
    fn default() -> Self {
        Self {
            bs_transmissivity: 0.5,
            phase_arm: PhaseArm::Upper,
            plate_order: PlateOrder::HwpThenQwp,
            qwp_angle_ratio: 2.0,
            ancilla_cross_term: AncillaCrossTerm::Antisymmetric,
        }
    }
}

impl ConventionConfig {
    pub fn build(&self) -> Result<OpticalConvention> {
        let mut conv = if self.bs_transmissivity == 0.5 {
            OpticalConvention::default()
        } else {
            OpticalConvention::with_transmissivity(self.bs_transmissivity)?
        };
        conv.phase_arm = self.phase_arm;
        conv.plate_order = self.plate_order;
        conv.qwp_angle_ratio = self.qwp_angle_ratio;
        conv.ancilla_cross_term = self.ancilla_cross_term;
        Ok(conv)
    }

    pub fn validated(&self) -> Result<ValidatedConvention> {
        self.build()?.into_validated()
    }
}

/// Everything a command reads from the config file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub p: Option<f64>,
    /// Points of the phase grid for curves and threshold phase sets.
    pub grid: Option<usize>,
    /// True phases of the adaptive ensemble.
    pub phis: Vec<f64>,
    pub write_trials: bool,
    pub search: SearchConfig,
    pub adaptive: AdaptiveConfig,
    pub convention: ConventionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: None,
            grid: None,
            phis: default_ensemble_phases(8),
            write_trials: true,
            search: SearchConfig::default(),
            adaptive: AdaptiveConfig::default(),
            convention: ConventionConfig::default(),
        }
    }
}

/// `n` phases at the centres of equal cells of `(0, pi)`.
pub fn default_ensemble_phases(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (k as f64 + 0.5) * std::f64::consts::PI / n as f64)
        .collect()
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.search;
        let a = &mut self.adaptive;
        let c = &mut self.convention;
        match key {
            "p" => {
                let p = parse(key, value)?;
                self.p = Some(p);
                a.p = p;
            }
            "grid" => self.grid = Some(parse(key, value)?),
            "phis" => self.phis = parse_list(key, value)?,
            "write_trials" => self.write_trials = parse(key, value)?,
            "seed" => a.seed = parse(key, value)?,
            "trials" => a.trials = parse(key, value)?,
            "detections" => a.detections = parse(key, value)?,
            "final_fraction" => a.final_fraction = parse(key, value)?,
            "endgame_split" => a.endgame_split = parse(key, value)?,
            "phi_grid_size" => a.phi_grid_size = parse(key, value)?,
            "search" => match value {
                "default" => *s = SearchConfig::default(),
                "quick" => *s = SearchConfig::quick(),
                _ => return Err(Error::Config(format!("unknown search preset `{value}`"))),
            },
            "coarse_points" => s.coarse_points = parse(key, value)?,
            "refine_points" => s.refine_points = parse(key, value)?,
            "refine_passes" => s.refine_passes = parse(key, value)?,
            "refine_shrink" => s.refine_shrink = parse(key, value)?,
            "threshold_phi_points" => s.threshold_phi_points = parse(key, value)?,
            "table_points" => s.table_points = parse(key, value)?,
            "bs_transmissivity" => c.bs_transmissivity = parse(key, value)?,
            "phase_arm" => {
                c.phase_arm = match value {
                    "upper" => PhaseArm::Upper,
                    "lower" => PhaseArm::Lower,
                    _ => return Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
                }
            }
            "plate_order" => {
                c.plate_order = match value {
                    "hwp-then-qwp" => PlateOrder::HwpThenQwp,
                    "qwp-then-hwp" => PlateOrder::QwpThenHwp,
                    _ => return Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
                }
            }
            "qwp_angle_ratio" => c.qwp_angle_ratio = parse(key, value)?,
            "ancilla_cross_term" => {
                c.ancilla_cross_term = match value {
                    "antisymmetric" => AncillaCrossTerm::Antisymmetric,
                    "symmetric" => AncillaCrossTerm::Symmetric,
                    _ => return Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Range checks shared by every command.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        if self.grid == Some(0) {
            return Err(Error::Config("grid must be at least 1".into()));
        }
        let s = &self.search;
        if s.coarse_points == 0 || s.refine_points == 0 || s.threshold_phi_points == 0 || s.table_points == 0 {
            return Err(Error::Config("search grid sizes must be at least 1".into()));
        }
        if s.refine_shrink <= 1.0 {
            return Err(Error::Config("refine_shrink must exceed 1".into()));
        }
        Ok(())
    }

    /// Canonical flat form; feeding it back through [`RunConfig::from_text`]
    /// reproduces this configuration.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let s = &self.search;
        let a = &self.adaptive;
        let c = &self.convention;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        if let Some(p) = self.p {
            put("p", format!("{p:?}"));
        } else {
            put("p", format!("{:?}", a.p));
        }
        if let Some(g) = self.grid {
            put("grid", g.to_string());
        }
        put(
            "phis",
            self.phis.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","),
        );
        put("write_trials", self.write_trials.to_string());
        put("seed", a.seed.to_string());
        put("trials", a.trials.to_string());
        put("detections", a.detections.to_string());
        put("final_fraction", format!("{:?}", a.final_fraction));
        put("endgame_split", format!("{:?}", a.endgame_split));
        put("phi_grid_size", a.phi_grid_size.to_string());
        put("coarse_points", s.coarse_points.to_string());
        put("refine_points", s.refine_points.to_string());
        put("refine_passes", s.refine_passes.to_string());
        put("refine_shrink", format!("{:?}", s.refine_shrink));
        put("threshold_phi_points", s.threshold_phi_points.to_string());
        put("table_points", s.table_points.to_string());
        put("bs_transmissivity", format!("{:?}", c.bs_transmissivity));
        put(
            "phase_arm",
            match c.phase_arm {
                PhaseArm::Upper => "upper",
                PhaseArm::Lower => "lower",
            }
            .into(),
        );
        put(
            "plate_order",
            match c.plate_order {
                PlateOrder::HwpThenQwp => "hwp-then-qwp",
                PlateOrder::QwpThenHwp => "qwp-then-hwp",
            }
            .into(),
        );
        put("qwp_angle_ratio", format!("{:?}", c.qwp_angle_ratio));
        put(
            "ancilla_cross_term",
            match c.ancilla_cross_term {
                AncillaCrossTerm::Antisymmetric => "antisymmetric",
                AncillaCrossTerm::Symmetric => "symmetric",
            }
            .into(),
        );
        m
    }

    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
