//! `key = value` configuration file. Flags override file values, which
//! override built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fsd_core::hydro::{ChannelSpec, FluidProps};
use fsd_core::layout::ArmOrder;
use fsd_core::AccuracyLevel;

pub const CONFIG_ENV: &str = "FSD_CONFIG";
pub const DEFAULT_N: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n: u32,
    pub density: f64,
    pub viscosity: f64,
    pub height: f64,
    pub unit_width: f64,
    pub injection_speed: f64,
    pub characteristic_length: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub arm_order: ArmOrder,
}

impl Default for Config {
    fn default() -> Self {
        let water = FluidProps::water();
        Config {
            n: DEFAULT_N,
            density: water.density,
            viscosity: water.dynamic_viscosity,
            height: ChannelSpec::DEFAULT_HEIGHT,
            unit_width: ChannelSpec::DEFAULT_UNIT_WIDTH,
            injection_speed: ChannelSpec::DEFAULT_SPEED,
            characteristic_length: None,
            output_dir: None,
            arm_order: ArmOrder::default(),
        }
    }
}

pub fn parse_arm_order(s: &str) -> Result<ArmOrder> {
    match s {
        "alternating" => Ok(ArmOrder::Alternating),
        "sample_first" | "sample-first" => Ok(ArmOrder::SampleFirst),
        other => bail!("unknown arm order {other:?} (expected alternating or sample_first)"),
    }
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .with_context(|| format!("{key}: {value:?} is not a number"))?;
    if !(v.is_finite() && v > 0.0) {
        bail!("{key}: must be positive, got {value}");
    }
    Ok(v)
}

impl Config {
    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {lineno}: expected key = value");
            };
            let (key, value) = (key.trim(), value.trim());
            self.set(key, value)
                .with_context(|| format!("line {lineno}"))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => {
                self.n = value
                    .parse()
                    .with_context(|| format!("n: {value:?} is not an integer"))?
            }
            "density" => self.density = positive(key, value)?,
            "viscosity" => self.viscosity = positive(key, value)?,
            "height" => self.height = positive(key, value)?,
            "unit_width" => self.unit_width = positive(key, value)?,
            "injection_speed" => self.injection_speed = positive(key, value)?,
            "characteristic_length" => self.characteristic_length = Some(positive(key, value)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "arm_order" => self.arm_order = parse_arm_order(value)?,
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    /// Defaults overlaid with `path`, if given. The `--config` flag falls
    /// back to `$FSD_CONFIG`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Config::default();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        Ok(cfg)
    }

    pub fn level(&self) -> Result<AccuracyLevel> {
        Ok(AccuracyLevel::new(self.n)?)
    }

    pub fn fluid(&self) -> Result<FluidProps> {
        Ok(FluidProps::new(self.density, self.viscosity)?)
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        let spec = ChannelSpec {
            n: self.level()?,
            height: self.height,
            unit_width: self.unit_width,
            injection_speed: self.injection_speed,
            characteristic_length: self.characteristic_length,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let mut cfg = Config::default();
        cfg.apply_text("# lab setup\nn = 4\ndensity=1000  # kg/m3\n\narm_order = sample_first\n")
            .unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.density, 1000.0);
        assert_eq!(cfg.arm_order, ArmOrder::SampleFirst);
        assert_eq!(cfg.viscosity, Config::default().viscosity);
    }

    #[test]
    fn bad_lines_name_the_line() {
        let mut cfg = Config::default();
        let err = cfg.apply_text("n = 3\nviscosity = -1\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
        assert!(cfg.apply_text("colour = red").is_err());
        assert!(cfg.apply_text("just words").is_err());
        assert!(cfg.apply_text("n = six").is_err());
    }

    #[test]
    fn level_is_range_checked() {
        let cfg = Config {
            n: 0,
            ..Config::default()
        };
        assert!(cfg.level().is_err());
        let cfg = Config {
            n: 13,
            ..Config::default()
        };
        assert!(cfg.level().is_err());
    }
}
