//! Noise-model specifications as given on the command line or in a config.
//! Frequencies arrive in MHz (cycles per µs) and are converted to rad/µs.

use std::f64::consts::PI;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use walsh_noise::{MixtureModel64, NuclearSpin, NuclearSpin64, OuModel, OuModel64, QcBathModel64};

pub const RAD_PER_US_PER_MHZ: f64 = 2.0 * PI;

pub fn mhz_to_rad_per_us(mhz: f64) -> f64 {
    mhz * RAD_PER_US_PER_MHZ
}

/// One unit conversion applied while building a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conversion {
    pub field: String,
    pub mhz: f64,
    pub rad_per_us: f64,
}

/// OU component: `b2` in rad²/µs², `tau_c` in µs, centre frequency in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuSpec {
    pub b2: f64,
    pub tau_c: f64,
    #[serde(default)]
    pub shift_mhz: f64,
}

impl OuSpec {
    pub fn model(&self) -> Result<OuModel64> {
        OuModel::new(self.b2, self.tau_c, mhz_to_rad_per_us(self.shift_mhz))
            .with_context(|| format!("invalid OU component {self:?}"))
    }
}

fn parse_floats(s: &str, min: usize, max: usize, what: &str) -> Result<Vec<f64>> {
    let parts = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("{what}: cannot parse {p:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    if parts.len() < min || parts.len() > max {
        bail!(
            "{what}: expected {min}..={max} comma-separated numbers, got {}",
            parts.len()
        );
    }
    Ok(parts)
}

/// `b2,tau_c[,shift_mhz]`
impl FromStr for OuSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = parse_floats(s, 2, 3, "OU component")?;
        Ok(Self {
            b2: v[0],
            tau_c: v[1],
            shift_mhz: v.get(2).copied().unwrap_or(0.0),
        })
    }
}

/// Nuclear spin with Larmor frequency and hyperfine couplings in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSpec {
    pub larmor_mhz: f64,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
}

impl SpinSpec {
    pub fn spin(&self) -> Result<NuclearSpin64> {
        NuclearSpin::new(
            mhz_to_rad_per_us(self.larmor_mhz),
            mhz_to_rad_per_us(self.a_par_mhz),
            mhz_to_rad_per_us(self.a_perp_mhz),
        )
        .with_context(|| format!("invalid nuclear spin {self:?}"))
    }
}

/// `larmor_mhz,a_par_mhz,a_perp_mhz`
impl FromStr for SpinSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = parse_floats(s, 3, 3, "nuclear spin")?;
        Ok(Self {
            larmor_mhz: v[0],
            a_par_mhz: v[1],
            a_perp_mhz: v[2],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub ou: Vec<OuSpec>,
    #[serde(default)]
    pub spins: Vec<SpinSpec>,
}

impl NoiseSpec {
    pub fn classical(&self) -> Result<MixtureModel64> {
        Ok(MixtureModel64::new(
            self.ou.iter().map(OuSpec::model).collect::<Result<_>>()?,
        ))
    }

    pub fn bath(&self) -> Result<QcBathModel64> {
        Ok(QcBathModel64 {
            spins: self
                .spins
                .iter()
                .map(SpinSpec::spin)
                .collect::<Result<_>>()?,
            classical: self.classical()?,
        })
    }

    pub fn conversions(&self) -> Vec<Conversion> {
        let mut out = Vec::new();
        let mut push = |field: String, mhz: f64| {
            out.push(Conversion {
                field,
                mhz,
                rad_per_us: mhz_to_rad_per_us(mhz),
            })
        };
        for (i, c) in self.ou.iter().enumerate() {
            push(format!("noise.ou[{i}].shift_mhz"), c.shift_mhz);
        }
        for (i, s) in self.spins.iter().enumerate() {
            push(format!("noise.spins[{i}].larmor_mhz"), s.larmor_mhz);
            push(format!("noise.spins[{i}].a_par_mhz"), s.a_par_mhz);
            push(format!("noise.spins[{i}].a_perp_mhz"), s.a_perp_mhz);
        }
        out
    }
}
