//! Config-driven end-to-end run: χ → reconstruction → comparison, with a
//! manifest of checksums and timings.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use walsh_noise::{ChiMethod, ChiRequest, Scheme};

use crate::model::{Conversion, NoiseSpec, RAD_PER_US_PER_MHZ};
use crate::output::{Artifact, OutputGuard};
use crate::pipeline::{compare_reconstruction, compute_chis, reconstruct, sequence_set};
use crate::table::{
    push_autocorr, push_chis, push_spectrum, read_chis, Table, CHI_HEADER, G_HEADER,
    METRICS_HEADER, S_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Walsh,
    Cpmg,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Orders {
    One(u32),
    Many(Vec<u32>),
}

impl Orders {
    pub fn to_vec(&self) -> Vec<u32> {
        match self {
            Orders::One(n) => vec![*n],
            Orders::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiSettings {
    #[serde(default = "default_method")]
    pub method: String,
    pub reps: Option<usize>,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    pub seed: Option<u64>,
    pub cpmg_limit: Option<usize>,
}

fn default_method() -> String {
    "quadrature".into()
}

fn default_oversample() -> usize {
    8
}

fn default_true() -> bool {
    true
}

impl Default for ChiSettings {
    fn default() -> Self {
        Self {
            method: default_method(),
            reps: None,
            oversample: default_oversample(),
            seed: None,
            cpmg_limit: None,
        }
    }
}

impl ChiSettings {
    pub fn request(&self) -> Result<ChiRequest> {
        let method: ChiMethod = self.method.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(match method {
            ChiMethod::Bilinear => ChiRequest::Bilinear,
            ChiMethod::Quadrature => ChiRequest::Quadrature,
            ChiMethod::MonteCarlo => {
                let (Some(reps), Some(seed)) = (self.reps, self.seed) else {
                    bail!("monte-carlo chi needs both chi.reps and chi.seed");
                };
                ChiRequest::MonteCarlo {
                    reps,
                    oversample: self.oversample,
                    seed,
                }
            }
            ChiMethod::Signal => {
                bail!("chi.method = \"signal\" is implied by nuclear spins; use quadrature")
            }
        })
    }
}

/// TOML run description. Times in µs, frequencies in MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: SchemeChoice,
    pub n: Orders,
    /// Overrides `n` for the CPMG comparison sets when `scheme = "both"`.
    pub cpmg_n: Option<Orders>,
    pub total_time: f64,
    #[serde(default = "default_true")]
    pub compare: bool,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub chi: ChiSettings,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).context("parsing run config")?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            bail!("total_time must be positive, got {}", self.total_time);
        }
        if self.experiments().is_empty() {
            bail!("no orders given");
        }
        self.chi.request()?;
        self.noise.bath()?;
        Ok(())
    }

    /// `(scheme, n)` pairs in run order: Walsh sets first.
    pub fn experiments(&self) -> Vec<(Scheme, u32)> {
        let walsh = self.n.to_vec();
        let cpmg = self
            .cpmg_n
            .as_ref()
            .map(Orders::to_vec)
            .unwrap_or_else(|| walsh.clone());
        let mut out = Vec::new();
        if self.scheme != SchemeChoice::Cpmg {
            out.extend(walsh.iter().map(|&n| (Scheme::Walsh, n)));
        }
        if self.scheme != SchemeChoice::Walsh {
            out.extend(cpmg.iter().map(|&n| (Scheme::CpmgComparison, n)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitConversion {
    pub rad_per_us_per_mhz: f64,
    pub applied: Vec<Conversion>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flagged {
    pub scheme: &'static str,
    pub n: u32,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Epsilon {
    pub scheme: &'static str,
    pub n: u32,
    pub quantity: &'static str,
    /// `None` when the truth vanishes on every valid point.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub units: UnitConversion,
    pub outputs: Vec<Artifact>,
    pub timings: Vec<StageTiming>,
    pub invalid_chi: Vec<Flagged>,
    pub epsilons: Vec<Epsilon>,
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage {name} failed"))
}

fn timed<T>(
    timings: &mut Vec<StageTiming>,
    name: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = stage(name, f)?;
    timings.push(StageTiming {
        stage: name,
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}

/// Runs every configured experiment into `dir` (or the config's
/// `output_dir`). On failure every file written so far is removed.
pub fn run(config: &RunConfig, dir: Option<&Path>) -> Result<RunManifest> {
    stage("config", || config.validate())?;
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut guard = OutputGuard::new();
    guard.prepare_dir(&dir)?;
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    let request = config.chi.request()?;

    let mut chis_table = Table::new(CHI_HEADER);
    let mut invalid_chi = Vec::new();
    timed(&mut timings, "chi", || {
        for (scheme, n) in config.experiments() {
            let set = sequence_set(scheme, n, config.total_time)?;
            let d = compute_chis(&set, &config.noise, request)
                .with_context(|| format!("{} n={n}", scheme.name()))?;
            invalid_chi.extend(d.invalid_indices().into_iter().map(|index| Flagged {
                scheme: scheme.name(),
                n,
                index,
            }));
            push_chis(&mut chis_table, n, &d);
        }
        Ok(())
    })?;
    let chis_path = dir.join("chis.csv");
    outputs.push(guard.write(&chis_path, &chis_table.to_bytes()?)?);

    // reconstruction sees only what was written to chis.csv
    let mut g_table = Table::new(G_HEADER);
    let mut s_table = Table::new(S_HEADER);
    let recs = timed(&mut timings, "reconstruct", || {
        let groups = read_chis(&chis_path, None, config.total_time)?;
        let mut recs = Vec::new();
        for grp in groups {
            let rec = reconstruct(&grp.set, config.chi.cpmg_limit)
                .with_context(|| format!("{} n={}", grp.set.scheme.name(), grp.order_exponent))?;
            push_autocorr(&mut g_table, grp.order_exponent, &rec.g);
            push_spectrum(&mut s_table, grp.order_exponent, &rec.s);
            recs.push((grp.order_exponent, rec));
        }
        Ok(recs)
    })?;
    outputs.push(guard.write(&dir.join("g.csv"), &g_table.to_bytes()?)?);
    outputs.push(guard.write(&dir.join("s.csv"), &s_table.to_bytes()?)?);

    let mut metrics = Table::new(METRICS_HEADER);
    let mut epsilons = Vec::new();
    timed(&mut timings, "compare", || {
        if !config.compare {
            return Ok(());
        }
        let truth = config.noise.classical()?;
        for (n, rec) in &recs {
            let (eg, es) = compare_reconstruction(&mut metrics, *n, rec, &truth)?;
            let scheme = rec.g.scheme.name();
            epsilons.push(Epsilon {
                scheme,
                n: *n,
                quantity: "g",
                epsilon: eg,
            });
            epsilons.push(Epsilon {
                scheme,
                n: *n,
                quantity: "s",
                epsilon: es,
            });
        }
        Ok(())
    })?;
    outputs.push(guard.write(&dir.join("metrics.csv"), &metrics.to_bytes()?)?);

    let manifest = RunManifest {
        tool: "walsh-noise",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        units: UnitConversion {
            rad_per_us_per_mhz: RAD_PER_US_PER_MHZ,
            applied: config.noise.conversions(),
        },
        outputs,
        timings,
        invalid_chi,
        epsilons,
    };
    let json = stage("manifest", || Ok(serde_json::to_vec_pretty(&manifest)?))?;
    guard.write(&dir.join("manifest.json"), &json)?;
    guard.commit();
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
scheme = "both"
n = [5, 7]
cpmg_n = 5
total_time = 32.0

[chi]
method = "quadrature"

[[noise.ou]]
b2 = 0.003125
tau_c = 4.0
shift_mhz = 0.3
"#;

    #[test]
    fn parses_and_orders_experiments() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(
            c.experiments(),
            vec![
                (Scheme::Walsh, 5),
                (Scheme::Walsh, 7),
                (Scheme::CpmgComparison, 5)
            ]
        );
        assert!(c.compare);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("scheme = \"walsh\"\nn = 3\ntotal_time = -1.0").is_err());
        assert!(
            RunConfig::from_toml("scheme = \"walsh\"\nn = 3\ntotal_time = 1.0\nbogus = 1").is_err()
        );
        let mc = "scheme = \"walsh\"\nn = 3\ntotal_time = 1.0\n[chi]\nmethod = \"mc\"\nreps = 10";
        assert!(RunConfig::from_toml(mc).is_err());
        assert!(RunConfig::from_toml(&format!("{mc}\nseed = 3")).is_ok());
    }
}
