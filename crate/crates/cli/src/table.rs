//! CSV tables: header row, fixed column order, floats as `{:.16e}`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use walsh_noise::{Autocorr64, ChiMethod, DecaySet64, Scheme, Spectrum64};

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().context("flushing csv buffer")
    }
}

pub fn read_rows<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: row {}", path.display(), i + 1)))
        .collect()
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    s.parse().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Rows of a decay-exponent table. `scheme` and `n` are optional so that
/// ingested tables (`index,chi,sigma_chi,valid`) read the same way.
#[derive(Debug, Deserialize)]
struct ChiRow {
    scheme: Option<String>,
    n: Option<u32>,
    index: usize,
    chi: f64,
    sigma_chi: Option<f64>,
    valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiGroup {
    pub order_exponent: u32,
    pub set: DecaySet64,
}

fn order_of(scheme: Scheme, len: usize) -> Result<u32> {
    let base = match scheme {
        Scheme::Walsh => len,
        Scheme::CpmgComparison => len.saturating_sub(1),
    };
    if base == 0 || !base.is_power_of_two() {
        bail!(
            "{} table with {len} rows does not match any order 2^n",
            scheme.name()
        );
    }
    Ok(base.trailing_zeros())
}

/// Groups a chi table by `(scheme, n)` in order of first appearance.
pub fn read_chis(
    path: &Path,
    default_scheme: Option<Scheme>,
    total_time: f64,
) -> Result<Vec<ChiGroup>> {
    let rows: Vec<ChiRow> = read_rows(path)?;
    let mut order: Vec<(Scheme, Option<u32>)> = Vec::new();
    let mut groups: BTreeMap<(u8, Option<u32>), Vec<ChiRow>> = BTreeMap::new();
    for row in rows {
        let scheme = match (&row.scheme, default_scheme) {
            (Some(s), _) => parse_scheme(s)?,
            (None, Some(s)) => s,
            (None, None) => bail!("{}: no scheme column; pass --scheme", path.display()),
        };
        let key = (scheme as u8, row.n);
        if !groups.contains_key(&key) {
            order.push((scheme, row.n));
        }
        groups.entry(key).or_default().push(row);
    }
    let mut out = Vec::new();
    for (scheme, n) in order {
        let mut rows = groups.remove(&(scheme as u8, n)).expect("group exists");
        rows.sort_by_key(|r| r.index);
        if rows.iter().enumerate().any(|(i, r)| r.index != i) {
            bail!(
                "{}: indices of {} group are not 0..{}",
                path.display(),
                scheme.name(),
                rows.len()
            );
        }
        let order_exponent = order_of(scheme, rows.len())?;
        if let Some(n) = n {
            if n != order_exponent {
                bail!("{}: group n = {n} has {} rows", path.display(), rows.len());
            }
        }
        let values: Vec<f64> = rows.iter().map(|r| r.chi).collect();
        let mut set = DecaySet64::new(scheme, total_time, values, ChiMethod::Quadrature);
        for (v, r) in set.valid.iter_mut().zip(&rows) {
            *v &= r.valid.unwrap_or(true);
        }
        if rows.iter().any(|r| r.sigma_chi.is_some()) {
            let sig = rows.iter().map(|r| r.sigma_chi.unwrap_or(0.0)).collect();
            set = set.with_sigma(sig)?;
        }
        out.push(ChiGroup {
            order_exponent,
            set,
        });
    }
    Ok(out)
}

pub const CHI_HEADER: &[&str] = &["scheme", "n", "index", "chi", "sigma_chi", "valid"];
pub const G_HEADER: &[&str] = &["scheme", "n", "index", "time", "g", "sigma_g", "valid"];
pub const S_HEADER: &[&str] = &["scheme", "n", "index", "omega", "s", "sigma_s", "valid"];
pub const METRICS_HEADER: &[&str] = &[
    "scheme",
    "n",
    "quantity",
    "index",
    "coordinate",
    "estimate",
    "truth",
    "pointwise_error",
    "epsilon",
    "defined",
];

pub fn push_chis(t: &mut Table, n: u32, d: &DecaySet64) {
    for (i, (&v, &ok)) in d.values.iter().zip(&d.valid).enumerate() {
        t.push(vec![
            d.scheme.name().into(),
            n.to_string(),
            i.to_string(),
            float(v),
            opt_float(d.sigma.as_ref().map(|s| s[i])),
            ok.to_string(),
        ]);
    }
}

pub fn push_autocorr(t: &mut Table, n: u32, g: &Autocorr64) {
    for i in 0..g.len() {
        t.push(vec![
            g.scheme.name().into(),
            n.to_string(),
            i.to_string(),
            float(g.times[i]),
            float(g.values[i]),
            opt_float(g.sigma.as_ref().map(|s| s[i])),
            g.valid[i].to_string(),
        ]);
    }
}

pub fn push_spectrum(t: &mut Table, n: u32, s: &Spectrum64) {
    for i in 0..s.len() {
        t.push(vec![
            s.scheme.name().into(),
            n.to_string(),
            i.to_string(),
            float(s.omegas[i]),
            float(s.values[i]),
            opt_float(s.sigma.as_ref().map(|v| v[i])),
            s.valid[i].to_string(),
        ]);
    }
}

/// One reconstructed curve read back from `g.csv` or `s.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub scheme: Scheme,
    pub n: u32,
    pub coordinates: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Reads a `g.csv` (`value_col = "g"`, `coord_col = "time"`) or `s.csv`.
pub fn read_curves(path: &Path, coord_col: &str, value_col: &str) -> Result<Vec<Curve>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column {name:?}", path.display()))
    };
    let (cs, cn, ci, cc, cv, cvalid) = (
        col("scheme")?,
        col("n")?,
        col("index")?,
        col(coord_col)?,
        col(value_col)?,
        col("valid")?,
    );
    let mut curves: Vec<Curve> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let ctx = || format!("{}: row {}", path.display(), line + 1);
        let scheme = parse_scheme(get(cs)).with_context(ctx)?;
        let n: u32 = get(cn).parse().with_context(ctx)?;
        let index: usize = get(ci).parse().with_context(ctx)?;
        let pos = match curves.iter().position(|c| c.scheme == scheme && c.n == n) {
            Some(p) => p,
            None => {
                curves.push(Curve {
                    scheme,
                    n,
                    coordinates: Vec::new(),
                    values: Vec::new(),
                    valid: Vec::new(),
                });
                curves.len() - 1
            }
        };
        let c = &mut curves[pos];
        if index != c.values.len() {
            bail!(
                "{}: rows of {} n={n} are not in index order",
                ctx(),
                scheme.name()
            );
        }
        c.coordinates.push(get(cc).parse().with_context(ctx)?);
        c.values.push(get(cv).parse().with_context(ctx)?);
        c.valid.push(get(cvalid).parse().with_context(ctx)?);
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1f64, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
        assert_eq!(opt_float(None), "");
    }

    #[test]
    fn table_bytes() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(
            String::from_utf8(t.to_bytes().unwrap()).unwrap(),
            "a,b\n1,\"x,y\"\n"
        );
    }
}
