//! Single-step subcommands. Each returns its tables keyed by default file
//! name; the caller decides where they go.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use walsh_noise::decoherence::chi_quadrature;
use walsh_noise::noise::sample_ensemble;
use walsh_noise::quantum_bath::chi_from_signal;
use walsh_noise::uncertainty::{
    monte_carlo_cpmg, monte_carlo_walsh, normalize_and_extract_chi, propagate_cpmg,
    propagate_walsh, RawReadout,
};
use walsh_noise::{ChiRequest, Scheme, ShufflingMatrix, WalshBasis};

use crate::model::{NoiseSpec, OuSpec};
use crate::pipeline::{compare_block, compute_chis, reconstruct, sequence_set};
use crate::table::{
    float, opt_float, push_autocorr, push_chis, push_spectrum, read_chis, read_curves, read_rows,
    Table, CHI_HEADER, G_HEADER, METRICS_HEADER, S_HEADER,
};

pub type Named = (&'static str, Table);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Walsh,
    Shuffling,
    ShufflingInverse,
    Dyadic,
}

pub fn walsh_matrix(n: u32, kind: MatrixKind) -> Result<Named> {
    let t = match kind {
        MatrixKind::Walsh => {
            let basis = WalshBasis::new(n)?;
            let mut t = Table::new(&["m", "sequency", "j", "entry"]);
            for m in 0..basis.len() {
                let seq = basis.sign_changes(m).to_string();
                for j in 0..basis.len() {
                    t.push(vec![
                        m.to_string(),
                        seq.clone(),
                        j.to_string(),
                        basis.entry(m, j).to_string(),
                    ]);
                }
            }
            t
        }
        MatrixKind::Shuffling | MatrixKind::ShufflingInverse => {
            let sm = ShufflingMatrix::new(n)?;
            let mut t = Table::new(&["row", "col", "entry"]);
            for r in 0..sm.len() {
                for c in 0..sm.len() {
                    let v = if kind == MatrixKind::Shuffling {
                        sm.get(r, c)
                    } else {
                        sm.inverse_get(r, c)
                    };
                    t.push(vec![r.to_string(), c.to_string(), v.to_string()]);
                }
            }
            t
        }
        MatrixKind::Dyadic => {
            let d = WalshBasis::new(n)?.diagonal();
            let mut t = Table::new(&["k", "ratio", "value", "inverse"]);
            for k in 0..d.len() {
                t.push(vec![
                    k.to_string(),
                    d.ratio(k).to_string(),
                    float(d.value::<f64>(k)),
                    float(d.inverse_value::<f64>(k)),
                ]);
            }
            t
        }
    };
    Ok(("walsh_matrix.csv", t))
}

pub fn sequences(scheme: Scheme, n: u32, total_time: f64) -> Result<Named> {
    let set = sequence_set(scheme, n, total_time)?;
    let mut t = Table::new(&[
        "scheme", "index", "kind", "pulses", "segment", "start", "duration", "sign",
    ]);
    for (i, s) in set.sequences.iter().enumerate() {
        let b = s.boundaries();
        for (k, seg) in s.segments().iter().enumerate() {
            t.push(vec![
                scheme.name().into(),
                i.to_string(),
                s.kind().to_string(),
                s.pulse_count().to_string(),
                k.to_string(),
                float(b[k]),
                float(seg.duration),
                seg.sign.to_string(),
            ]);
        }
    }
    Ok(("sequences.csv", t))
}

pub fn simulate_ou(ou: &[OuSpec], dt: f64, steps: usize, reps: usize, seed: u64) -> Result<Named> {
    let noise = NoiseSpec {
        ou: ou.to_vec(),
        spins: Vec::new(),
    };
    let ens = sample_ensemble(&noise.classical()?, dt, steps, reps, seed)?;
    let mut t = Table::new(&["rep", "step", "time", "value"]);
    for (r, tr) in ens.iter().enumerate() {
        for (i, v) in tr.samples.iter().enumerate() {
            t.push(vec![
                r.to_string(),
                i.to_string(),
                float(tr.time(i)),
                float(*v),
            ]);
        }
    }
    Ok(("trajectories.csv", t))
}

pub fn chi(
    scheme: Scheme,
    n: u32,
    total_time: f64,
    noise: &NoiseSpec,
    request: ChiRequest,
) -> Result<Named> {
    let set = sequence_set(scheme, n, total_time)?;
    let d = compute_chis(&set, noise, request)?;
    let mut t = Table::new(CHI_HEADER);
    push_chis(&mut t, n, &d);
    Ok(("chis.csv", t))
}

pub fn qc_signal(scheme: Scheme, n: u32, total_time: f64, noise: &NoiseSpec) -> Result<Named> {
    let set = sequence_set(scheme, n, total_time)?;
    let bath = noise.bath()?;
    let mut t = Table::new(&[
        "scheme",
        "n",
        "index",
        "signal",
        "coherence_re",
        "coherence_im",
        "chi_classical",
        "chi",
        "valid",
    ]);
    for (i, s) in set.sequences.iter().enumerate() {
        let m = bath.coherence_product(s);
        let chi_c = chi_quadrature(s, &bath.classical)?;
        let signal = (1.0 + (-chi_c).exp() * m.re) / 2.0;
        let chi = chi_from_signal(signal);
        t.push(vec![
            scheme.name().into(),
            n.to_string(),
            i.to_string(),
            float(signal),
            float(m.re),
            float(m.im),
            float(chi_c),
            float(chi.unwrap_or(f64::NAN)),
            chi.is_some().to_string(),
        ]);
    }
    Ok(("qc_signal.csv", t))
}

pub fn reconstruct_file(
    chis: &Path,
    scheme: Option<Scheme>,
    total_time: f64,
    cpmg_limit: Option<usize>,
) -> Result<(Named, Named)> {
    let groups = read_chis(chis, scheme, total_time)?;
    let mut g = Table::new(G_HEADER);
    let mut s = Table::new(S_HEADER);
    for grp in &groups {
        let rec = reconstruct(&grp.set, cpmg_limit)
            .with_context(|| format!("{} n={}", grp.set.scheme.name(), grp.order_exponent))?;
        push_autocorr(&mut g, grp.order_exponent, &rec.g);
        push_spectrum(&mut s, grp.order_exponent, &rec.s);
    }
    Ok((("g.csv", g), ("s.csv", s)))
}

pub fn compare_files(g: &Path, s: &Path, noise: &NoiseSpec) -> Result<Named> {
    let truth = noise.classical()?;
    let mut t = Table::new(METRICS_HEADER);
    use walsh_noise::NoiseCorrelation;
    for c in read_curves(g, "time", "g")? {
        compare_block(
            &mut t,
            c.scheme,
            c.n,
            "g",
            &c.coordinates,
            &c.values,
            &c.valid,
            |x| truth.autocorrelation(x),
        )?;
    }
    for c in read_curves(s, "omega", "s")? {
        compare_block(
            &mut t,
            c.scheme,
            c.n,
            "s",
            &c.coordinates,
            &c.values,
            &c.valid,
            |w| truth.spectrum(w),
        )?;
    }
    Ok(("metrics.csv", t))
}

#[derive(Debug, Deserialize)]
struct RawRow {
    index: usize,
    p_plus: f64,
    p_minus: f64,
    sigma_plus: f64,
    sigma_minus: f64,
}

pub fn ingest(raw: &Path, contrast: f64) -> Result<Named> {
    let rows: Vec<RawRow> = read_rows(raw)?;
    let mut t = Table::new(&["index", "chi", "sigma_chi", "valid"]);
    for r in rows {
        let e = normalize_and_extract_chi(&RawReadout {
            p_plus: r.p_plus,
            p_minus: r.p_minus,
            sigma_plus: r.sigma_plus,
            sigma_minus: r.sigma_minus,
            contrast,
        })
        .with_context(|| format!("readout index {}", r.index))?;
        t.push(vec![
            r.index.to_string(),
            float(e.chi.unwrap_or(f64::NAN)),
            opt_float(e.sigma_chi),
            e.is_valid().to_string(),
        ]);
    }
    Ok(("chis.csv", t))
}

pub struct BudgetOptions {
    pub uniform_sigma: Option<f64>,
    pub cpmg_limit: Option<usize>,
    pub mc_draws: usize,
    pub seed: u64,
}

pub fn error_budget(
    chis: &Path,
    scheme: Option<Scheme>,
    total_time: f64,
    opts: &BudgetOptions,
) -> Result<Named> {
    let groups = read_chis(chis, scheme, total_time)?;
    let mut t = Table::new(&[
        "scheme",
        "n",
        "quantity",
        "index",
        "coordinate",
        "sigma",
        "sigma_mc",
    ]);
    for grp in groups {
        let d = &grp.set;
        let sigma: Vec<f64> = match (opts.uniform_sigma, &d.sigma) {
            (Some(u), _) => vec![u; d.len()],
            (None, Some(s)) => s.clone(),
            (None, None) => bail!(
                "{} n={}: no sigma_chi column; pass --uniform-sigma",
                d.scheme.name(),
                grp.order_exponent
            ),
        };
        let n = grp.order_exponent;
        let len = 1usize << n;
        let (quantity, coords, analytic, mc) = match d.scheme {
            Scheme::Walsh => {
                let a = propagate_walsh(&sigma, total_time)?;
                let mc = (opts.mc_draws > 0)
                    .then(|| monte_carlo_walsh(&sigma, total_time, opts.mc_draws, opts.seed))
                    .transpose()?;
                let tau = total_time / len as f64;
                (
                    "g",
                    (0..len).map(|j| j as f64 * tau).collect::<Vec<_>>(),
                    a,
                    mc,
                )
            }
            Scheme::CpmgComparison => {
                let a = propagate_cpmg(&sigma, total_time, opts.cpmg_limit)?;
                let mc = (opts.mc_draws > 0)
                    .then(|| {
                        monte_carlo_cpmg(
                            &sigma,
                            total_time,
                            opts.cpmg_limit,
                            opts.mc_draws,
                            opts.seed,
                        )
                    })
                    .transpose()?;
                let dw = std::f64::consts::PI / total_time;
                ("s", (0..=len).map(|k| k as f64 * dw).collect(), a, mc)
            }
        };
        for i in 0..analytic.len() {
            t.push(vec![
                d.scheme.name().into(),
                n.to_string(),
                quantity.into(),
                i.to_string(),
                float(coords[i]),
                float(analytic[i]),
                opt_float(mc.as_ref().map(|m| m[i])),
            ]);
        }
    }
    Ok(("error_budget.csv", t))
}
