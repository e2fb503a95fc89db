//! Stages shared by the single-step subcommands and `run`.

use anyhow::{bail, Context, Result};
use walsh_noise::quantum_bath::qc_signals;
use walsh_noise::reconstruction::{dft_symmetric, error_metrics, idft_symmetric};
use walsh_noise::sequences::{cpmg_comparison_set, walsh_set};
use walsh_noise::{
    cpmg_reconstruct, decay_set, walsh_reconstruct, Autocorr64, ChiRequest, DecaySet64, Error,
    NoiseCorrelation, Scheme, SequenceSet64, Spectrum64,
};

use crate::model::NoiseSpec;
use crate::table::{float, Table};

pub fn sequence_set(scheme: Scheme, n: u32, total_time: f64) -> Result<SequenceSet64> {
    let set = match scheme {
        Scheme::Walsh => walsh_set(n, total_time),
        Scheme::CpmgComparison => cpmg_comparison_set(n, total_time),
    };
    set.with_context(|| format!("building {} set n={n}", scheme.name()))
}

/// Decay exponents of `set`. With nuclear spins present the exponents are
/// read off the simulated signal, `χ = -ln(2S - 1)`.
pub fn compute_chis(
    set: &SequenceSet64,
    noise: &NoiseSpec,
    request: ChiRequest,
) -> Result<DecaySet64> {
    if noise.spins.is_empty() {
        return Ok(decay_set(set, &noise.classical()?, request)?);
    }
    if request != ChiRequest::Quadrature {
        bail!("nuclear spins require the quadrature chi method");
    }
    Ok(qc_signals(&noise.bath()?, set)?.chis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub g: Autocorr64,
    pub s: Spectrum64,
}

/// Walsh: `Ḡ` by inversion, `S` by the symmetric DFT. CPMG: `S` by the
/// triangular solve, `G` by the inverse DFT.
pub fn reconstruct(chis: &DecaySet64, cpmg_limit: Option<usize>) -> Result<Reconstruction> {
    match chis.scheme {
        Scheme::Walsh => {
            let g = walsh_reconstruct(chis)?.autocorr;
            let s = dft_symmetric(&g)?;
            Ok(Reconstruction { g, s })
        }
        Scheme::CpmgComparison => {
            let s = cpmg_reconstruct(chis, cpmg_limit)?;
            let g = idft_symmetric(&s)?;
            Ok(Reconstruction { g, s })
        }
    }
}

/// Appends one comparison block to a metrics table and returns `ε`, or
/// `None` when the truth is identically zero on the valid points.
#[allow(clippy::too_many_arguments)]
pub fn compare_block(
    table: &mut Table,
    scheme: Scheme,
    n: u32,
    quantity: &str,
    coordinates: &[f64],
    values: &[f64],
    valid: &[bool],
    truth_at: impl Fn(f64) -> f64,
) -> Result<Option<f64>> {
    let truth: Vec<f64> = coordinates.iter().map(|&x| truth_at(x)).collect();
    let (epsilon, pointwise) = match error_metrics(values, &truth, Some(valid)) {
        Ok(m) => (Some(m.epsilon), m.pointwise),
        Err(Error::ZeroReference) => {
            let p = values
                .iter()
                .zip(&truth)
                .map(|(&a, &b)| if a == b { 0.0 } else { f64::INFINITY })
                .collect();
            (None, p)
        }
        Err(e) => return Err(e.into()),
    };
    for i in 0..values.len() {
        table.push(vec![
            scheme.name().into(),
            n.to_string(),
            quantity.into(),
            i.to_string(),
            float(coordinates[i]),
            float(values[i]),
            float(truth[i]),
            float(pointwise[i]),
            float(epsilon.unwrap_or(f64::NAN)),
            epsilon.is_some().to_string(),
        ]);
    }
    Ok(epsilon)
}

/// Compares both reconstructed curves with the classical model.
pub fn compare_reconstruction<M: NoiseCorrelation<f64>>(
    table: &mut Table,
    n: u32,
    rec: &Reconstruction,
    truth: &M,
) -> Result<(Option<f64>, Option<f64>)> {
    let eg = compare_block(
        table,
        rec.g.scheme,
        n,
        "g",
        &rec.g.times,
        &rec.g.values,
        &rec.g.valid,
        |t| truth.autocorrelation(t),
    )?;
    let es = compare_block(
        table,
        rec.s.scheme,
        n,
        "s",
        &rec.s.omegas,
        &rec.s.values,
        &rec.s.valid,
        |w| truth.spectrum(w),
    )?;
    Ok((eg, es))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::METRICS_HEADER;

    #[test]
    fn silent_noise_is_flagged() {
        let noise = NoiseSpec {
            ou: vec!["0,4".parse().unwrap()],
            spins: vec![],
        };
        let set = sequence_set(Scheme::Walsh, 3, 8.0).unwrap();
        let chis = compute_chis(&set, &noise, ChiRequest::Quadrature).unwrap();
        assert!(chis.values.iter().all(|&v| v == 0.0));
        let rec = reconstruct(&chis, None).unwrap();
        assert!(rec.g.values.iter().all(|&v| v == 0.0));
        let mut t = Table::new(METRICS_HEADER);
        let (eg, es) =
            compare_reconstruction(&mut t, 3, &rec, &noise.classical().unwrap()).unwrap();
        assert_eq!((eg, es), (None, None));
        assert_eq!(t.len(), 16);
    }

    #[test]
    fn spins_need_quadrature() {
        let noise = NoiseSpec {
            ou: vec![],
            spins: vec!["0.5,0.01,0.02".parse().unwrap()],
        };
        let set = sequence_set(Scheme::Walsh, 2, 4.0).unwrap();
        assert!(compute_chis(&set, &noise, ChiRequest::Bilinear).is_err());
        assert!(compute_chis(&set, &noise, ChiRequest::Quadrature).is_ok());
    }
}
