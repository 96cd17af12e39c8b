use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SteadyState;
use crate::ingest::MeasurementSet;
use crate::{Error, Result, C64};

/// Adds complex Gaussian noise with power `mean|x|^2 / snr`, split evenly
/// between real and imaginary parts. `snr = inf` returns the input.
pub fn add_noise(m: &DMatrix<C64>, snr: f64, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    if snr.is_infinite() || m.is_empty() {
        return m.clone();
    }
    let power = m.iter().map(|z| z.norm_sqr()).sum::<f64>() / m.len() as f64;
    let sd = (power / snr / 2.0).sqrt();
    // Row-major draw order: slot by slot.
    let mut out = m.clone();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            out[(r, c)] += C64::new(sd * re, sd * im);
        }
    }
    out
}

/// Observed phasors of a list of steady states, one slot per state.
///
/// Voltage and current channels receive independent noise; the power
/// channel is recomputed from the noisy pair so the record stays consistent.
pub fn measure(
    states: &[SteadyState],
    labels: &[String],
    observed: &[usize],
    snr: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if !(snr > 0.0) {
        return Err(Error::Invalid(format!("snr must be positive, got {snr}")));
    }
    if let Some(&b) = observed.iter().find(|&&b| b >= labels.len()) {
        return Err(Error::Invalid(format!("observed index {b} out of range")));
    }
    let k = states.len();
    let pick = |f: &dyn Fn(&SteadyState) -> &nalgebra::DVector<C64>| {
        DMatrix::from_fn(k, observed.len(), |s, j| f(&states[s])[observed[j]])
    };
    let v = pick(&|st| &st.v);
    let i = pick(&|st| &st.i);
    let mut rng_v = ChaCha8Rng::seed_from_u64(seed);
    rng_v.set_stream(u64::MAX - 1);
    let mut rng_i = ChaCha8Rng::seed_from_u64(seed);
    rng_i.set_stream(u64::MAX);
    let v = add_noise(&v, snr, &mut rng_v);
    let i = add_noise(&i, snr, &mut rng_i);
    let s = v.zip_map(&i, |a, b| a * b.conj());
    let names = observed.iter().map(|&b| labels[b].clone()).collect();
    MeasurementSet::new(names, v, Some(i), Some(s))
}
