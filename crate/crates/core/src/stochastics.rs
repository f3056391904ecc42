//! Seedable random streams and the distribution samplers used throughout the
//! crate.
//!
//! Every stream is a ChaCha8 keystream keyed by the master seed and addressed
//! by a 64-bit stream id, so any (seed, stream) pair can be reconstructed
//! independently on any thread. Child streams (per replicate, per chain, per
//! draw chunk) are derived by hashing the parent id with a child index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};

/// An independent, reproducible random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A child stream. Does not consume any draws from `self`.
    pub fn substream(&self, child: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(child.wrapping_add(0x5851_f42d_4c95_7f2d)));
        RngStream::new(self.master_seed, id)
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Standard normal draw.
    #[inline]
    pub fn std_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    pub(crate) fn std_exp(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }
}

/// Draw from N(mean, sd²). `sd = 0` returns `mean` exactly.
pub fn sample_normal(rng: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "normal(mean = {mean}, sd = {sd})"
        )));
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    Ok(mean + sd * rng.std_normal())
}

/// Draw from Gamma(shape, scale = 1).
///
/// Marsaglia–Tsang squeeze for shape ≥ 1. For shape < 1 the boosting
/// identity `G(a) = G(a + 1) · U^{1/a}` is applied, evaluated in log space so
/// that very small shapes do not underflow to zero.
pub fn sample_gamma(rng: &mut RngStream, shape: f64) -> Result<f64> {
    if !shape.is_finite() || shape <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma shape = {shape}")));
    }
    Ok(gamma_unchecked(rng, shape))
}

pub(crate) fn gamma_unchecked(rng: &mut RngStream, shape: f64) -> f64 {
    if shape < 1.0 {
        let boosted = marsaglia_tsang(rng, shape + 1.0);
        let log_u = rng.uniform().ln();
        let g = (boosted.ln() + log_u / shape).exp();
        // underflow guard for tiny shapes: the draw must stay strictly positive
        return g.max(f64::MIN_POSITIVE);
    }
    if shape == 1.0 {
        return rng.std_exp().max(f64::MIN_POSITIVE);
    }
    marsaglia_tsang(rng, shape)
}

fn marsaglia_tsang(rng: &mut RngStream, shape: f64) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = rng.std_normal();
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = rng.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Dirichlet(counts) draw via normalized unit-scale gamma variates.
pub fn sample_dirichlet_counts(rng: &mut RngStream, counts: &[u64]) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::InvalidParameter("empty Dirichlet parameter".into()));
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet count {k} is zero"
        )));
    }
    let mut weights: Vec<f64> = counts
        .iter()
        .map(|&c| gamma_unchecked(rng, c as f64))
        .collect();
    normalize(&mut weights);
    Ok(weights)
}

/// Dirichlet(1, …, 1) of length `n`: the Bayesian-bootstrap weights.
pub fn sample_dirichlet_flat(rng: &mut RngStream, n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..n).map(|_| rng.std_exp().max(f64::MIN_POSITIVE)));
    normalize(out);
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
}

/// Draw `loc + scale·T` with `T` standard Student-t on `df` degrees of freedom.
pub fn sample_student_t(rng: &mut RngStream, df: f64, loc: f64, scale: f64) -> Result<f64> {
    if !df.is_finite() || df <= 0.0 || !scale.is_finite() || scale <= 0.0 || !loc.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "student-t(df = {df}, loc = {loc}, scale = {scale})"
        )));
    }
    Ok(loc + scale * std_t(rng, df))
}

pub(crate) fn std_t(rng: &mut RngStream, df: f64) -> f64 {
    let z = rng.std_normal();
    let chi2 = 2.0 * gamma_unchecked(rng, 0.5 * df);
    z / (chi2 / df).sqrt()
}
