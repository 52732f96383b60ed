//! Signal generation for the identification experiments: colored Gaussian
//! input, a Hammerstein plant (soft clipping followed by a FIR) and
//! SNR-calibrated observation noise.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{config_err, FlafError, Result};

/// Default pole of the first-order coloring filter `1 / (1 - a z^-1)`.
pub const DEFAULT_COLORING_POLE: f64 = 0.8;

const INPUT_STREAM: u64 = 0;
const FIR_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta <= 0.5 {
        Ok(())
    } else {
        Err(config_err(format!("zeta = {zeta} outside (0, 0.5]")))
    }
}

#[inline]
fn soft_clip_unchecked(x: f64, zeta: f64) -> f64 {
    let ax = x.abs();
    if ax <= zeta {
        2.0 * x / (3.0 * zeta)
    } else if ax <= 2.0 * zeta {
        let t = 2.0 - ax / zeta;
        (3.0 - t * t) / 3.0 * x.signum()
    } else {
        x.signum()
    }
}

/// Soft-clipping nonlinearity with threshold `zeta`.
pub fn soft_clip(x: f64, zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    if !(x.abs() <= 1.0) {
        return Err(FlafError::Domain { index: 0, value: x });
    }
    Ok(soft_clip_unchecked(x, zeta))
}

/// Piecewise-constant nonlinearity threshold over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaSchedule {
    segments: Vec<(usize, f64)>,
}

impl ZetaSchedule {
    /// Segments are `(start_sample, zeta)`; the first must start at 0 and
    /// starts must strictly increase.
    pub fn new(segments: Vec<(usize, f64)>) -> Result<Self> {
        match segments.first() {
            Some(&(0, _)) => {}
            Some(&(start, _)) => {
                return Err(config_err(format!(
                    "zeta schedule starts at sample {start}, must cover sample 0"
                )))
            }
            None => return Err(config_err("zeta schedule is empty")),
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(config_err("zeta schedule starts must strictly increase"));
            }
        }
        for &(_, z) in &segments {
            check_zeta(z)?;
        }
        Ok(Self { segments })
    }

    pub fn constant(zeta: f64) -> Result<Self> {
        Self::new(vec![(0, zeta)])
    }

    pub fn segments(&self) -> &[(usize, f64)] {
        &self.segments
    }

    pub fn zeta_at(&self, n: usize) -> f64 {
        let idx = self.segments.partition_point(|&(s, _)| s <= n);
        self.segments[idx - 1].1
    }
}

/// The unknown system.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    pub zeta_schedule: ZetaSchedule,
    pub fir: Vec<f64>,
    /// Output SNR in dB; `f64::INFINITY` disables the noise.
    pub snr_db: f64,
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fir.is_empty() {
            return Err(config_err("plant FIR is empty"));
        }
        if let Some(t) = self.fir.iter().find(|t| !(t.abs() <= 1.0)) {
            return Err(config_err(format!("FIR tap {t} outside [-1, 1]")));
        }
        if self.snr_db.is_nan() {
            return Err(config_err("snr_db is NaN"));
        }
        Ok(())
    }
}

/// Signals of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBundle {
    pub x: Vec<f64>,
    /// Soft-clipped input `ybar`.
    pub clipped: Vec<f64>,
    /// Noise-free plant output.
    pub clean: Vec<f64>,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
}

impl SignalBundle {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Realized output SNR `10 log10(P_clean / P_noise)` in dB.
    pub fn empirical_snr_db(&self) -> f64 {
        let pc: f64 = self.clean.iter().map(|c| c * c).sum();
        let pv: f64 = self.v.iter().map(|v| v * v).sum();
        10.0 * (pc / pv).log10()
    }

    /// Plain-text columns `sample x ybar d v`, one row per sample.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# sample,x,ybar,d,v")?;
        for n in 0..self.len() {
            writeln!(
                out,
                "{},{:.9e},{:.9e},{:.9e},{:.9e}",
                n, self.x[n], self.clipped[n], self.d[n], self.v[n]
            )?;
        }
        Ok(())
    }
}

/// AR(1)-colored Gaussian noise rescaled so that `max |x| = 1`.
pub fn colored_input(length: usize, pole: f64, seed: u64) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(config_err("input length must be positive"));
    }
    if !(pole.abs() < 1.0) {
        return Err(config_err(format!(
            "coloring pole {pole} must satisfy |pole| < 1"
        )));
    }
    let mut rng = rng_for(seed, INPUT_STREAM);
    let mut state: f64 = rng.sample::<f64, _>(StandardNormal) / (1.0 - pole * pole).sqrt();
    let mut x = Vec::with_capacity(length);
    x.push(state);
    for _ in 1..length {
        state = pole * state + rng.sample::<f64, _>(StandardNormal);
        x.push(state);
    }
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(x)
}

/// [`colored_input`] with the default pole.
pub fn gen_colored_input(length: usize, seed: u64) -> Result<Vec<f64>> {
    colored_input(length, DEFAULT_COLORING_POLE, seed)
}

/// FIR taps drawn independently and uniformly on `[-1, 1]`.
pub fn random_fir(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, FIR_STREAM);
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Runs `x` through the plant and adds noise drawn from `seed`.
pub fn apply_plant(x: &[f64], spec: &PlantSpec, seed: u64) -> Result<SignalBundle> {
    spec.validate()?;
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(FlafError::Domain { index, value });
    }
    let clipped: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(n, &v)| soft_clip_unchecked(v, spec.zeta_schedule.zeta_at(n)))
        .collect();
    let clean: Vec<f64> = (0..x.len())
        .map(|n| {
            spec.fir
                .iter()
                .take(n + 1)
                .enumerate()
                .map(|(k, h)| h * clipped[n - k])
                .sum()
        })
        .collect();
    let v = if spec.snr_db.is_infinite() && spec.snr_db > 0.0 {
        vec![0.0; x.len()]
    } else {
        let power = clean.iter().map(|c| c * c).sum::<f64>() / clean.len().max(1) as f64;
        let sigma = (power * 10f64.powf(-spec.snr_db / 10.0)).sqrt();
        let mut rng = rng_for(seed, NOISE_STREAM);
        (0..x.len())
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let d = clean.iter().zip(&v).map(|(c, n)| c + n).collect();
    Ok(SignalBundle {
        x: x.to_vec(),
        clipped,
        clean,
        d,
        v,
    })
}
