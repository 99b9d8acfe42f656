//! DDPM noise-schedule mathematics with a pluggable denoiser.
//!
//! The forward process corrupts a latent `z0` over `T` timesteps with
//! variances `beta_1 ..= beta_T`. Two forms are provided:
//!
//! * [`step_sample`] — the single-step kernel
//!   `z_t = sqrt(1 - beta_t) z_{t-1} + sqrt(beta_t) eps`;
//! * [`q_sample`] — the closed multi-step form
//!   `z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps`, where
//!   `alpha_bar_t = prod_{s<=t} (1 - beta_s)`.
//!
//! Composing single steps yields exactly the closed-form marginal, which
//! the tests verify by Monte Carlo; both are exposed so the relationship
//! is checkable rather than assumed.
//!
//! The reverse update is
//!
//! ```text
//! z_{t-1} = (z_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)
//!           + sigma_t * z
//! ```
//!
//! with `eps_hat` supplied by a [`Denoiser`] — here an arbitrary
//! deterministic function, so scheduler correctness is testable without
//! any neural network. Every stochastic operation takes an explicit
//! seed; there is no ambient randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Which reverse-process standard deviation `sigma_t` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceKind {
    /// `sigma_t = sqrt(beta_t)`, the simpler DDPM choice.
    #[default]
    BetaSqrt,
    /// Posterior variance
    /// `sigma_t² = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)`.
    Posterior,
}

/// Precomputed `beta`, `alpha`, `alpha_bar`, `sigma` sequences.
///
/// Timesteps are 1-indexed: `beta(1)` is the first noising step and
/// `alpha_bar(0) = 1` by definition.
#[derive(Debug, Clone)]
pub struct DiffusionSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
    sigmas: Vec<f64>,
    variance: VarianceKind,
}

impl DiffusionSchedule {
    /// Linear schedule from `beta_start` to `beta_end`, endpoints
    /// included, with `sigma_t = sqrt(beta_t)`.
    pub fn linear(t_steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if t_steps == 0 {
            return Err(Error::Usage("schedule needs at least one timestep".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::Usage(format!(
                "need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
            )));
        }
        let betas: Vec<f64> = if t_steps == 1 {
            vec![beta_start]
        } else {
            (0..t_steps)
                .map(|i| {
                    beta_start + (beta_end - beta_start) * i as f64 / (t_steps - 1) as f64
                })
                .collect()
        };
        Ok(Self::from_betas(betas, VarianceKind::BetaSqrt))
    }

    fn from_betas(betas: Vec<f64>, variance: VarianceKind) -> Self {
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut prod = 1.0;
        for &a in &alphas {
            prod *= a;
            alpha_bars.push(prod);
        }
        let mut schedule = Self { betas, alphas, alpha_bars, sigmas: Vec::new(), variance };
        schedule.sigmas = schedule.compute_sigmas();
        schedule
    }

    fn compute_sigmas(&self) -> Vec<f64> {
        (1..=self.len())
            .map(|t| match self.variance {
                VarianceKind::BetaSqrt => self.beta(t).sqrt(),
                VarianceKind::Posterior => {
                    let var = self.beta(t) * (1.0 - self.alpha_bar(t - 1))
                        / (1.0 - self.alpha_bar(t));
                    var.sqrt()
                }
            })
            .collect()
    }

    /// Same schedule with a different `sigma_t` convention.
    pub fn with_variance(mut self, variance: VarianceKind) -> Self {
        self.variance = variance;
        self.sigmas = self.compute_sigmas();
        self
    }

    /// Number of timesteps `T`.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn variance(&self) -> VarianceKind {
        self.variance
    }

    /// `beta_t` for `t` in `1..=T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// `alpha_t = 1 - beta_t` for `t` in `1..=T`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// Cumulative product `alpha_bar_t` for `t` in `0..=T`;
    /// `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Reverse-process standard deviation for `t` in `1..=T`.
    pub fn sigma(&self, t: usize) -> f64 {
        self.sigmas[t - 1]
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.len() {
            Err(Error::Usage(format!("timestep {t} outside 1..={}", self.len())))
        } else {
            Ok(())
        }
    }
}

/// Seeded stream of standard-normal draws (ChaCha-based).
///
/// Every stochastic operation in the toolkit owns one of these; there is
/// no ambient RNG, so identical seeds give identical trajectories.
pub struct NoiseStream {
    rng: ChaCha12Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    /// Next `len` independent N(0, 1) draws.
    pub fn draw(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| StandardNormal.sample(&mut self.rng)).collect()
    }
}

/// Noise predictor interface: `(z_t, t, condition) -> eps_hat`.
///
/// Implementations must be deterministic given their inputs; the
/// toolkit's determinism contract depends on it. The condition tensor is
/// opaque to the scheduler and may be empty.
pub trait Denoiser {
    fn predict_noise(&self, z_t: &[f64], t: usize, condition: &[f64]) -> Vec<f64>;
}

impl<F> Denoiser for F
where
    F: Fn(&[f64], usize, &[f64]) -> Vec<f64>,
{
    fn predict_noise(&self, z_t: &[f64], t: usize, condition: &[f64]) -> Vec<f64> {
        self(z_t, t, condition)
    }
}

fn check_shapes(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "{what}: shape mismatch, {} vs {} elements",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Closed-form forward sample
/// `z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps`.
pub fn q_sample(z0: &[f64], t: usize, eps: &[f64], schedule: &DiffusionSchedule) -> Result<Vec<f64>> {
    schedule.check_t(t)?;
    check_shapes(z0, eps, "q_sample")?;
    let ab = schedule.alpha_bar(t);
    let (signal, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(z0.iter().zip(eps).map(|(&z, &e)| signal * z + noise * e).collect())
}

/// Single-step forward kernel
/// `z_t = sqrt(1 - beta_t) z_{t-1} + sqrt(beta_t) eps`.
///
/// Chaining this from `z0` with independent draws reproduces the
/// [`q_sample`] marginal.
pub fn step_sample(
    z_prev: &[f64],
    t: usize,
    eps: &[f64],
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    schedule.check_t(t)?;
    check_shapes(z_prev, eps, "step_sample")?;
    let (signal, noise) = (schedule.alpha(t).sqrt(), schedule.beta(t).sqrt());
    Ok(z_prev.iter().zip(eps).map(|(&z, &e)| signal * z + noise * e).collect())
}

/// One reverse update from `z_t` to `z_{t-1}`.
///
/// `noise` is the stochastic term's standard-normal draw; pass `None`
/// for the deterministic trajectory. At `t = 1` the noise term is forced
/// to zero regardless.
pub fn reverse_step(
    z_t: &[f64],
    t: usize,
    denoiser: &dyn Denoiser,
    condition: &[f64],
    schedule: &DiffusionSchedule,
    noise: Option<&[f64]>,
) -> Result<Vec<f64>> {
    schedule.check_t(t)?;
    let eps_hat = denoiser.predict_noise(z_t, t, condition);
    check_shapes(z_t, &eps_hat, "reverse_step denoiser output")?;
    let inv_sqrt_alpha = 1.0 / schedule.alpha(t).sqrt();
    let eps_coef = schedule.beta(t) / (1.0 - schedule.alpha_bar(t)).sqrt();
    let mut z_prev: Vec<f64> = z_t
        .iter()
        .zip(&eps_hat)
        .map(|(&z, &e)| inv_sqrt_alpha * (z - eps_coef * e))
        .collect();
    if t > 1 {
        if let Some(z) = noise {
            check_shapes(z_t, z, "reverse_step noise")?;
            let sigma = schedule.sigma(t);
            for (v, &n) in z_prev.iter_mut().zip(z) {
                *v += sigma * n;
            }
        }
    }
    Ok(z_prev)
}

/// Whether [`generate`] injects the `sigma_t z` term during the reverse
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// No stochastic term: the trajectory is a deterministic function of
    /// `z_T`.
    Deterministic,
    /// Fresh standard-normal noise at every step `t > 1`.
    Stochastic,
}

/// Runs the full reverse trajectory from seeded Gaussian noise.
///
/// Draws `z_T` (of `len` elements) from a ChaCha stream seeded by
/// `seed`, applies [`reverse_step`] for `t = T..=1`, and returns the
/// final latent. Bit-deterministic for a fixed seed, schedule, mode and
/// denoiser.
pub fn generate(
    denoiser: &dyn Denoiser,
    condition: &[f64],
    len: usize,
    schedule: &DiffusionSchedule,
    seed: u64,
    mode: SamplingMode,
) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::Usage("latent length must be nonzero".into()));
    }
    let mut stream = NoiseStream::new(seed);
    let mut z = stream.draw(len);
    for t in (1..=schedule.len()).rev() {
        let noise = match mode {
            SamplingMode::Stochastic if t > 1 => Some(stream.draw(len)),
            _ => None,
        };
        z = reverse_step(&z, t, denoiser, condition, schedule, noise.as_deref())?;
    }
    Ok(z)
}

/// Mean-squared-error diffusion loss between predicted and true noise.
pub fn ddpm_loss(eps_hat: &[f64], eps_true: &[f64]) -> Result<f64> {
    check_shapes(eps_hat, eps_true, "ddpm_loss")?;
    if eps_hat.is_empty() {
        return Err(Error::Usage("ddpm_loss on empty tensors".into()));
    }
    let sum: f64 = eps_hat.iter().zip(eps_true).map(|(&a, &b)| (a - b).powi(2)).sum();
    Ok(sum / eps_hat.len() as f64)
}

/// The test oracle: a denoiser that knows the true `z0` and inverts
/// [`q_sample`] exactly, `eps = (z_t - sqrt(alpha_bar_t) z0) /
/// sqrt(1 - alpha_bar_t)`.
pub struct OracleDenoiser {
    pub z0: Vec<f64>,
    pub schedule: DiffusionSchedule,
}

impl Denoiser for OracleDenoiser {
    fn predict_noise(&self, z_t: &[f64], t: usize, _condition: &[f64]) -> Vec<f64> {
        let ab = self.schedule.alpha_bar(t);
        let (signal, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
        z_t.iter().zip(&self.z0).map(|(&z, &z0)| (z - signal * z0) / noise).collect()
    }
}
