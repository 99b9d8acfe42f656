//! Flat key = value pipeline configuration.
//!
//! Every key has a documented default; unknown keys are rejected so a
//! typo cannot silently fall back to a default. The full key set:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `layout_id` | `0` | DoFP sensor layout tag (see mosaic docs) |
//! | `n1` | `1.0` | refractive index of the incident medium |
//! | `n2` | `1.5` | refractive index of the glass |
//! | `theta_deg` | `45.0` | incidence angle in degrees |
//! | `phi_perp_deg` | `0.0` | reflection polarization orientation |
//! | `dolp_t_extra` | `0.0` | extra transmission polarization |
//! | `fresnel_transmission_dolp` | `true` | transmitted light picks up refraction polarization |
//! | `p_r` | `auto` | reflection DOLP for Brewster separation (`auto` derives it from n1/n2/theta) |
//! | `alpha_min` | `0.0` | edge-search grid start |
//! | `alpha_max` | `1.0` | edge-search grid end |
//! | `alpha_step` | `0.01` | edge-search grid step |
//! | `alpha_refine_tol` | `0.0001` | golden-section bracket tolerance |
//! | `negative_penalty_weight` | `10.0` | negative-residual penalty weight |
//! | `t_steps` | `1000` | diffusion timesteps |
//! | `beta_start` | `0.0001` | first beta of the linear schedule |
//! | `beta_end` | `0.02` | last beta of the linear schedule |
//! | `sigma_mode` | `beta_sqrt` | `beta_sqrt` or `posterior` |
//! | `latent_len` | `64` | latent size for the diffuse demo |
//! | `gamma1..gamma6` | `1, 0, 0.1, 0.1, 1, 1` | loss weights |
//! | `seed` | `0` | RNG seed |
//! | `out_dir` | `out` | output directory |
//! | `mixed_raw` | (unset) | pipeline: mixed PRAW path |
//! | `transmission_raw` | (unset) | pipeline: transmission PRAW path |
//! | `correspondences` | `auto` | pipeline: `auto` (phase correlation) or a correspondence file |

use std::path::{Path, PathBuf};

use polarkit::diffusion::VarianceKind;
use polarkit::error::{Error, Result};
use polarkit::kv::KeyValues;
use polarkit::metrics::LossWeights;
use polarkit::optics::SceneParams;
use polarkit::separate::EdgeSearchOptions;

/// Where the pipeline gets its alignment from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorrespondenceSource {
    /// Per-channel phase correlation.
    Auto,
    /// Plain-text correspondence file in mosaic coordinates.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub layout_id: u8,
    pub scene: SceneParams,
    /// Reflection DOLP for Brewster separation; `None` means derive it
    /// from the configured interface.
    pub p_r: Option<f64>,
    pub edge_search: EdgeSearchOptions,
    pub t_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub sigma_mode: VarianceKind,
    pub latent_len: usize,
    pub weights: LossWeights,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub mixed_raw: Option<PathBuf>,
    pub transmission_raw: Option<PathBuf>,
    pub correspondences: CorrespondenceSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            layout_id: 0,
            scene: SceneParams::default(),
            p_r: None,
            edge_search: EdgeSearchOptions::default(),
            t_steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            sigma_mode: VarianceKind::BetaSqrt,
            latent_len: 64,
            weights: LossWeights::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            mixed_raw: None,
            transmission_raw: None,
            correspondences: CorrespondenceSource::Auto,
        }
    }
}

const KNOWN_KEYS: [&str; 28] = [
    "layout_id",
    "n1",
    "n2",
    "theta_deg",
    "phi_perp_deg",
    "dolp_t_extra",
    "fresnel_transmission_dolp",
    "p_r",
    "alpha_min",
    "alpha_max",
    "alpha_step",
    "alpha_refine_tol",
    "negative_penalty_weight",
    "t_steps",
    "beta_start",
    "beta_end",
    "sigma_mode",
    "latent_len",
    "gamma1",
    "gamma2",
    "gamma3",
    "gamma4",
    "gamma5",
    "gamma6",
    "seed",
    "out_dir",
    "mixed_raw",
    "transmission_raw",
];

impl PipelineConfig {
    /// Loads a config file, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::from_key_values(&KeyValues::from_file(p)?),
        }
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut known: Vec<&str> = KNOWN_KEYS.to_vec();
        known.push("correspondences");
        kv.require_known_keys(&known)?;
        let d = Self::default();

        let p_r = match kv.get("p_r") {
            None => None,
            Some("auto") => None,
            Some(v) => {
                let value: f64 = v
                    .parse()
                    .map_err(|_| Error::Usage(format!("key p_r: {v:?} is not a number or 'auto'")))?;
                Some(value)
            }
        };

        let sigma_mode = match kv.get("sigma_mode") {
            None | Some("beta_sqrt") => VarianceKind::BetaSqrt,
            Some("posterior") => VarianceKind::Posterior,
            Some(v) => {
                return Err(Error::Usage(format!(
                    "key sigma_mode: {v:?} is not beta_sqrt or posterior"
                )))
            }
        };

        let correspondences = match kv.get("correspondences") {
            None | Some("auto") => CorrespondenceSource::Auto,
            Some(p) => CorrespondenceSource::File(PathBuf::from(p)),
        };

        let path_or_none = |key: &str| kv.get(key).filter(|v| !v.is_empty()).map(PathBuf::from);

        Ok(Self {
            layout_id: kv.get_u8("layout_id", d.layout_id)?,
            scene: SceneParams {
                n1: kv.get_f64("n1", d.scene.n1)?,
                n2: kv.get_f64("n2", d.scene.n2)?,
                theta_deg: kv.get_f64("theta_deg", d.scene.theta_deg)?,
                phi_perp_deg: kv.get_f64("phi_perp_deg", d.scene.phi_perp_deg)?,
                dolp_t_extra: kv.get_f64("dolp_t_extra", d.scene.dolp_t_extra)?,
                fresnel_transmission_dolp: kv
                    .get_bool("fresnel_transmission_dolp", d.scene.fresnel_transmission_dolp)?,
            },
            p_r,
            edge_search: EdgeSearchOptions {
                alpha_min: kv.get_f64("alpha_min", d.edge_search.alpha_min)?,
                alpha_max: kv.get_f64("alpha_max", d.edge_search.alpha_max)?,
                grid_step: kv.get_f64("alpha_step", d.edge_search.grid_step)?,
                refine_tol: kv.get_f64("alpha_refine_tol", d.edge_search.refine_tol)?,
                negative_penalty_weight: kv
                    .get_f64("negative_penalty_weight", d.edge_search.negative_penalty_weight)?,
            },
            t_steps: kv.get_usize("t_steps", d.t_steps)?,
            beta_start: kv.get_f64("beta_start", d.beta_start)?,
            beta_end: kv.get_f64("beta_end", d.beta_end)?,
            sigma_mode,
            latent_len: kv.get_usize("latent_len", d.latent_len)?,
            weights: LossWeights {
                gamma1: kv.get_f64("gamma1", d.weights.gamma1)?,
                gamma2: kv.get_f64("gamma2", d.weights.gamma2)?,
                gamma3: kv.get_f64("gamma3", d.weights.gamma3)?,
                gamma4: kv.get_f64("gamma4", d.weights.gamma4)?,
                gamma5: kv.get_f64("gamma5", d.weights.gamma5)?,
                gamma6: kv.get_f64("gamma6", d.weights.gamma6)?,
            },
            seed: kv.get_u64("seed", d.seed)?,
            out_dir: PathBuf::from(kv.get("out_dir").unwrap_or("out")),
            mixed_raw: path_or_none("mixed_raw"),
            transmission_raw: path_or_none("transmission_raw"),
            correspondences,
        })
    }

    /// Reflection DOLP for Brewster separation: configured or derived
    /// from the interface parameters.
    pub fn brewster_p_r(&self) -> Result<f64> {
        match self.p_r {
            Some(v) => Ok(v),
            None => {
                let fc = polarkit::optics::fresnel(&self.scene.interface()?);
                Ok(fc.reflection_dolp())
            }
        }
    }
}
