//! Per-trial scene generation.

use nalgebra::DMatrix;

use cofbl::baselines::bcrb;
use cofbl::linalg::LinearOperator;
use cofbl::rng::{complex_normal, derive_seed, rng_from_seed};
use cofbl::scene::{
    perturb_support, simulate, simulate_with_noise_variance, synth_ccir, CcirMatrix, MeasurementSet, SparsityModel,
};
use cofbl::signal::ConvolutionDictionary;

use crate::config::{PointSetup, Prior, SceneSpec};
use crate::error::Result;

/// Seed streams of one trial. Scenes depend only on the trial index, so every
/// sweep point and series value sees the same underlying support draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub scene: u64,
    pub mismatch: u64,
    pub noise: u64,
    pub estimator: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, point: usize, trial: usize) -> Self {
        let (p, t) = (point as u64, trial as u64);
        Self {
            scene: derive_seed(master, &[1, t]),
            mismatch: derive_seed(master, &[2, t]),
            noise: derive_seed(master, &[3, p, t]),
            estimator: derive_seed(master, &[4, p, t]),
        }
    }
}

pub struct TrialScene {
    pub truth: CcirMatrix,
    pub meas: MeasurementSet,
    /// Prior row variances (Bayesian scenes only).
    pub prior: Option<Vec<f64>>,
    /// Rows of the structured support (mismatch rows included). SOMP's oracle
    /// sparsity; smaller than the nonzero row count of Bayesian scenes.
    pub support_size: usize,
}

impl TrialScene {
    /// Bayesian CRB of the trial, if the scene follows a Gaussian prior.
    pub fn bcrb(&self, dict: &ConvolutionDictionary) -> Result<Option<f64>> {
        match &self.prior {
            Some(psi) => Ok(Some(
                bcrb(dict, self.meas.noise_variance, psi, self.truth.n_pulses())?.total,
            )),
            None => Ok(None),
        }
    }

    /// Expected `||H||_F²` under the prior, which normalizes the bound.
    pub fn prior_energy(&self) -> Option<f64> {
        self.prior
            .as_ref()
            .map(|p| p.iter().sum::<f64>() * self.truth.n_pulses() as f64)
    }
}

/// Draws the support scene of a point, applying its mismatch fraction.
pub fn support_scene(setup: &PointSetup, seeds: &TrialSeeds, mismatch: f64) -> Result<CcirMatrix> {
    let layout = setup.radar.layout();
    let h = synth_ccir(
        layout,
        setup.radar.n_pulses,
        SparsityModel::new(setup.scene_kind, setup.level),
        seeds.scene,
    )?;
    if mismatch > 0.0 {
        Ok(perturb_support(&h, mismatch, seeds.mismatch)?)
    } else {
        Ok(h)
    }
}

pub fn make_scene(
    dict: &ConvolutionDictionary,
    setup: &PointSetup,
    scene: &SceneSpec,
    seeds: &TrialSeeds,
) -> Result<TrialScene> {
    let h = support_scene(setup, seeds, setup.mismatch)?;
    match scene.prior {
        Prior::Support => {
            let meas = simulate(dict, &h, setup.snr_db, seeds.noise)?;
            let support_size = h.support.len();
            Ok(TrialScene {
                truth: h,
                meas,
                prior: None,
                support_size,
            })
        }
        Prior::Bayesian => {
            let nmr = h.values.nrows();
            let mut psi = vec![scene.off_support_variance; nmr];
            h.support.iter().for_each(|&i| psi[i] = 1.0);
            let mut values = h.values.clone();
            let mut rng = rng_from_seed(derive_seed(seeds.scene, &[2]));
            for i in 0..nmr {
                if h.support.binary_search(&i).is_err() {
                    for k in 0..values.ncols() {
                        values[(i, k)] = complex_normal(&mut rng, psi[i]);
                    }
                }
            }
            let truth = CcirMatrix::from_values(values, h.layout, h.model);
            // Noise from the expected signal power, so it does not depend on the draw.
            let norms = dict.column_norms_sq();
            let power: f64 = psi.iter().zip(&norms).map(|(p, n)| p * n).sum();
            let noise_var = power / (dict.nrows() as f64 * 10f64.powf(setup.snr_db / 10.0));
            let meas = simulate_with_noise_variance(dict, &truth, noise_var, seeds.noise)?;
            Ok(TrialScene {
                truth,
                meas,
                prior: Some(psi),
                support_size: h.support.len(),
            })
        }
    }
}

/// `||Ĥ - H||_F²`.
pub fn squared_error(truth: &DMatrix<num_complex::Complex64>, est: &DMatrix<num_complex::Complex64>) -> f64 {
    (est - truth).norm_squared()
}
