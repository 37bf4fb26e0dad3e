//! MVDR beamforming against clutter built from true or estimated CCIRs.
//!
//! Received samples of one pulse: `y = X̃ h_c + X̃_p h_t + n`, where `X̃_p` uses the
//! Doppler-modulated pulses `x_n ⊙ p` with `p_l = exp(j 2π f_d l T)`. The clutter
//! covariance of a CCIR matrix `H` is the sample covariance of its returns over
//! the pulses, `X̃ (H Hᴴ / K) X̃ᴴ + σ² I`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use cofbl::baselines::nmse;
use cofbl::linalg::{hermitian_solve, LinearOperator};
use cofbl::scene::{simulate, CcirMatrix};
use cofbl::signal::{build_dictionary, gen_lfm, ConvolutionDictionary, RadarConfig};

use crate::algorithms::{estimate, Problem};
use crate::config::{ExperimentSpec, MvdrSpec};
use crate::error::{BenchError, Result};
use crate::results::{ResultRow, ScnrRow};
use crate::scenes::{squared_error, support_scene, TrialSeeds};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Two-way Doppler shift `2 v / λ` in Hz.
pub fn doppler_hz(velocity_kmh: f64, carrier_hz: f64) -> f64 {
    2.0 * (velocity_kmh / 3.6) * carrier_hz / SPEED_OF_LIGHT
}

/// `p_l = exp(j 2π f_d l T)` for `l = 0..len`.
pub fn doppler_vector(len: usize, doppler: f64, pri: f64) -> Vec<Complex64> {
    (0..len)
        .map(|l| Complex64::from_polar(1.0, 2.0 * PI * doppler * l as f64 * pri))
        .collect()
}

/// Stacked response of a unit point target in `bin` on every antenna pair.
pub fn target_signature(radar: &RadarConfig, bin: usize, doppler: &[Complex64]) -> Result<DVector<Complex64>> {
    if bin >= radar.n_range_bins {
        return Err(BenchError::Config(format!(
            "target bin {bin} outside {} range bins",
            radar.n_range_bins
        )));
    }
    let taps = (0..radar.n_tx)
        .map(|n| gen_lfm(radar, n).map(|w| w.samples.iter().zip(doppler).map(|(x, p)| x * p).collect()))
        .collect::<cofbl::Result<Vec<Vec<Complex64>>>>()?;
    let dict = ConvolutionDictionary::from_taps(radar.n_rx, radar.n_range_bins, taps)?;
    let layout = dict.layout();
    let mut h = vec![Complex64::new(0.0, 0.0); layout.nmr()];
    for m in 0..layout.n_rx {
        for n in 0..layout.n_tx {
            h[layout.row_index(m, n, bin)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(DVector::from_vec(dict.apply(&h)))
}

/// `X̃ (H Hᴴ / K) X̃ᴴ + σ² I`.
pub fn clutter_covariance<D: LinearOperator + ?Sized>(
    dict: &D,
    h: &DMatrix<Complex64>,
    noise_var: f64,
) -> DMatrix<Complex64> {
    let returns = dict.apply_matrix(h);
    let k = h.ncols().max(1) as f64;
    let mut r = &returns * returns.adjoint() / Complex64::new(k, 0.0);
    for i in 0..r.nrows() {
        r[(i, i)] += noise_var;
    }
    r
}

/// MVDR weights `R⁻¹s / (sᴴR⁻¹s)`. If `R` is numerically singular, `loading`
/// times its mean diagonal is added first; the flag reports that.
pub fn mvdr_weights(
    r: &DMatrix<Complex64>,
    s: &DVector<Complex64>,
    loading: f64,
) -> Result<(DVector<Complex64>, bool)> {
    let col = DMatrix::from_column_slice(s.len(), 1, s.as_slice());
    let (ris, loaded) = match hermitian_solve(r, &col) {
        Some(x) => (x, false),
        None => {
            let mean_diag = r.diagonal().iter().map(|z| z.re).sum::<f64>() / r.nrows() as f64;
            let mut rl = r.clone();
            for i in 0..rl.nrows() {
                rl[(i, i)] += loading * mean_diag.abs().max(f64::MIN_POSITIVE);
            }
            let x = hermitian_solve(&rl, &col)
                .ok_or_else(|| BenchError::Runtime("covariance not positive definite after loading".into()))?;
            (x, true)
        }
    };
    let ris = ris.column(0).into_owned();
    let gain = s.dotc(&ris);
    if gain.norm() == 0.0 {
        return Err(BenchError::Runtime("target signature is zero".into()));
    }
    Ok((ris / gain, loaded))
}

/// Output SCNR `σ_t² |wᴴs|² / (wᴴ R w)` against the true covariance.
pub fn output_scnr(
    w: &DVector<Complex64>,
    s: &DVector<Complex64>,
    r_true: &DMatrix<Complex64>,
    target_power: f64,
) -> f64 {
    let gain = w.dotc(s).norm_sqr();
    let interference = w.dotc(&(r_true * w)).re;
    target_power * gain / interference
}

/// SCNR of the beamformer designed on `r_design`, evaluated on `r_true`, for a
/// target whose matched-filter SNR against white noise of `noise_var` is `snr_db`.
pub fn mvdr_scnr(
    r_design: &DMatrix<Complex64>,
    r_true: &DMatrix<Complex64>,
    s: &DVector<Complex64>,
    noise_var: f64,
    snr_db: f64,
    loading: f64,
) -> Result<(f64, bool)> {
    let target_power = 10f64.powf(snr_db / 10.0) * noise_var / s.norm_squared();
    let (w, loaded) = mvdr_weights(r_design, s, loading)?;
    Ok((output_scnr(&w, s, r_true, target_power), loaded))
}

pub(crate) struct MvdrOutcome {
    pub rows: Vec<ResultRow>,
    pub scnr: Vec<ScnrRow>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

fn scenario_name(f: f64) -> String {
    format!("mismatch={f}")
}

/// Scenario labels in reporting order.
pub fn scenario_labels(m: &MvdrSpec) -> Vec<String> {
    let mut v = vec!["clairvoyant".to_string(), "estimated".to_string()];
    v.extend(m.mismatch_fractions.iter().map(|&f| scenario_name(f)));
    v
}

struct Environment {
    truth: CcirMatrix,
    estimate: Option<DMatrix<Complex64>>,
    noise_var: f64,
}

fn run_trial(spec: &ExperimentSpec, m: &MvdrSpec, point: usize, value: f64, trial: usize) -> Result<MvdrOutcome> {
    let alg = spec.parsed_algorithms()?[0];
    let setup = spec.point(None, Some(value))?;
    let dict = build_dictionary(&setup.radar)?;
    let seeds = TrialSeeds::new(spec.master_seed, point, trial);
    let bin = m.target_bin.unwrap_or(setup.radar.n_range_bins / 2);
    let p = doppler_vector(
        setup.radar.waveform_len,
        doppler_hz(m.velocity_kmh, m.carrier_hz),
        setup.radar.pri,
    );
    let s = target_signature(&setup.radar, bin, &p)?;

    let mut out = MvdrOutcome {
        rows: Vec::new(),
        scnr: Vec::new(),
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    let fractions: Vec<f64> = std::iter::once(0.0)
        .chain(m.mismatch_fractions.iter().copied())
        .collect();
    let mut envs = Vec::new();
    for (i, &f) in fractions.iter().enumerate() {
        let truth = support_scene(&setup, &seeds, f)?;
        let meas = simulate(&dict, &truth, value, seeds.noise)?;
        let problem = Problem {
            dict: &dict,
            layout: setup.radar.layout(),
            y: &meas.y,
            noise_var: meas.noise_variance,
            support_size: truth.support.len(),
            seed: seeds.estimator,
            group_len: setup.estimator_group_len,
        };
        let label = if i == 0 {
            alg.name().to_string()
        } else {
            format!("{}@mismatch={f}", alg.name())
        };
        let mut row = ResultRow {
            sweep_name: "snr".into(),
            sweep_value: value,
            algorithm: label.clone(),
            trial,
            nmse: None,
            wall_ms: None,
            bcrb: None,
            sq_error: None,
            bcrb_total: None,
        };
        let start = std::time::Instant::now();
        let est = match estimate(alg, &problem, &spec.sbl, &spec.mfocuss) {
            Ok(h) => {
                row.wall_ms = spec.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3);
                row.nmse = Some(nmse(&truth.values, &h)?);
                row.sq_error = Some(squared_error(&truth.values, &h));
                Some(h)
            }
            Err(e) => {
                out.failures.push(format!("snr={value} {label} trial {trial}: {e}"));
                None
            }
        };
        out.rows.push(row);
        envs.push(Environment {
            truth,
            estimate: est,
            noise_var: meas.noise_variance,
        });
    }

    let mut push =
        |scenario: String, design: &DMatrix<Complex64>, env: &Environment, r_true: &DMatrix<Complex64>| -> Result<()> {
            let (scnr, loaded) = mvdr_scnr(design, r_true, &s, env.noise_var, value, m.loading)?;
            if loaded {
                out.warnings.push(format!(
                    "snr={value} {scenario} trial {trial}: diagonal loading {} applied",
                    m.loading
                ));
            }
            out.scnr.push(ScnrRow {
                sweep_value: value,
                scenario,
                trial,
                scnr_db: 10.0 * scnr.log10(),
            });
            Ok(())
        };
    for (i, env) in envs.iter().enumerate() {
        let r_true = clutter_covariance(&dict, &env.truth.values, env.noise_var);
        if i == 0 {
            push("clairvoyant".into(), &r_true, env, &r_true)?;
        }
        if let Some(h) = &env.estimate {
            let r_est = clutter_covariance(&dict, h, env.noise_var);
            let name = if i == 0 {
                "estimated".to_string()
            } else {
                scenario_name(fractions[i])
            };
            push(name, &r_est, env, &r_true)?;
        }
    }
    Ok(out)
}

pub(crate) fn run(spec: &ExperimentSpec) -> Result<MvdrOutcome> {
    let m = spec
        .mvdr
        .as_ref()
        .ok_or_else(|| BenchError::Config("missing [mvdr] section".into()))?;
    let jobs: Vec<(usize, f64, usize)> = spec
        .sweep
        .values
        .iter()
        .enumerate()
        .flat_map(|(p, &v)| (0..spec.trials).map(move |t| (p, v, t)))
        .collect();
    let parts: Vec<(f64, usize, Result<MvdrOutcome>)> = jobs
        .par_iter()
        .map(|&(p, v, t)| (v, t, run_trial(spec, m, p, v, t)))
        .collect();
    let mut out = MvdrOutcome {
        rows: Vec::new(),
        scnr: Vec::new(),
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    for (v, t, part) in parts {
        match part {
            Ok(p) => {
                out.rows.extend(p.rows);
                out.scnr.extend(p.scnr);
                out.failures.extend(p.failures);
                out.warnings.extend(p.warnings);
            }
            Err(e) => out.failures.push(format!("snr={v} trial {t}: {e}")),
        }
    }
    let order = scenario_labels(m);
    let rank = |s: &str| order.iter().position(|x| x == s).unwrap_or(usize::MAX);
    out.scnr.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(rank(&a.scenario).cmp(&rank(&b.scenario)))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(out)
}

/// Whether mean SCNR is non-increasing along the scenario order at `value`.
pub fn ordering_holds(means: &[(f64, String, f64)], value: f64, order: &[String]) -> bool {
    let vals: Vec<f64> = order
        .iter()
        .filter_map(|l| means.iter().find(|(v, s, _)| *v == value && s == l).map(|m| m.2))
        .collect();
    vals.len() == order.len() && vals.windows(2).all(|w| w[0] >= w[1])
}
