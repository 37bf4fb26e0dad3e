//! Transmit waveforms and the stacked convolution dictionary.
//!
//! A CCIR column `h_k` is stacked receive-major, then transmit, then range bin:
//! row `m*N*R + n*R + r` holds the tap of range bin `r` between transmitter `n`
//! and receiver `m`. The dictionary maps it to `M` stacked received blocks of
//! `L + R - 1` samples each, `y_m = sum_n x_n * h_{m,n}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;

/// Largest column count for which dense materialization is allowed.
pub const DENSE_CAP: usize = 4096;

/// Antenna and range-bin dimensions of a CCIR matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_range: usize,
}

impl Layout {
    pub fn new(n_tx: usize, n_rx: usize, n_range: usize) -> Self {
        Self { n_tx, n_rx, n_range }
    }

    /// A single antenna pair with `n` range bins.
    pub fn flat(n: usize) -> Self {
        Self::new(1, 1, n)
    }

    /// Number of CCIR rows, `N * M * R`.
    pub fn nmr(&self) -> usize {
        self.n_tx * self.n_rx * self.n_range
    }

    pub fn n_pairs(&self) -> usize {
        self.n_tx * self.n_rx
    }

    /// Row offset of the `(rx, tx)` antenna pair.
    pub fn pair_offset(&self, rx: usize, tx: usize) -> usize {
        rx * self.n_tx * self.n_range + tx * self.n_range
    }

    pub fn row_index(&self, rx: usize, tx: usize, bin: usize) -> usize {
        self.pair_offset(rx, tx) + bin
    }

    /// Range bin of a CCIR row.
    pub fn bin_of(&self, row: usize) -> usize {
        row % self.n_range
    }
}

/// Scenario dimensions and physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_range_bins: usize,
    pub n_pulses: usize,
    pub waveform_len: usize,
    /// Sweep bandwidth per transmitter, Hz.
    pub bandwidths: Vec<f64>,
    /// Pulse repetition interval, s. Also the pulse duration of the LFM.
    pub pri: f64,
    pub amplitudes: Vec<f64>,
    pub noise_variance: f64,
    /// Cluster length for grouped sparsity models.
    pub group_len: usize,
}

impl RadarConfig {
    /// The desk-scale scenario: 2 Tx, 2 Rx, 64 range bins, 16 pulses, 32 samples.
    pub fn desk() -> Self {
        Self::with_dims(2, 2, 64, 16, 32)
    }

    /// A config with default waveform parameters for the given dimensions.
    ///
    /// Transmitter `n` (1-based) sweeps `n * L / (N * T)` Hz so the widest chirp
    /// uses the full Nyquist band of the common `L`-point grid.
    pub fn with_dims(n_tx: usize, n_rx: usize, n_range_bins: usize, n_pulses: usize, waveform_len: usize) -> Self {
        let pri = 1e-3;
        let bandwidths = (1..=n_tx)
            .map(|n| n as f64 * waveform_len as f64 / (n_tx as f64 * pri))
            .collect();
        Self {
            n_tx,
            n_rx,
            n_range_bins,
            n_pulses,
            waveform_len,
            bandwidths,
            pri,
            amplitudes: vec![1.0; n_tx],
            noise_variance: 1.0,
            group_len: 1,
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.n_tx, self.n_rx, self.n_range_bins)
    }

    pub fn nmr(&self) -> usize {
        self.layout().nmr()
    }

    /// Rows of the stacked measurement matrix, `M * (L + R - 1)`.
    pub fn n_measurements(&self) -> usize {
        self.n_rx * (self.waveform_len + self.n_range_bins - 1)
    }

    /// True when every transmitter has a distinct sweep bandwidth.
    pub fn bandwidths_distinct(&self) -> bool {
        let mut b = self.bandwidths.clone();
        b.sort_by(f64::total_cmp);
        b.windows(2).all(|w| w[0] != w[1])
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_range_bins", self.n_range_bins),
            ("n_pulses", self.n_pulses),
            ("waveform_len", self.waveform_len),
            ("group_len", self.group_len),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.bandwidths.len() != self.n_tx || self.amplitudes.len() != self.n_tx {
            return Err(Error::Config(
                "bandwidths and amplitudes need one entry per transmitter".into(),
            ));
        }
        if self.bandwidths.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::Config("bandwidths must be positive".into()));
        }
        if !(self.pri > 0.0) {
            return Err(Error::Config("pri must be positive".into()));
        }
        if !(self.noise_variance > 0.0) {
            return Err(Error::Config("noise_variance must be positive".into()));
        }
        Ok(())
    }

    /// Fails unless `group_len` divides the number of range bins.
    pub fn validate_grouped(&self) -> Result<()> {
        self.validate()?;
        if !self.n_range_bins.is_multiple_of(self.group_len) {
            return Err(Error::Config(format!(
                "group_len {} does not divide n_range_bins {}",
                self.group_len, self.n_range_bins
            )));
        }
        Ok(())
    }
}

/// Sampled baseband pulse of one transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub tx_index: usize,
}

/// LFM pulse `A_n exp(j 2π β_n (tΔ)^2)`, `β_n = B_n / (2T)`, `Δ = T / L`.
pub fn gen_lfm(config: &RadarConfig, tx_index: usize) -> Result<Waveform> {
    if tx_index >= config.n_tx {
        return Err(Error::InvalidArgument(format!(
            "tx_index {tx_index} >= n_tx {}",
            config.n_tx
        )));
    }
    let amp = config.amplitudes[tx_index];
    let beta = config.bandwidths[tx_index] / (2.0 * config.pri);
    let dt = config.pri / config.waveform_len as f64;
    let samples = (0..config.waveform_len)
        .map(|t| {
            let tau = t as f64 * dt;
            Complex64::from_polar(amp, 2.0 * PI * beta * tau * tau)
        })
        .collect();
    Ok(Waveform { samples, tx_index })
}

/// Banded Toeplitz matrix of a waveform: `X[i, j] = x[i - j]` for `0 <= i - j < L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzBlock {
    pub taps: Vec<Complex64>,
    pub n_cols: usize,
}

impl ToeplitzBlock {
    pub fn n_rows(&self) -> usize {
        self.taps.len() + self.n_cols - 1
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i >= j && i - j < self.taps.len() {
            self.taps[i - j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n_rows(), self.n_cols, |i, j| self.get(i, j))
    }

    /// Full linear convolution of the taps with `h`.
    pub fn apply(&self, h: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_rows()];
        for (r, &hr) in h.iter().enumerate() {
            for (l, &x) in self.taps.iter().enumerate() {
                out[r + l] += x * hr;
            }
        }
        out
    }
}

pub fn build_block(waveform: &Waveform, n_range: usize) -> Result<ToeplitzBlock> {
    if waveform.samples.is_empty() || n_range == 0 {
        return Err(Error::InvalidArgument(
            "waveform and range dimension must be non-empty".into(),
        ));
    }
    Ok(ToeplitzBlock {
        taps: waveform.samples.clone(),
        n_cols: n_range,
    })
}

/// `I_M ⊗ [X_1 … X_N]`, applied by direct convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionDictionary {
    layout: Layout,
    taps: Vec<Vec<Complex64>>,
    /// Real and imaginary parts of the taps and of their conjugates, for the
    /// split-complex kernels.
    taps_split: Vec<[Vec<f64>; 2]>,
    conj_split: Vec<[Vec<f64>; 2]>,
    waveform_len: usize,
}

fn split(v: &[Complex64]) -> [Vec<f64>; 2] {
    [v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect()]
}

impl ConvolutionDictionary {
    /// Builds the dictionary from per-transmitter tap vectors of equal length.
    pub fn from_taps(n_rx: usize, n_range: usize, taps: Vec<Vec<Complex64>>) -> Result<Self> {
        let waveform_len = taps.first().map_or(0, Vec::len);
        if taps.is_empty() || waveform_len == 0 || n_rx == 0 || n_range == 0 {
            return Err(Error::InvalidArgument("dictionary dimensions must be non-zero".into()));
        }
        if taps.iter().any(|t| t.len() != waveform_len) {
            return Err(Error::Dimension("all waveforms must share one sampling grid".into()));
        }
        let taps_split = taps.iter().map(|t| split(t)).collect();
        let conj_split = taps
            .iter()
            .map(|t| split(&t.iter().map(Complex64::conj).collect::<Vec<_>>()))
            .collect();
        Ok(Self {
            layout: Layout::new(taps.len(), n_rx, n_range),
            taps,
            taps_split,
            conj_split,
            waveform_len,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn waveform_len(&self) -> usize {
        self.waveform_len
    }

    /// Samples per receive block, `L + R - 1`.
    pub fn block_rows(&self) -> usize {
        self.waveform_len + self.layout.n_range - 1
    }

    pub fn taps(&self, tx: usize) -> &[Complex64] {
        &self.taps[tx]
    }

    pub fn blocks(&self) -> Vec<ToeplitzBlock> {
        self.taps
            .iter()
            .map(|t| ToeplitzBlock {
                taps: t.clone(),
                n_cols: self.layout.n_range,
            })
            .collect()
    }

    /// Dense matrix; refused above [`DENSE_CAP`] columns.
    pub fn materialize(&self) -> Result<DMatrix<Complex64>> {
        let cols = self.layout.nmr();
        if cols > DENSE_CAP {
            return Err(Error::DenseCap {
                size: cols,
                cap: DENSE_CAP,
            });
        }
        Ok(self.dense_unchecked())
    }

    fn dense_unchecked(&self) -> DMatrix<Complex64> {
        let Layout { n_tx, n_rx, n_range } = self.layout;
        let rows = self.block_rows();
        let mut d = DMatrix::zeros(n_rx * rows, self.layout.nmr());
        for m in 0..n_rx {
            for n in 0..n_tx {
                let col0 = self.layout.pair_offset(m, n);
                for r in 0..n_range {
                    for (l, &x) in self.taps[n].iter().enumerate() {
                        d[(m * rows + r + l, col0 + r)] = x;
                    }
                }
            }
        }
        d
    }

    /// Recovers a dictionary from its dense form, checking the block structure.
    pub fn from_dense(dense: &DMatrix<Complex64>, layout: Layout, waveform_len: usize) -> Result<Self> {
        let taps: Vec<Vec<Complex64>> = (0..layout.n_tx)
            .map(|n| {
                let col = layout.pair_offset(0, n);
                (0..waveform_len).map(|l| dense[(l, col)]).collect()
            })
            .collect();
        let dict = Self::from_taps(layout.n_rx, layout.n_range, taps)?;
        if dict.dense_unchecked() != *dense {
            return Err(Error::InvalidArgument(
                "matrix is not a stacked block-Toeplitz dictionary".into(),
            ));
        }
        Ok(dict)
    }
}

impl ConvolutionDictionary {
    // Both kernels work on split real/imaginary buffers so the inner loops
    // vectorize; each element sees the same operations, in the same order, as
    // the complex `acc += a * b` it replaces.
    #[inline(always)]
    fn convolve(&self, h: &[Complex64], out: &mut [Complex64]) {
        let Layout { n_tx, n_rx, n_range } = self.layout;
        let rows = self.block_rows();
        let len = self.waveform_len;
        let (mut yr, mut yi) = (vec![0.0; rows], vec![0.0; rows]);
        for m in 0..n_rx {
            yr.iter_mut().chain(yi.iter_mut()).for_each(|v| *v = 0.0);
            for n in 0..n_tx {
                let hcol = &h[self.layout.pair_offset(m, n)..][..n_range];
                let [xr, xi] = &self.taps_split[n];
                for (r, &hr) in hcol.iter().enumerate() {
                    if hr.re == 0.0 && hr.im == 0.0 {
                        continue;
                    }
                    let ys = yr[r..r + len].iter_mut().zip(&mut yi[r..r + len]);
                    for ((a, b), (&x_r, &x_i)) in ys.zip(xr.iter().zip(xi)) {
                        *a += x_r * hr.re - x_i * hr.im;
                        *b += x_r * hr.im + x_i * hr.re;
                    }
                }
            }
            for (o, (&re, &im)) in out[m * rows..(m + 1) * rows].iter_mut().zip(yr.iter().zip(&yi)) {
                *o = Complex64::new(re, im);
            }
        }
    }

    #[inline(always)]
    fn correlate(&self, y: &[Complex64], out: &mut [Complex64]) {
        let Layout { n_tx, n_rx, n_range } = self.layout;
        let rows = self.block_rows();
        let (mut yr, mut yi) = (vec![0.0; rows], vec![0.0; rows]);
        let (mut vr, mut vi) = (vec![0.0; n_range], vec![0.0; n_range]);
        for m in 0..n_rx {
            for (i, z) in y[m * rows..(m + 1) * rows].iter().enumerate() {
                (yr[i], yi[i]) = (z.re, z.im);
            }
            for n in 0..n_tx {
                // Tap-outer order: the per-output summation order of a dot
                // product, with independent outputs in the inner loop.
                vr.iter_mut().chain(vi.iter_mut()).for_each(|v| *v = 0.0);
                let [cr, ci] = &self.conj_split[n];
                for (l, (&c_re, &c_im)) in cr.iter().zip(ci).enumerate() {
                    let ys = yr[l..l + n_range].iter().zip(&yi[l..l + n_range]);
                    for ((a, b), (&y_r, &y_i)) in vr.iter_mut().zip(vi.iter_mut()).zip(ys) {
                        *a += y_r * c_re - y_i * c_im;
                        *b += y_r * c_im + y_i * c_re;
                    }
                }
                let off = self.layout.pair_offset(m, n);
                for (o, (&re, &im)) in out[off..off + n_range].iter_mut().zip(vr.iter().zip(&vi)) {
                    *o = Complex64::new(re, im);
                }
            }
        }
    }

    // Wider vectors only; no FMA, so results match the baseline build bit for bit.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn convolve_avx2(&self, h: &[Complex64], out: &mut [Complex64]) {
        self.convolve(h, out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn correlate_avx2(&self, y: &[Complex64], out: &mut [Complex64]) {
        self.correlate(y, out)
    }
}

impl LinearOperator for ConvolutionDictionary {
    fn nrows(&self) -> usize {
        self.layout.n_rx * self.block_rows()
    }

    fn ncols(&self) -> usize {
        self.layout.nmr()
    }

    fn apply_into(&self, h: &[Complex64], out: &mut [Complex64]) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: AVX2 support was just checked.
            return unsafe { self.convolve_avx2(h, out) };
        }
        self.convolve(h, out)
    }

    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: AVX2 support was just checked.
            return unsafe { self.correlate_avx2(y, out) };
        }
        self.correlate(y, out)
    }

    fn column_norms_sq(&self) -> Vec<f64> {
        let norms: Vec<f64> = self.taps.iter().map(|t| t.iter().map(|z| z.norm_sqr()).sum()).collect();
        (0..self.layout.nmr())
            .map(|row| norms[(row / self.layout.n_range) % self.layout.n_tx])
            .collect()
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        self.dense_unchecked()
    }
}

/// Builds the stacked dictionary of LFM pulses for `config`.
pub fn build_dictionary(config: &RadarConfig) -> Result<ConvolutionDictionary> {
    config.validate()?;
    let taps = (0..config.n_tx)
        .map(|n| gen_lfm(config, n).map(|w| w.samples))
        .collect::<Result<Vec<_>>>()?;
    ConvolutionDictionary::from_taps(config.n_rx, config.n_range_bins, taps)
}
