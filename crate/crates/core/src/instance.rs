//! Problem instances `y = A·x0 + w` drawn from random matrix ensembles.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::prior::DiscretePrior;
use crate::rng::{stream_rng, Stream};

/// Undersampling ratio, noise variance and signal prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub sigma2: f64,
    pub prior: DiscretePrior,
}

impl ModelParams {
    pub fn new(delta: f64, sigma2: f64, prior: DiscretePrior) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        Ok(ModelParams {
            delta,
            sigma2,
            prior,
        })
    }

    /// Number of measurements for `n` unknowns, rounding ties to even.
    pub fn measurements(&self, n: usize) -> usize {
        (self.delta * n as f64).round_ties_even() as usize
    }
}

/// Random matrix ensembles with i.i.d. entries of variance `1/m`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// normal(0, 1/m)
    #[default]
    Gaussian,
    /// ±1/√m with equal probability
    Rademacher,
}

impl std::str::FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Ensemble::Gaussian),
            "rademacher" | "pm1" | "sign" => Ok(Ensemble::Rademacher),
            _ => Err(Error::InvalidArgument(format!("unknown ensemble {s:?}"))),
        }
    }
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Rademacher => "rademacher",
        })
    }
}

/// One realization of the measurement model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: DenseMatrix,
    pub x0: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub delta: f64,
    pub sigma2: f64,
    pub seed: u64,
}

impl Instance {
    /// Assembles `y = A·x0 + w`.
    pub fn from_parts(a: DenseMatrix, x0: Vec<f64>, w: Vec<f64>, sigma2: f64, seed: u64) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("empty instance".into()));
        }
        let mut y = a.mul_vec(&x0);
        y.iter_mut().zip(&w).for_each(|(yi, wi)| *yi += wi);
        Ok(Instance {
            a,
            x0,
            w,
            y,
            m,
            n,
            delta: m as f64 / n as f64,
            sigma2,
            seed,
        })
    }

    /// Number of nonzero entries of the ground truth.
    pub fn support_size(&self) -> usize {
        self.x0.iter().filter(|v| **v != 0.0).count()
    }

    /// `(1/n)‖x − x0‖²`
    pub fn mse(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.n as f64
    }
}

/// Draws an `m × n` matrix from `ensemble` using the matrix stream of `seed`.
pub fn random_matrix(ensemble: Ensemble, m: usize, n: usize, seed: u64) -> DenseMatrix {
    let stream = match ensemble {
        Ensemble::Gaussian => Stream::GaussianMatrix,
        Ensemble::Rademacher => Stream::RademacherMatrix,
    };
    random_matrix_with(ensemble, m, n, &mut stream_rng(seed, stream))
}

/// Draws an `m × n` matrix from `ensemble` with entries of variance `1/m`.
pub fn random_matrix_with<R: Rng>(ensemble: Ensemble, m: usize, n: usize, rng: &mut R) -> DenseMatrix {
    let scale = 1.0 / (m as f64).sqrt();
    let data: Vec<f64> = match ensemble {
        Ensemble::Gaussian => (0..m * n)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        Ensemble::Rademacher => {
            let mut out = Vec::with_capacity(m * n);
            while out.len() < m * n {
                let bits: u64 = rng.random();
                let take = (m * n - out.len()).min(64);
                out.extend((0..take).map(|k| if bits >> k & 1 == 1 { scale } else { -scale }));
            }
            out
        }
    };
    DenseMatrix::from_row_major(m, n, data).expect("shape")
}

/// i.i.d. normal(0, σ²) noise of length `m` from the noise stream of `seed`.
pub fn gaussian_noise(m: usize, sigma2: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Noise);
    let sd = sigma2.sqrt();
    (0..m).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// A signal with exactly `k` nonzero entries, each ±1 with equal probability,
/// at uniformly random positions.
pub fn sparse_sign_signal(n: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    if k > n {
        return Err(Error::InvalidArgument(format!("support {k} exceeds n = {n}")));
    }
    let mut rng = stream_rng(seed, Stream::Signal);
    let mut x = vec![0.0; n];
    for i in sample_indices(&mut rng, n, k) {
        x[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    Ok(x)
}

fn checked_dims(n: usize, params: &ModelParams) -> Result<usize> {
    let m = params.measurements(n);
    if m == 0 {
        return Err(Error::InvalidArgument(format!(
            "n = {n} with delta = {} gives m = 0",
            params.delta
        )));
    }
    Ok(m)
}

/// Instance with the given ensemble, prior signal and Gaussian noise.
pub fn gen_instance(ensemble: Ensemble, n: usize, params: &ModelParams, seed: u64) -> Result<Instance> {
    let m = checked_dims(n, params)?;
    let a = random_matrix(ensemble, m, n, seed);
    let x0 = params.prior.sample(n, seed);
    let w = gaussian_noise(m, params.sigma2, seed);
    Instance::from_parts(a, x0, w, params.sigma2, seed)
}

/// A with i.i.d. normal(0, 1/m) entries (columns are not renormalized).
pub fn gen_gaussian_instance(n: usize, params: &ModelParams, seed: u64) -> Result<Instance> {
    gen_instance(Ensemble::Gaussian, n, params, seed)
}

/// A with i.i.d. entries ±1/√m; every column has unit norm.
pub fn gen_rademacher_instance(n: usize, params: &ModelParams, seed: u64) -> Result<Instance> {
    gen_instance(Ensemble::Rademacher, n, params, seed)
}

/// Finite-size diagnostics of the converging-sequence conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub min_column_norm: f64,
    pub max_column_norm: f64,
    pub norm_tolerance: f64,
    pub signal_second_moment: f64,
    pub expected_signal_second_moment: f64,
    pub signal_tolerance: f64,
    pub noise_variance: f64,
    pub expected_noise_variance: f64,
    pub noise_tolerance: f64,
    pub norms_ok: bool,
    pub signal_ok: bool,
    pub noise_ok: bool,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.norms_ok && self.signal_ok && self.noise_ok
    }
}

/// Compares column norms, signal second moment and noise variance with
/// their limits, at tolerances `5/√m` (norms) and `5·sqrt(Var/count)`
/// (moments; Gaussian noise is assumed, so Var(W²) = 2σ⁴).
pub fn check_converging(instance: &Instance, params: &ModelParams) -> ConvergenceReport {
    let norms = instance.a.column_norms();
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm_tol = 5.0 / (instance.m as f64).sqrt();

    let sig = instance.x0.iter().map(|v| v * v).sum::<f64>() / instance.n as f64;
    let sig_expected = params.prior.second_moment();
    let sig_tol = 5.0 * (params.prior.square_variance() / instance.n as f64).sqrt();

    let noise = instance.w.iter().map(|v| v * v).sum::<f64>() / instance.m as f64;
    let noise_tol = 5.0 * (2.0 * params.sigma2 * params.sigma2 / instance.m as f64).sqrt();

    // a zero tolerance still admits exact agreement up to rounding
    let slack = 1e-12;
    ConvergenceReport {
        min_column_norm: min,
        max_column_norm: max,
        norm_tolerance: norm_tol,
        signal_second_moment: sig,
        expected_signal_second_moment: sig_expected,
        signal_tolerance: sig_tol,
        noise_variance: noise,
        expected_noise_variance: params.sigma2,
        noise_tolerance: noise_tol,
        norms_ok: (min - 1.0).abs() <= norm_tol && (max - 1.0).abs() <= norm_tol,
        signal_ok: (sig - sig_expected).abs() <= sig_tol + slack,
        noise_ok: (noise - params.sigma2).abs() <= noise_tol + slack,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleHeader {
    format: String,
    m: usize,
    n: usize,
    delta: f64,
    sigma2: f64,
    seed: u64,
    layout: Vec<String>,
}

const BUNDLE_FORMAT: &str = "amp-lasso-instance/1";

/// Writes the instance as a one-line JSON header followed by little-endian
/// `f64` data: `A` row-major, then `x0`, `w`, `y`.
pub fn write_bundle<W: Write>(instance: &Instance, mut out: W) -> Result<()> {
    let header = BundleHeader {
        format: BUNDLE_FORMAT.into(),
        m: instance.m,
        n: instance.n,
        delta: instance.delta,
        sigma2: instance.sigma2,
        seed: instance.seed,
        layout: ["A", "x0", "w", "y"].iter().map(|s| s.to_string()).collect(),
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let blocks: [&[f64]; 4] = [instance.a.as_slice(), &instance.x0, &instance.w, &instance.y];
    for block in blocks {
        for v in block {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_bundle<R: Read>(input: R) -> Result<Instance> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: BundleHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Io(format!("bad header: {e}")))?;
    if header.format != BUNDLE_FORMAT {
        return Err(Error::Io(format!("unsupported format {:?}", header.format)));
    }
    let (m, n) = (header.m, header.n);
    let mut read_block = |len: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; len * 8];
        reader.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    };
    let a = DenseMatrix::from_row_major(m, n, read_block(m * n)?)?;
    let x0 = read_block(n)?;
    let w = read_block(m)?;
    let y = read_block(m)?;
    Ok(Instance {
        a,
        x0,
        w,
        y,
        m,
        n,
        delta: header.delta,
        sigma2: header.sigma2,
        seed: header.seed,
    })
}

pub fn save_bundle(instance: &Instance, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_bundle(instance, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<Instance> {
    read_bundle(File::open(path)?)
}
