use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain, Purpose};

/// Fixed seed for the Example 5 coefficients, shared by every run and user.
pub const EX5_BETA_SEED: u64 = 0x5EED_0000_0000_0005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
}

impl ExampleId {
    pub fn from_number(k: u32) -> Result<Self> {
        Ok(match k {
            1 => Self::Ex1,
            2 => Self::Ex2,
            3 => Self::Ex3,
            4 => Self::Ex4,
            5 => Self::Ex5,
            _ => return Err(Error::InvalidParameter(format!("unknown example id {k}; expected 1-5"))),
        })
    }

    pub fn number(self) -> u32 {
        match self {
            Self::Ex1 => 1,
            Self::Ex2 => 2,
            Self::Ex3 => 3,
            Self::Ex4 => 4,
            Self::Ex5 => 5,
        }
    }

    pub fn p(self) -> usize {
        match self {
            Self::Ex1 | Self::Ex2 => 8,
            Self::Ex3 | Self::Ex4 => 40,
            Self::Ex5 => 120,
        }
    }

    /// Noise level used when none is given (Examples 3-5 fix it).
    pub fn default_sigma(self) -> f64 {
        match self {
            Self::Ex1 | Self::Ex2 | Self::Ex3 => 3.0,
            Self::Ex4 => 6.0,
            // not stated for the p > n setting; same level as Examples 1-3
            Self::Ex5 => 3.0,
        }
    }

    /// Candidate subset sizes used when tuning the ensemble on this example.
    pub fn q_grid(self) -> Vec<usize> {
        match self {
            Self::Ex1 | Self::Ex2 => vec![2, 4, 6, 8],
            Self::Ex3 | Self::Ex4 => vec![4, 8, 12, 16, 20, 24, 28],
            Self::Ex5 => vec![5, 10, 15, 20, 25],
        }
    }

    pub fn beta0(self) -> Array1<f64> {
        let p = self.p();
        match self {
            Self::Ex1 => Array1::from(vec![3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]),
            Self::Ex2 => Array1::from_elem(p, 0.85),
            Self::Ex3 => Array1::from_shape_fn(p, |j| match j {
                0..=4 => 3.0,
                5..=9 => -2.0,
                _ => 0.0,
            }),
            Self::Ex4 => {
                let mut b = Array1::zeros(p);
                for (j, v) in [3.0, 3.0, -2.0, 3.0, 3.0, -2.0].into_iter().enumerate() {
                    b[j] = v;
                }
                b
            }
            Self::Ex5 => {
                // N(3, 0.5) read as variance 0.5
                let dist = Normal::new(3.0, 0.5_f64.sqrt()).expect("valid normal");
                let mut rng = stream(EX5_BETA_SEED, Domain::Simulation, 0, Purpose::Coefficients);
                Array1::from_shape_fn(p, |j| if j < 60 { dist.sample(&mut rng) } else { 0.0 })
            }
        }
    }

    pub fn covariance(self) -> Array2<f64> {
        let p = self.p();
        match self {
            Self::Ex1 | Self::Ex2 => {
                Array2::from_shape_fn((p, p), |(a, b)| 0.5_f64.powi((a as i32 - b as i32).abs()))
            }
            Self::Ex3 => Array2::from_shape_fn((p, p), |(a, b)| {
                if a == b {
                    1.0
                } else if a < 10 && b < 10 {
                    0.9
                } else {
                    0.0
                }
            }),
            Self::Ex4 => Array2::from_shape_fn((p, p), |(a, b)| {
                if a == b {
                    1.0
                } else if (a < 3 && b < 3) || ((3..6).contains(&a) && (3..6).contains(&b)) {
                    0.9
                } else {
                    0.0
                }
            }),
            Self::Ex5 => Array2::from_shape_fn((p, p), |(a, b)| {
                let (ba, bb) = (a / 30, b / 30);
                if a == b {
                    1.0
                } else if ba == bb {
                    0.7
                } else if (ba == 1 && bb == 2) || (ba == 2 && bb == 1) {
                    0.2
                } else {
                    0.0
                }
            }),
        }
    }
}

/// One simulation setting with every parameter resolved.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub example_id: ExampleId,
    pub n: usize,
    pub sigma: f64,
    pub beta0: Array1<f64>,
    pub covariance: Array2<f64>,
    #[serde(skip)]
    cholesky: Array2<f64>,
}

impl SimulationSpec {
    pub fn new(example_id: ExampleId, n: usize, sigma: Option<f64>) -> Result<Self> {
        let sigma = sigma.unwrap_or_else(|| example_id.default_sigma());
        Self::custom(example_id, n, sigma, example_id.beta0(), example_id.covariance())
    }

    pub fn custom(
        example_id: ExampleId,
        n: usize,
        sigma: f64,
        beta0: Array1<f64>,
        covariance: Array2<f64>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("sample size must be >= 2, got {n}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if beta0.len() != covariance.nrows() {
            return Err(Error::DimensionMismatch { expected: covariance.nrows(), got: beta0.len() });
        }
        let cholesky = cholesky_lower(&covariance)?;
        Ok(Self { example_id, n, sigma, beta0, covariance, cholesky })
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }

    /// Indices of the nonzero true coefficients.
    pub fn important(&self) -> Vec<usize> {
        self.beta0.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }

    pub fn cholesky(&self) -> &Array2<f64> {
        &self.cholesky
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky_lower(covariance: &Array2<f64>) -> Result<Array2<f64>> {
    let (r, c) = covariance.dim();
    if r != c {
        return Err(Error::DimensionMismatch { expected: r, got: c });
    }
    let m = DMatrix::from_fn(r, c, |i, j| covariance[[i, j]]);
    let chol = m.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    Ok(Array2::from_shape_fn((r, c), |(i, j)| l[(i, j)]))
}

/// `n` rows drawn i.i.d. from `N(0, L L')` given the lower factor `L`.
pub fn mvn_sample_with_factor<R: Rng + ?Sized>(factor: &Array2<f64>, n: usize, rng: &mut R) -> Array2<f64> {
    let p = factor.nrows();
    let z = Array2::from_shape_simple_fn((n, p), || StandardNormal.sample(rng));
    z.dot(&factor.t())
}

pub fn mvn_sample<R: Rng + ?Sized>(covariance: &Array2<f64>, n: usize, rng: &mut R) -> Result<Array2<f64>> {
    let l = cholesky_lower(covariance)?;
    Ok(mvn_sample_with_factor(&l, n, rng))
}

fn draw(spec: &SimulationSpec, seed: u64, design: Purpose, noise: Purpose) -> Dataset {
    let x = mvn_sample_with_factor(&spec.cholesky, spec.n, &mut stream(seed, Domain::Simulation, 0, design));
    let mut rng = stream(seed, Domain::Simulation, 0, noise);
    let eps: Array1<f64> = (0..spec.n).map(|_| spec.sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let y = x.dot(&spec.beta0) + eps;
    Dataset::new(x, y, None).expect("simulated data are finite")
}

/// Training and validation sets of equal size from disjoint streams.
pub fn generate(spec: &SimulationSpec, seed: u64) -> (Dataset, Dataset) {
    let train = draw(spec, seed, Purpose::TrainDesign, Purpose::TrainNoise);
    let valid = draw(spec, seed, Purpose::ValidDesign, Purpose::ValidNoise);
    (train, valid)
}
