//! Univariate measures, orthonormal bases and candidate point pools.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::RngStream;

/// Default size of the random candidate pool for continuous measures.
pub const DEFAULT_CANDIDATES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("family {family} is not orthonormal for measure {measure}")]
    Incompatible { family: String, measure: String },
    #[error("point {point} is not in the support of {measure}")]
    OutOfSupport { point: f64, measure: String },
    #[error("cannot parse feature space {0:?}")]
    Parse(String),
    #[error("basis dimension must be at least 1")]
    ZeroDim,
}

/// A probability measure on a subset of the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure1D {
    Uniform { a: f64, b: f64 },
    StdGaussian,
    /// Uniform weight on the integer codes `0..m`.
    FiniteUniform { m: usize },
}

impl Measure1D {
    pub fn uniform(a: f64, b: f64) -> Result<Self, BasisError> {
        if a < b && a.is_finite() && b.is_finite() {
            Ok(Measure1D::Uniform { a, b })
        } else {
            Err(BasisError::InvalidMeasure(format!("uniform({a},{b})")))
        }
    }

    pub fn finite(m: usize) -> Result<Self, BasisError> {
        if m >= 1 {
            Ok(Measure1D::FiniteUniform { m })
        } else {
            Err(BasisError::InvalidMeasure("finite_uniform(0)".into()))
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Measure1D::FiniteUniform { .. })
    }

    fn finite_code(&self, x: f64) -> Result<usize, BasisError> {
        match *self {
            Measure1D::FiniteUniform { m } if x >= 0.0 && x.fract() == 0.0 && (x as usize) < m => {
                Ok(x as usize)
            }
            _ => Err(BasisError::OutOfSupport {
                point: x,
                measure: self.to_string(),
            }),
        }
    }

    /// Draw `count` i.i.d. samples, advancing `rng`.
    pub fn sample(&self, count: usize, rng: &mut RngStream) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    pub fn sample_one(&self, rng: &mut RngStream) -> f64 {
        let rng = rng.rng();
        match *self {
            Measure1D::Uniform { a, b } => rng.random_range(a..b),
            Measure1D::StdGaussian => rng.sample(StandardNormal),
            Measure1D::FiniteUniform { m } => rng.random_range(0..m) as f64,
        }
    }
}

impl fmt::Display for Measure1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure1D::Uniform { a, b } => write!(f, "uniform({a},{b})"),
            Measure1D::StdGaussian => write!(f, "std_gaussian"),
            Measure1D::FiniteUniform { m } => write!(f, "finite_uniform({m})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Legendre,
    Hermite,
    Canonical,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Legendre => "legendre",
            Family::Hermite => "hermite",
            Family::Canonical => "canonical",
        })
    }
}

/// A measured univariate set with an orthonormal basis of dimension `dim`.
///
/// Serializes as its short name, e.g. `legendre:p=4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureSpace {
    measure: Measure1D,
    family: Family,
    dim: usize,
}

impl FeatureSpace {
    pub fn new(measure: Measure1D, family: Family, dim: usize) -> Result<Self, BasisError> {
        if dim == 0 {
            return Err(BasisError::ZeroDim);
        }
        let ok = match (family, measure) {
            (Family::Legendre, Measure1D::Uniform { .. }) => true,
            (Family::Hermite, Measure1D::StdGaussian) => true,
            (Family::Canonical, Measure1D::FiniteUniform { m }) => dim == m,
            _ => false,
        };
        if !ok {
            return Err(BasisError::Incompatible {
                family: family.to_string(),
                measure: measure.to_string(),
            });
        }
        Ok(Self {
            measure,
            family,
            dim,
        })
    }

    /// Polynomials of degree ≤ `p` on `uniform(-1, 1)`.
    pub fn legendre(p: usize) -> Self {
        Self::new(Measure1D::Uniform { a: -1.0, b: 1.0 }, Family::Legendre, p + 1)
            .expect("valid legendre space")
    }

    /// Polynomials of degree ≤ `p` on the standard Gaussian.
    pub fn hermite(p: usize) -> Self {
        Self::new(Measure1D::StdGaussian, Family::Hermite, p + 1).expect("valid hermite space")
    }

    /// Indicator basis of the `m`-point uniform set.
    pub fn canonical(m: usize) -> Result<Self, BasisError> {
        Self::new(Measure1D::finite(m)?, Family::Canonical, m)
    }

    pub fn measure(&self) -> Measure1D {
        self.measure
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(φ_j(x_k))`, one row per point.
    pub fn eval(&self, points: &[f64]) -> Result<DMatrix<f64>, BasisError> {
        let mut out = DMatrix::zeros(points.len(), self.dim);
        let mut row = vec![0.0; self.dim];
        for (k, &x) in points.iter().enumerate() {
            self.eval_into(x, &mut row)?;
            for j in 0..self.dim {
                out[(k, j)] = row[j];
            }
        }
        Ok(out)
    }

    /// Evaluate all basis functions at one point into `out[..dim]`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<(), BasisError> {
        let n = self.dim;
        match self.measure {
            Measure1D::Uniform { a, b } => {
                if !(a..=b).contains(&x) {
                    return Err(BasisError::OutOfSupport {
                        point: x,
                        measure: self.measure.to_string(),
                    });
                }
                let t = (2.0 * x - a - b) / (b - a);
                // t φ_j = b_{j+1} φ_{j+1} + b_j φ_{j-1}, b_j = j / sqrt(4j² - 1)
                out[0] = 1.0;
                if n > 1 {
                    out[1] = 3f64.sqrt() * t;
                }
                for j in 1..n.saturating_sub(1) {
                    let bj = legendre_b(j);
                    let bj1 = legendre_b(j + 1);
                    out[j + 1] = (t * out[j] - bj * out[j - 1]) / bj1;
                }
            }
            Measure1D::StdGaussian => {
                if !x.is_finite() {
                    return Err(BasisError::OutOfSupport {
                        point: x,
                        measure: self.measure.to_string(),
                    });
                }
                // x φ_j = sqrt(j+1) φ_{j+1} + sqrt(j) φ_{j-1}
                out[0] = 1.0;
                if n > 1 {
                    out[1] = x;
                }
                for j in 1..n.saturating_sub(1) {
                    out[j + 1] = (x * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
                }
            }
            Measure1D::FiniteUniform { m } => {
                let code = self.measure.finite_code(x)?;
                let scale = (m as f64).sqrt();
                for (j, o) in out.iter_mut().take(n).enumerate() {
                    *o = if j == code { scale } else { 0.0 };
                }
            }
        }
        Ok(())
    }

    /// Candidate pool for magic-point selection. Finite measures return
    /// their whole support regardless of `size`.
    pub fn candidate_grid(&self, size: usize, rng: &mut RngStream) -> Vec<f64> {
        match self.measure {
            Measure1D::FiniteUniform { m } => (0..m).map(|k| k as f64).collect(),
            _ => self.measure.sample(size, rng),
        }
    }
}

fn legendre_b(j: usize) -> f64 {
    let j = j as f64;
    j / (4.0 * j * j - 1.0).sqrt()
}

impl fmt::Display for FeatureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.family, self.measure) {
            (Family::Legendre, Measure1D::Uniform { a, b }) if a == -1.0 && b == 1.0 => {
                write!(f, "legendre:p={}", self.dim - 1)
            }
            (Family::Legendre, Measure1D::Uniform { a, b }) => {
                write!(f, "legendre:p={},a={a},b={b}", self.dim - 1)
            }
            (Family::Hermite, _) => write!(f, "hermite:p={}", self.dim - 1),
            (Family::Canonical, _) => write!(f, "canonical:m={}", self.dim),
            _ => unreachable!("validated on construction"),
        }
    }
}

/// Parses `legendre:p=10`, `legendre:p=3,a=0,b=2`, `hermite:p=4`,
/// `canonical:m=2`.
impl FromStr for FeatureSpace {
    type Err = BasisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BasisError::Parse(s.to_string());
        let (family, args) = s.trim().split_once(':').ok_or_else(bad)?;
        let mut p = None;
        let mut m = None;
        let mut a = -1.0;
        let mut b = 1.0;
        for kv in args.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            match k.trim() {
                "p" => p = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                "m" => m = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                "a" => a = v.trim().parse::<f64>().map_err(|_| bad())?,
                "b" => b = v.trim().parse::<f64>().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        match family.trim() {
            "legendre" => Self::new(Measure1D::uniform(a, b)?, Family::Legendre, p.ok_or_else(bad)? + 1),
            "hermite" => Ok(Self::hermite(p.ok_or_else(bad)?)),
            "canonical" => Self::canonical(m.ok_or_else(bad)?),
            _ => Err(bad()),
        }
    }
}

impl Serialize for FeatureSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FeatureSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Gauss quadrature nodes and weights for a polynomial family. Nodes are the
/// eigenvalues of the Jacobi matrix; weights use the Christoffel formula
/// `1 / Σ_j φ_j(x)²`, which keeps small tail weights accurate. Weights sum to
/// one.
pub fn gauss_rule(family: Family, points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(points, points);
    for j in 1..points {
        let off = match family {
            Family::Legendre => legendre_b(j),
            Family::Hermite => (j as f64).sqrt(),
            Family::Canonical => panic!("no Gauss rule for the canonical family"),
        };
        jac[(j, j - 1)] = off;
        jac[(j - 1, j)] = off;
    }
    let mut nodes: Vec<f64> = jac.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let space = match family {
        Family::Legendre => FeatureSpace::legendre(points - 1),
        _ => FeatureSpace::hermite(points - 1),
    };
    let mut row = vec![0.0; points];
    let weights = nodes
        .iter()
        .map(|&x| {
            let x = if family == Family::Legendre { x.clamp(-1.0, 1.0) } else { x };
            space.eval_into(x, &mut row).expect("node inside support");
            1.0 / row.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    (nodes, weights)
}
