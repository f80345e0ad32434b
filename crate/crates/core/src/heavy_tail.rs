//! Heavy-tailed step distributions and 2D random walks.
//!
//! [`ParetoII`] (the Lomax distribution) drives the exploration durations of
//! the controller. The other step kinds exist for the random-walk coverage
//! comparison between heavy- and light-tailed walks.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};

use crate::variates::RngVariates;
use crate::{Error, Result};

/// Type-II Pareto distribution with shape `alpha` and scale `lambda`.
///
/// Density `(alpha / lambda) * (1 + x / lambda)^-(alpha + 1)` on `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoII {
    alpha: f64,
    lambda: f64,
}

impl ParetoII {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("pareto shape must be positive, got {alpha}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("pareto scale must be positive, got {lambda}")));
        }
        Ok(Self { alpha, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Probability density. `x = 0` is admitted as the boundary limit `alpha / lambda`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(self.alpha / self.lambda * (1.0 + x / self.lambda).powf(-(self.alpha + 1.0)))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(1.0 - (1.0 + x / self.lambda).powf(-self.alpha))
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok((1.0 + x / self.lambda).powf(-self.alpha))
    }

    /// Inverse-CDF transform of a single uniform variate `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::domain(format!("uniform variate {u} outside [0, 1)")));
        }
        Ok(self.lambda * ((1.0 - u).powf(-1.0 / self.alpha) - 1.0))
    }
}

fn check_support(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("pareto support is x >= 0, got {x}")))
    }
}

/// Free-function form of [`ParetoII::pdf`].
pub fn pareto_pdf(x: f64, dist: &ParetoII) -> Result<f64> {
    dist.pdf(x)
}

/// Free-function form of [`ParetoII::cdf`].
pub fn pareto_cdf(x: f64, dist: &ParetoII) -> Result<f64> {
    dist.cdf(x)
}

/// Free-function form of [`ParetoII::sample`].
pub fn pareto_sample(dist: &ParetoII, u: f64) -> Result<f64> {
    dist.sample(u)
}

/// Law of the step length of a [`random_walk`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepDistribution {
    ParetoII(ParetoII),
    /// `|X|` with `X` standard Cauchy.
    UnitCauchy,
    /// `|X|` with `X` standard normal.
    UnitGaussian,
    Constant(f64),
}

impl StepDistribution {
    pub fn constant(length: f64) -> Result<Self> {
        if length >= 0.0 && length.is_finite() {
            Ok(Self::Constant(length))
        } else {
            Err(Error::domain(format!("constant step length must be >= 0, got {length}")))
        }
    }

    /// Draws one nonnegative step length.
    pub fn sample_length<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            StepDistribution::ParetoII(p) => {
                let u: f64 = rng.random();
                p.sample(u).expect("rng yields variates in [0, 1)")
            }
            StepDistribution::UnitCauchy => {
                let c = Cauchy::new(0.0, 1.0).expect("unit cauchy is valid");
                let x: f64 = c.sample(rng);
                x.abs()
            }
            StepDistribution::UnitGaussian => {
                let x: f64 = StandardNormal.sample(rng);
                x.abs()
            }
            StepDistribution::Constant(len) => len,
        }
    }
}

impl fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepDistribution::ParetoII(p) => write!(f, "pareto:alpha={},lambda={}", p.alpha, p.lambda),
            StepDistribution::UnitCauchy => f.write_str("cauchy"),
            StepDistribution::UnitGaussian => f.write_str("gaussian"),
            StepDistribution::Constant(len) => write!(f, "constant:{len}"),
        }
    }
}

/// Parses `pareto:α=1`, `pareto:alpha=2,lambda=1`, `cauchy`, `gaussian`,
/// `constant:2.5`.
impl FromStr for StepDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let bad = |msg: &str| Error::domain(format!("bad step distribution `{s}`: {msg}"));
        match kind.to_ascii_lowercase().as_str() {
            "pareto" | "pareto_ii" | "lomax" => {
                let mut alpha = None;
                let mut lambda = 1.0;
                for part in args.split(',').filter(|p| !p.trim().is_empty()) {
                    let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                    let value: f64 = value.trim().parse().map_err(|_| bad("non-numeric parameter"))?;
                    match key.trim() {
                        "α" | "alpha" | "a" => alpha = Some(value),
                        "λ" | "lambda" | "l" => lambda = value,
                        other => return Err(bad(&format!("unknown parameter `{other}`"))),
                    }
                }
                let alpha = alpha.ok_or_else(|| bad("missing alpha"))?;
                Ok(StepDistribution::ParetoII(ParetoII::new(alpha, lambda)?))
            }
            "cauchy" => Ok(StepDistribution::UnitCauchy),
            "gaussian" | "normal" | "brownian" => Ok(StepDistribution::UnitGaussian),
            "constant" => {
                let len: f64 = args.parse().map_err(|_| bad("expected constant:<length>"))?;
                StepDistribution::constant(len)
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

/// A planar walk starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk2D {
    pub points: Vec<(f64, f64)>,
}

impl Walk2D {
    pub fn n_steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn step_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
    }

    pub fn path_length(&self) -> f64 {
        self.step_lengths().sum()
    }

    /// Writes `step,x,y` rows, one per point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "x", "y"])?;
        for (i, (x, y)) in self.points.iter().enumerate() {
            w.write_record([i.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Simulates `n_steps` increments `length * (cos θ, sin θ)` with θ uniform on
/// `[0, 2π)` and `length` drawn from `dist`.
pub fn random_walk(dist: &StepDistribution, n_steps: usize, seed: u64) -> Walk2D {
    let mut variates = RngVariates::seed_from_u64(seed);
    let rng = variates.rng();
    let mut points = Vec::with_capacity(n_steps + 1);
    let (mut x, mut y) = (0.0_f64, 0.0_f64);
    points.push((x, y));
    for _ in 0..n_steps {
        let theta = TAU * rng.random::<f64>();
        let len = dist.sample_length(rng);
        x += len * theta.cos();
        y += len * theta.sin();
        points.push((x, y));
    }
    Walk2D { points }
}

/// Number of distinct `cell_size` grid cells containing a point of the walk.
pub fn coverage_cells(walk: &Walk2D, cell_size: f64) -> Result<usize> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::domain(format!("cell size must be positive, got {cell_size}")));
    }
    let cells: HashSet<(i64, i64)> = walk
        .points
        .iter()
        .map(|&(x, y)| ((x / cell_size).floor() as i64, (y / cell_size).floor() as i64))
        .collect();
    Ok(cells.len())
}
