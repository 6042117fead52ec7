//! Data generators for the no-signal null, the single mean-shift alternative,
//! and the five-leaf regression function of the tree recovery study.
//!
//! Covariates are standard normal with common pairwise correlation `rho`,
//! built per row as `sqrt(rho) * z0 + sqrt(1 - rho) * z_j` from one shared
//! factor `z0` and `d` idiosyncratic draws (the shared draw is skipped when
//! `rho == 0`). Each row draws its covariates first, then its noise term.

use serde::{Deserialize, Serialize};

use super::rng::{Purpose, SimRng};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::ln2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullConfig {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl NullConfig {
    pub fn new(n: usize, d: usize, rho: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            rho,
            mu: 0.0,
            sigma: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_common(self.n, self.d, self.rho, self.sigma)
    }
}

fn check_common(n: usize, d: usize, rho: f64, sigma: f64) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::domain("n and d must be positive"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("rho must lie in [0, 1), got {rho}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Single mean shift in covariate `j` at `xi`; rows with `x_j <= xi` get `mu_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltConfig {
    pub n: usize,
    pub d: usize,
    pub j: usize,
    pub xi: f64,
    /// `P(X_j <= xi)`; with standard normal covariates this is `Phi(xi)`.
    pub t0: f64,
    pub mu_l: f64,
    pub mu_r: f64,
    pub sigma: f64,
    pub rho: f64,
    pub seed: u64,
}

impl AltConfig {
    /// The detection-curve setting: shift `n^(-1/5)` in the first covariate at 0.
    pub fn power_curve(n: usize, d: usize, rho: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            j: 0,
            xi: 0.0,
            t0: 0.5,
            mu_l: 0.0,
            mu_r: (n as f64).powf(-0.2),
            sigma: 1.0,
            rho,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_common(self.n, self.d, self.rho, self.sigma)?;
        if self.j >= self.d {
            return Err(Error::domain(format!(
                "signal covariate {} out of range for d = {}",
                self.j, self.d
            )));
        }
        if !(self.t0 > 0.0 && self.t0 < 1.0) {
            return Err(Error::domain(format!("t0 must lie in (0, 1), got {}", self.t0)));
        }
        if self.mu_l == self.mu_r {
            return Err(Error::domain("mu_l and mu_r must differ"));
        }
        Ok(())
    }
}

/// Shift amplitude `theta_n = (sqrt(2 ln2 n) + eta) / sqrt(n t0 (1 - t0))`,
/// in units of `sigma`.
pub fn stepsize_amplitude(n: usize, t0: f64, eta: f64) -> f64 {
    let n = n as f64;
    ((2.0 * ln2(n)).sqrt() + eta) / (n * t0 * (1.0 - t0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeufeldConfig {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub d: usize,
    pub seed: u64,
}

impl NeufeldConfig {
    pub fn new(n: usize, a: f64, b: f64, seed: u64) -> Self {
        Self {
            n,
            a,
            b,
            sigma: 1.0,
            d: 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_common(self.n, self.d, 0.0, self.sigma)?;
        if self.d < 3 {
            return Err(Error::domain(format!(
                "the regression function needs d >= 3, got {}",
                self.d
            )));
        }
        Ok(())
    }
}

/// `b * 1{x1 <= 0} * (1 + a 1{x2 > 0} + 1{x2 x3 > 0})`.
pub fn neufeld_mean(x: &[f64], a: f64, b: f64) -> f64 {
    if x[0] > 0.0 {
        return 0.0;
    }
    let mut level = 1.0;
    if x[1] > 0.0 {
        level += a;
    }
    if x[1] * x[2] > 0.0 {
        level += 1.0;
    }
    b * level
}

fn covariate_row(rng: &mut SimRng, rho: f64, row: &mut [f64]) {
    if rho == 0.0 {
        row.iter_mut().for_each(|x| *x = rng.normal());
    } else {
        let common = rho.sqrt() * rng.normal();
        let own = (1.0 - rho).sqrt();
        row.iter_mut().for_each(|x| *x = common + own * rng.normal());
    }
}

fn assemble(n: usize, d: usize, mut draw_row: impl FnMut(&mut [f64]) -> f64) -> Dataset {
    let mut columns = vec![Vec::with_capacity(n); d];
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        y.push(draw_row(&mut row));
        for (c, &x) in columns.iter_mut().zip(&row) {
            c.push(x);
        }
    }
    Dataset::new(y, columns, None).expect("generated values are finite")
}

pub fn sample_null(cfg: &NullConfig, rng: &mut SimRng) -> Dataset {
    assemble(cfg.n, cfg.d, |row| {
        covariate_row(rng, cfg.rho, row);
        cfg.mu + cfg.sigma * rng.normal()
    })
}

pub fn sample_alt(cfg: &AltConfig, rng: &mut SimRng) -> Dataset {
    assemble(cfg.n, cfg.d, |row| {
        covariate_row(rng, cfg.rho, row);
        let mean = if row[cfg.j] <= cfg.xi { cfg.mu_l } else { cfg.mu_r };
        mean + cfg.sigma * rng.normal()
    })
}

pub fn sample_neufeld(cfg: &NeufeldConfig, n: usize, rng: &mut SimRng) -> Dataset {
    assemble(n, cfg.d, |row| {
        covariate_row(rng, 0.0, row);
        neufeld_mean(row, cfg.a, cfg.b) + cfg.sigma * rng.normal()
    })
}

/// Null dataset from the seed's first data stream.
pub fn gen_null(cfg: &NullConfig) -> Result<Dataset> {
    cfg.validate()?;
    Ok(sample_null(cfg, &mut SimRng::substream(cfg.seed, 0, Purpose::Data)))
}

pub fn gen_alt(cfg: &AltConfig) -> Result<Dataset> {
    cfg.validate()?;
    Ok(sample_alt(cfg, &mut SimRng::substream(cfg.seed, 0, Purpose::Data)))
}

pub fn gen_neufeld(cfg: &NeufeldConfig) -> Result<Dataset> {
    cfg.validate()?;
    Ok(sample_neufeld(
        cfg,
        cfg.n,
        &mut SimRng::substream(cfg.seed, 0, Purpose::Data),
    ))
}
