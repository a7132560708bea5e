//! Weighted equilibrium measures of `exp(-|z|^alpha)` on the whole and half line.
//!
//! For `Q(z) = |z|^alpha / 2` the equilibrium density on `[-a, a]` is
//!
//! ```text
//! v(t) = (1 / pi^2) sqrt(a^2 - t^2) int_{-a}^{a} (Q'(u) - Q'(t)) / (u - t) du / sqrt(a^2 - u^2)
//! ```
//!
//! with `a` the Mhaskar-Rakhmanov-Saff number. For general `alpha` it has no
//! closed form, so it is tabulated once per exponent and sampled by inverting
//! a monotone cubic interpolant of its CDF.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate};

/// Number of panels in the CDF tabulation.
pub const TABLE_PANELS: usize = 2048;

const DENSITY_TOL: f64 = 1e-14;

/// MRS number `a^W` of `sqrt(w)` for `w = exp(-|z|^alpha)` on the real line.
pub fn mrs_whole(alpha: f64) -> f64 {
    let log = 0.5 * PI.ln() + ln_gamma(alpha / 2.0) - ln_gamma(alpha / 2.0 + 0.5);
    (log / alpha).exp()
}

/// MRS number `a^H` of `sqrt(w)` for `w = exp(-z^alpha)` on `[0, inf)`.
pub fn mrs_half(alpha: f64) -> f64 {
    let log = 2f64.ln() + 0.5 * PI.ln() + ln_gamma(alpha) - ln_gamma(alpha + 0.5);
    (log / alpha).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    Whole,
    Half,
    Bounded,
}

/// The expanded support `S_n` of a CSA sampling density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSupport {
    pub kind: SupportKind,
    /// Exponent of the weight; zero for bounded domains.
    pub alpha: f64,
    /// Scaled MRS number `a_n = n^{1/alpha} a`.
    pub a_n: f64,
    pub interval: (f64, f64),
}

impl EquilibriumSupport {
    pub fn whole(alpha: f64, n: usize) -> Result<Self> {
        check_whole_alpha(alpha)?;
        let a_n = (n as f64).powf(1.0 / alpha) * mrs_whole(alpha);
        Ok(Self {
            kind: SupportKind::Whole,
            alpha,
            a_n,
            interval: (-a_n, a_n),
        })
    }

    pub fn half(alpha: f64, n: usize) -> Result<Self> {
        check_half_alpha(alpha)?;
        let a_n = (n as f64).powf(1.0 / alpha) * mrs_half(alpha);
        Ok(Self {
            kind: SupportKind::Half,
            alpha,
            a_n,
            interval: (0.0, a_n),
        })
    }

    pub fn bounded() -> Self {
        Self {
            kind: SupportKind::Bounded,
            alpha: 0.0,
            a_n: 1.0,
            interval: (-1.0, 1.0),
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.interval.0 && z <= self.interval.1
    }
}

pub(crate) fn check_whole_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent {
            alpha,
            reason: "whole-line weights need alpha > 1",
        })
    }
}

pub(crate) fn check_half_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent {
            alpha,
            reason: "half-line weights need alpha > 1/2",
        })
    }
}

/// Tabulated whole-line equilibrium measure for one exponent (degree 1).
#[derive(Debug)]
pub struct WholeLineTable {
    alpha: f64,
    a: f64,
    /// Angles `theta_i`, with `t = -a cos(theta)`.
    theta: Vec<f64>,
    /// Unnormalised CDF at `theta_i`.
    cdf: Vec<f64>,
    /// `dF/dtheta` at `theta_i`.
    slope: Vec<f64>,
}

impl WholeLineTable {
    /// Shared table for `alpha`, built on first use.
    pub fn get(alpha: f64) -> Result<Arc<WholeLineTable>> {
        check_whole_alpha(alpha)?;
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<WholeLineTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("table cache").get(&alpha.to_bits()) {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::build(alpha));
        cache
            .lock()
            .expect("table cache")
            .insert(alpha.to_bits(), table.clone());
        Ok(table)
    }

    fn build(alpha: f64) -> Self {
        let a = mrs_whole(alpha);
        let k = TABLE_PANELS;
        let theta: Vec<f64> = (0..=k).map(|i| PI * i as f64 / k as f64).collect();
        let dfdtheta = |th: f64| {
            let s = th.sin();
            whole_line_density_raw(alpha, a, -a * th.cos()) * a * s
        };
        let slope: Vec<f64> = theta.iter().map(|&th| dfdtheta(th)).collect();
        let (gx, gw) = gauss_legendre(8);
        let mut cdf = Vec::with_capacity(k + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..k {
            let (lo, hi) = (theta[i], theta[i + 1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let panel: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, w)| w * dfdtheta(mid + half * x))
                .sum();
            acc += panel * half;
            cdf.push(acc);
        }
        Self {
            alpha,
            a,
            theta,
            cdf,
            slope,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// MRS number of the unscaled measure.
    pub fn mrs(&self) -> f64 {
        self.a
    }

    /// Quadrature estimate of the total mass of the density (ideally 1).
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().expect("non-empty table")
    }

    /// Density of the unscaled measure at `t`.
    pub fn density(&self, t: f64) -> f64 {
        whole_line_density(self.alpha, t)
    }

    /// Normalised CDF at `t` from the interpolant.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= -self.a {
            return 0.0;
        }
        if t >= self.a {
            return 1.0;
        }
        let th = (-t / self.a).clamp(-1.0, 1.0).acos();
        let i = self.panel_of_theta(th);
        self.hermite(i, th) / self.total_mass()
    }

    fn panel_of_theta(&self, th: f64) -> usize {
        let h = PI / TABLE_PANELS as f64;
        ((th / h).floor() as usize).min(TABLE_PANELS - 1)
    }

    /// Monotone cubic Hermite interpolant of the CDF on panel `i`.
    fn hermite(&self, i: usize, th: f64) -> f64 {
        let (x0, x1) = (self.theta[i], self.theta[i + 1]);
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let h = x1 - x0;
        let (m0, m1) = self.limited_slopes(i);
        let s = (th - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1
    }

    // Fritsch-Carlson limiting keeps each panel monotone.
    fn limited_slopes(&self, i: usize) -> (f64, f64) {
        let h = self.theta[i + 1] - self.theta[i];
        let delta = (self.cdf[i + 1] - self.cdf[i]) / h;
        let (mut m0, mut m1) = (self.slope[i].max(0.0), self.slope[i + 1].max(0.0));
        if delta <= 0.0 {
            return (0.0, 0.0);
        }
        let (al, be) = (m0 / delta, m1 / delta);
        let r = al * al + be * be;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m0 = tau * al * delta;
            m1 = tau * be * delta;
        }
        (m0, m1)
    }

    /// Inverse CDF of the unscaled measure for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total_mass();
        let i = match self
            .cdf
            .binary_search_by(|v| v.partial_cmp(&target).expect("finite cdf"))
        {
            Ok(j) => return -self.a * self.theta[j].cos(),
            Err(j) => j.clamp(1, TABLE_PANELS) - 1,
        };
        let (mut lo, mut hi) = (self.theta[i], self.theta[i + 1]);
        let mut th = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.hermite(i, th) - target;
            if f > 0.0 {
                hi = th;
            } else {
                lo = th;
            }
            let (m0, m1) = self.limited_slopes(i);
            let s = (th - self.theta[i]) / (self.theta[i + 1] - self.theta[i]);
            let dy = self.cdf[i + 1] - self.cdf[i];
            let h = self.theta[i + 1] - self.theta[i];
            let deriv = (6.0 * s * s - 6.0 * s) * dy / h
                + (3.0 * s * s - 4.0 * s + 1.0) * m0
                + (3.0 * s * s - 2.0 * s) * m1;
            let mut next = if deriv > 0.0 { th - f / deriv } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - th).abs() <= 1e-15 * (1.0 + th.abs()) || hi - lo <= 1e-15 {
                th = next;
                break;
            }
            th = next;
        }
        -self.a * th.cos()
    }
}

fn q_prime(alpha: f64, u: f64) -> f64 {
    0.5 * alpha * u.signum() * u.abs().powf(alpha - 1.0)
}

fn q_second(alpha: f64, u: f64) -> f64 {
    0.5 * alpha * (alpha - 1.0) * u.abs().powf(alpha - 2.0)
}

/// Density of the unscaled equilibrium measure of `exp(-|z|^alpha / 2)`.
pub fn whole_line_density(alpha: f64, t: f64) -> f64 {
    let a = mrs_whole(alpha);
    whole_line_density_raw(alpha, a, t)
}

fn whole_line_density_raw(alpha: f64, a: f64, t: f64) -> f64 {
    if t.abs() >= a {
        return 0.0;
    }
    let qt = q_prime(alpha, t);
    let gap = 1e-7 * a;
    let quotient = |th: f64| {
        let u = a * th.cos();
        if (u - t).abs() < gap {
            q_second(alpha, 0.5 * (u + t))
        } else {
            (q_prime(alpha, u) - qt) / (u - t)
        }
    };
    // split where u = t and where u = 0 (kinks of the difference quotient)
    let th_t = (t / a).acos();
    let mut cuts = [0.0, th_t, 0.5 * PI, PI];
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let inner: f64 = cuts
        .windows(2)
        .map(|w| integrate(quotient, w[0], w[1], DENSITY_TOL))
        .sum();
    (a * a - t * t).sqrt() * inner / (PI * PI)
}
