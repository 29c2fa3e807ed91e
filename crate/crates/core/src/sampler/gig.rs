//! Generalized inverse Gaussian and inverse-gamma variates.
//!
//! The GIG law used here has density proportional to
//! `x^(p-1) exp(-(a x + b / x) / 2)` on `x > 0`. The general case uses
//! Devroye's rejection sampler on the log scale, which has bounded expected
//! cost over the whole parameter range; the `a = 0` and `b = 0` boundaries
//! are sampled exactly as inverse-gamma and gamma laws.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// Inverse gamma with shape and rate: density ∝ x^(-shape-1) exp(-rate/x).
#[derive(Debug, Clone, Copy)]
pub struct InverseGamma {
    gamma: Gamma<f64>,
}

impl InverseGamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::Numeric(format!(
                "inverse gamma needs positive shape and rate, got ({shape}, {rate})"
            )));
        }
        let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Numeric(e.to_string()))?;
        Ok(InverseGamma { gamma })
    }
}

impl Distribution<f64> for InverseGamma {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        1.0 / self.gamma.sample(rng)
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Gamma(Gamma<f64>),
    InverseGamma(InverseGamma),
    Devroye(Devroye),
}

/// GIG(p, a, b).
#[derive(Debug, Clone, Copy)]
pub struct Gig {
    p: f64,
    a: f64,
    b: f64,
    kind: Kind,
}

impl Gig {
    pub fn new(p: f64, a: f64, b: f64) -> Result<Self> {
        if !(p.is_finite() && a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
            return Err(Error::Numeric(format!("invalid GIG parameters ({p}, {a}, {b})")));
        }
        let kind = if b == 0.0 {
            if !(p > 0.0 && a > 0.0) {
                return Err(Error::Numeric(format!("GIG({p}, {a}, 0) is improper")));
            }
            Kind::Gamma(Gamma::new(p, 2.0 / a).map_err(|e| Error::Numeric(e.to_string()))?)
        } else if a == 0.0 {
            if p >= 0.0 {
                return Err(Error::Numeric(format!("GIG({p}, 0, {b}) is improper")));
            }
            Kind::InverseGamma(InverseGamma::new(-p, b / 2.0)?)
        } else {
            Kind::Devroye(Devroye::new(p, a, b))
        };
        Ok(Gig { p, a, b, kind })
    }

    pub fn params(&self) -> (f64, f64, f64) {
        (self.p, self.a, self.b)
    }
}

impl Distribution<f64> for Gig {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::Gamma(g) => g.sample(rng),
            Kind::InverseGamma(ig) => ig.sample(rng),
            Kind::Devroye(d) => d.sample(rng),
        }
    }
}

/// Rejection sampler for the two-parameter form GIG(lambda, omega) with
/// density ∝ y^(lambda-1) exp(-omega (y + 1/y) / 2), lambda >= 0, mapped
/// back to (p, a, b) by reciprocal and scale.
#[derive(Debug, Clone, Copy)]
struct Devroye {
    lambda: f64,
    alpha: f64,
    invert: bool,
    /// sqrt(b/a), applied after the reciprocal.
    scale: f64,
    /// Maps the log-scale variate back: y = center * e^x.
    center: f64,
    t: f64,
    s: f64,
    eta: f64,
    zeta: f64,
    theta: f64,
    xi: f64,
    p: f64,
    r: f64,
    t_flat: f64,
    s_flat: f64,
    q: f64,
}

/// Log target on the shifted log scale, maximal (zero) at x = 0.
#[inline]
fn log_density(alpha: f64, lambda: f64, x: f64) -> f64 {
    let half = (0.5 * x).sinh();
    -alpha * 2.0 * half * half - lambda * (x.exp_m1() - x)
}

impl Devroye {
    fn new(p: f64, a: f64, b: f64) -> Self {
        let lambda = p.abs();
        let omega = (a * b).sqrt();
        let root = lambda.hypot(omega);
        let alpha = omega * omega / (root + lambda);

        let psi = |x: f64| log_density(alpha, lambda, x);
        let dpsi = |x: f64| -alpha * x.sinh() - lambda * x.exp_m1();

        let f1 = -psi(1.0);
        let t = if (0.5..=2.0).contains(&f1) {
            1.0
        } else if f1 > 2.0 {
            (2.0 / (alpha + lambda)).sqrt()
        } else {
            (4.0 / (alpha + 2.0 * lambda)).ln()
        };
        let g1 = -psi(-1.0);
        let s = if (0.5..=2.0).contains(&g1) {
            1.0
        } else if g1 > 2.0 {
            (4.0 / (alpha * 1f64.cosh() + lambda)).sqrt()
        } else {
            let inv = 1.0 / alpha;
            let tail = (1.0 + inv + (inv * inv + 2.0 * inv).sqrt()).ln();
            if lambda > 0.0 {
                tail.min(1.0 / lambda)
            } else {
                tail
            }
        };
        let eta = -psi(t);
        let zeta = -dpsi(t);
        let theta = -psi(-s);
        let xi = dpsi(-s);
        let p_left = 1.0 / xi;
        let r_right = 1.0 / zeta;
        let t_flat = t - r_right * eta;
        let s_flat = s - p_left * theta;
        Devroye {
            lambda,
            alpha,
            invert: p < 0.0,
            scale: (b / a).sqrt(),
            center: lambda / omega + (1.0 + (lambda / omega).powi(2)).sqrt(),
            t,
            s,
            eta,
            zeta,
            theta,
            xi,
            p: p_left,
            r: r_right,
            t_flat,
            s_flat,
            q: t_flat + s_flat,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.p + self.q + self.r;
        let x = loop {
            let u: f64 = rng.random();
            let v: f64 = 1.0 - rng.random::<f64>();
            let w: f64 = 1.0 - rng.random::<f64>();
            let (x, log_hat) = if u * total < self.q {
                (-self.s_flat + self.q * v, 0.0)
            } else if u * total < self.q + self.r {
                let x = self.t_flat - self.r * v.ln();
                (x, -self.eta - self.zeta * (x - self.t))
            } else {
                let x = -self.s_flat + self.p * v.ln();
                (x, -self.theta + self.xi * (x + self.s))
            };
            if w.ln() + log_hat <= log_density(self.alpha, self.lambda, x) {
                break x;
            }
        };
        let y = self.center * x.exp();
        let y = if self.invert { 1.0 / y } else { y };
        self.scale * y
    }
}
