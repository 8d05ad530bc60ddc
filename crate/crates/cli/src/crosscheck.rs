//! Numerical witness for a symbolic equivalence: integrate the source
//! system and the target system side by side with classical RK4 and
//! compare the target trajectory with the mapped source trajectory.

use jetfactor::equivalence::EquivMap;
use jetfactor::{RatFn, VarId};
use rand::Rng;
use thiserror::Error;

/// Steps per unit horizon.
pub const STEPS: usize = 1000;
/// Denominators smaller than this count as hitting the singular set.
pub const SINGULAR_THRESHOLD: f64 = 0.1;
pub const MAX_RESAMPLES: usize = 10;
const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrosscheckError {
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("trajectory stays near the singular set after {attempts} samples: {diagnosis}")]
    SingularTrajectory { attempts: usize, diagnosis: String },
    #[error("integration diverged at t = {t:.4}")]
    Diverged { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckOptions {
    pub horizon: f64,
    pub tol: f64,
    /// Controls forced through zero at mid-horizon.
    pub pinned: Vec<usize>,
}

impl Default for CrosscheckOptions {
    fn default() -> Self {
        CrosscheckOptions { horizon: 1.0, tol: 1e-6, pinned: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckReport {
    pub max_residual: f64,
    pub worst_time: f64,
    pub attempts: usize,
    pub passed: bool,
}

/// Cubic control with analytic derivatives.
#[derive(Clone, Debug)]
struct ControlPoly {
    coeffs: [f64; DEGREE + 1],
}

impl ControlPoly {
    fn sample<R: Rng>(rng: &mut R, pinned_at: Option<f64>) -> Self {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut coeffs = [0.0; DEGREE + 1];
        coeffs[0] = sign * rng.random_range(0.6..1.4);
        for c in coeffs.iter_mut().skip(1) {
            *c = rng.random_range(-0.3..0.3);
        }
        if let Some(t0) = pinned_at {
            // (t - t0)·(a + b t)
            let (a, b) = (coeffs[0], coeffs[1]);
            coeffs = [-t0 * a, a - t0 * b, b, 0.0];
        }
        ControlPoly { coeffs }
    }

    fn derivative(&self, t: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(order) {
            let falling: f64 = (k - order + 1..=k).map(|m| m as f64).product();
            acc += c * falling * t.powi((k - order) as i32);
        }
        acc
    }
}

fn eval(e: &RatFn, t: f64, x: &[f64], u: &[ControlPoly]) -> f64 {
    e.eval_float(&|v| match v {
        VarId::Time => t,
        VarId::State(i) => x[i as usize - 1],
        VarId::Control { order, index } => u[index as usize - 1].derivative(t, order as usize),
    })
}

fn den(e: &RatFn, t: f64, x: &[f64], u: &[ControlPoly]) -> f64 {
    e.den_float(&|v| match v {
        VarId::Time => t,
        VarId::State(i) => x[i as usize - 1],
        VarId::Control { order, index } => u[index as usize - 1].derivative(t, order as usize),
    })
}

/// Joint state `(x, y)`.
fn rhs(m: &EquivMap, t: f64, z: &[f64], u: &[ControlPoly]) -> Vec<f64> {
    let n = m.src.n();
    let (x, y) = z.split_at(n);
    let mut out: Vec<f64> = m.src.f().iter().map(|f| eval(f, t, x, u)).collect();
    let v: Vec<f64> = m.v.iter().map(|e| eval(e, t, x, u)).collect();
    out.extend(m.tgt.f().iter().map(|g| {
        g.eval_float(&|w| match w {
            VarId::Time => t,
            VarId::State(i) => y[i as usize - 1],
            VarId::Control { index, order: 0 } => v[index as usize - 1],
            VarId::Control { .. } => f64::NAN,
        })
    }));
    out
}

fn axpy(z: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    z.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Denominators that must stay away from zero along the trajectory.
fn guards(m: &EquivMap) -> Vec<RatFn> {
    let mut g: Vec<RatFn> = m.y.iter().chain(&m.v).chain(m.src.f()).filter(|e| !e.is_polynomial()).cloned().collect();
    g.dedup();
    g
}

enum Attempt {
    Done { max: f64, at: f64 },
    Singular(String),
    Diverged(f64),
}

fn attempt<R: Rng>(m: &EquivMap, opts: &CrosscheckOptions, rng: &mut R) -> Attempt {
    let (n, s) = (m.src.n(), m.src.s());
    let t_end = opts.horizon;
    let u: Vec<ControlPoly> = (1..=s)
        .map(|j| ControlPoly::sample(rng, opts.pinned.contains(&j).then_some(t_end / 2.0)))
        .collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let guards = guards(m);
    let tgt_guards: Vec<&RatFn> = m.tgt.f().iter().filter(|e| !e.is_polynomial()).collect();
    let singular = |t: f64, x: &[f64], y: &[f64]| -> Option<String> {
        for g in &guards {
            let d = den(g, t, x, &u);
            if d.abs() < SINGULAR_THRESHOLD {
                return Some(format!("denominator {} = {d:.3e} at t = {t:.4}", g.den()));
            }
        }
        if tgt_guards.is_empty() || y.is_empty() {
            return None;
        }
        let v: Vec<f64> = m.v.iter().map(|e| eval(e, t, x, &u)).collect();
        for g in &tgt_guards {
            let d = g.den_float(&|w| match w {
                VarId::Time => t,
                VarId::State(i) => y[i as usize - 1],
                VarId::Control { index, .. } => v[index as usize - 1],
            });
            if d.abs() < SINGULAR_THRESHOLD {
                return Some(format!("target denominator {} = {d:.3e} at t = {t:.4}", g.den()));
            }
        }
        None
    };
    let mapped = |t: f64, x: &[f64]| -> Vec<f64> { m.y.iter().map(|e| eval(e, t, x, &u)).collect() };

    if let Some(d) = singular(0.0, &x0, &[]) {
        return Attempt::Singular(d);
    }
    let mut z = x0.clone();
    z.extend(mapped(0.0, &x0));
    let h = t_end / STEPS as f64;
    let mut max = 0.0f64;
    let mut at = 0.0;
    for step in 0..STEPS {
        let t = step as f64 * h;
        for tt in [t, t + h / 2.0] {
            let probe = if tt == t { z.clone() } else { axpy(&z, h / 2.0, &rhs(m, t, &z, &u)) };
            if let Some(d) = singular(tt, &probe[..n], &probe[n..]) {
                return Attempt::Singular(d);
            }
        }
        let k1 = rhs(m, t, &z, &u);
        let k2 = rhs(m, t + h / 2.0, &axpy(&z, h / 2.0, &k1), &u);
        let k3 = rhs(m, t + h / 2.0, &axpy(&z, h / 2.0, &k2), &u);
        let k4 = rhs(m, t + h, &axpy(&z, h, &k3), &u);
        for i in 0..z.len() {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t1 = t + h;
        if z.iter().any(|v| !v.is_finite()) {
            return Attempt::Diverged(t1);
        }
        let want = mapped(t1, &z[..n]);
        for (a, b) in z[n..].iter().zip(&want) {
            let r = (a - b).abs();
            if r > max {
                max = r;
                at = t1;
            }
        }
    }
    Attempt::Done { max, at }
}

/// Integrate with seeded random controls, resampling when a trajectory
/// comes close to a recorded denominator.
pub fn numeric_crosscheck<R: Rng>(
    m: &EquivMap,
    opts: &CrosscheckOptions,
    rng: &mut R,
) -> Result<CrosscheckReport, CrosscheckError> {
    if opts.horizon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(CrosscheckError::BadHorizon(opts.horizon));
    }
    let mut last = String::new();
    for attempts in 1..=MAX_RESAMPLES {
        match attempt(m, opts, rng) {
            Attempt::Done { max, at } => {
                return Ok(CrosscheckReport { max_residual: max, worst_time: at, attempts, passed: max < opts.tol });
            }
            Attempt::Singular(d) => last = d,
            Attempt::Diverged(t) => return Err(CrosscheckError::Diverged { t }),
        }
    }
    Err(CrosscheckError::SingularTrajectory { attempts: MAX_RESAMPLES, diagnosis: last })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_derivatives() {
        let p = ControlPoly { coeffs: [1.0, 2.0, 3.0, 4.0] };
        assert_eq!(p.derivative(2.0, 0), 1.0 + 4.0 + 12.0 + 32.0);
        assert_eq!(p.derivative(2.0, 1), 2.0 + 12.0 + 48.0);
        assert_eq!(p.derivative(2.0, 3), 24.0);
        assert_eq!(p.derivative(2.0, 4), 0.0);
    }

    #[test]
    fn pinned_controls_vanish_mid_horizon() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = ControlPoly::sample(&mut rng, Some(0.5));
        assert!(p.derivative(0.5, 0).abs() < 1e-12);
    }

    use rand::SeedableRng;
}
