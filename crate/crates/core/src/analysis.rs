use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::collections::BTreeMap;

/// A measured sweep: x values, success frequencies, their one-sigma errors
/// and the shot count behind each point.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Vec<f64>,
    pub shots: Vec<u64>,
}

impl Curve {
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_err: Vec<f64>, shots: Vec<u64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != y_err.len() || x.len() != shots.len() {
            return Err(Error::FitInput(format!(
                "column lengths differ: x {}, y {}, y_err {}, shots {}",
                x.len(),
                y.len(),
                y_err.len(),
                shots.len()
            )));
        }
        for (i, &xi) in x.iter().enumerate() {
            if !xi.is_finite() || !y[i].is_finite() || !y_err[i].is_finite() || y_err[i] < 0.0 {
                return Err(Error::FitInput(format!("non-finite entry at row {i}")));
            }
        }
        Ok(Curve { x, y, y_err, shots })
    }

    /// Binomial success curve. The error bar is the binomial standard error
    /// floored at 0.05/sqrt(shots) so later weighted fits never divide by
    /// zero at saturated points.
    pub fn from_counts(x: Vec<f64>, successes: &[u64], shots_per_point: u64) -> Result<Self> {
        if successes.len() != x.len() {
            return Err(Error::FitInput(format!(
                "{} x values but {} counts",
                x.len(),
                successes.len()
            )));
        }
        if shots_per_point == 0 {
            return Err(Error::FitInput("shots_per_point is zero".into()));
        }
        let n = shots_per_point as f64;
        let mut y = Vec::with_capacity(x.len());
        let mut y_err = Vec::with_capacity(x.len());
        for &k in successes {
            if k > shots_per_point {
                return Err(Error::FitInput(format!(
                    "count {k} exceeds shots {shots_per_point}"
                )));
            }
            let p = k as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt().max(0.05 / n.sqrt());
            y.push(p);
            y_err.push(se);
        }
        let shots = vec![shots_per_point; x.len()];
        Curve::new(x, y, y_err, shots)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn check_unit_interval(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            name,
            value: p,
            domain: "[0, 1]",
        });
    }
    Ok(())
}

/// Success probability of the three-qubit repetition code under independent
/// per-qubit flips: at most one error out of three.
pub fn gamma_ideal(p: f64) -> Result<f64> {
    check_unit_interval("p", p)?;
    Ok(1.0 - 3.0 * p * p + 2.0 * p * p * p)
}

/// Uncorrected single-qubit reference.
pub fn gamma_linear(p: f64) -> Result<f64> {
    check_unit_interval("p", p)?;
    Ok(1.0 - p)
}

/// Visibility, offset and asymmetry of the measured success curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaModelParams {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
}

impl GammaModelParams {
    /// Published fit values for the reference dataset.
    pub fn reference() -> Self {
        GammaModelParams {
            a: 0.272,
            b: 0.394,
            epsilon: 0.37,
        }
    }
}

fn gamma_model_eval(p: f64, a: f64, b: f64, epsilon: f64) -> f64 {
    let p2 = p * p;
    let p3 = p2 * p;
    b + a * (0.95 - 1.73 * epsilon * p - 2.79 * p2 + 3.9 * epsilon * p2 + 1.86 * p3
        - 2.17 * epsilon * p3)
}

/// Success-probability model with visibility a, offset b and an asymmetry
/// term proportional to epsilon.
pub fn gamma_model(p: f64, params: &GammaModelParams) -> Result<f64> {
    check_unit_interval("p", p)?;
    Ok(gamma_model_eval(p, params.a, params.b, params.epsilon))
}

/// The epsilon = 0 model equals b + a*(0.93*gamma_ideal + 0.02); this applies
/// the same affine visibility map to the uncorrected linear reference.
pub fn visibility_baseline(p: f64, params: &GammaModelParams) -> Result<f64> {
    check_unit_interval("p", p)?;
    Ok(params.b + params.a * (0.93 * (1.0 - p) + 0.02))
}

/// Flip probability below which the corrected model beats the
/// visibility-matched uncorrected reference, found by bisection on (lo, hi).
pub fn improvement_crossing(params: &GammaModelParams, lo: f64, hi: f64) -> Result<f64> {
    check_unit_interval("lo", lo)?;
    check_unit_interval("hi", hi)?;
    if lo >= hi {
        return Err(Error::Domain {
            name: "lo",
            value: lo,
            domain: "[0, hi)",
        });
    }
    let diff = |p: f64| {
        gamma_model_eval(p, params.a, params.b, params.epsilon)
            - (params.b + params.a * (0.93 * (1.0 - p) + 0.02))
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (diff(a), diff(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoCrossing { lo, hi });
    }
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let fm = diff(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Decay and fringe model families for [`fit_decay`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    /// y = y_inf + A exp(-(x/tau)^2)
    Gaussian,
    /// y = y_inf + A exp(-x/tau)
    Exponential,
    /// y = y0 + A cos(x + phi0)
    Sinusoid,
}

impl DecayModel {
    fn name(self) -> &'static str {
        match self {
            DecayModel::Gaussian => "gaussian_decay",
            DecayModel::Exponential => "exponential_decay",
            DecayModel::Sinusoid => "sinusoid",
        }
    }

    fn param_names(self) -> [&'static str; 3] {
        match self {
            DecayModel::Gaussian | DecayModel::Exponential => ["y_inf", "amplitude", "tau"],
            DecayModel::Sinusoid => ["y0", "amplitude", "phi0"],
        }
    }

    fn eval(self, x: f64, p: &[f64]) -> f64 {
        match self {
            DecayModel::Gaussian => p[0] + p[1] * (-(x / p[2]).powi(2)).exp(),
            DecayModel::Exponential => p[0] + p[1] * (-x / p[2]).exp(),
            DecayModel::Sinusoid => p[0] + p[1] * (x + p[2]).cos(),
        }
    }

    fn grad(self, x: f64, p: &[f64], out: &mut [f64]) {
        match self {
            DecayModel::Gaussian => {
                let e = (-(x / p[2]).powi(2)).exp();
                out[0] = 1.0;
                out[1] = e;
                out[2] = p[1] * e * 2.0 * x * x / (p[2] * p[2] * p[2]);
            }
            DecayModel::Exponential => {
                let e = (-x / p[2]).exp();
                out[0] = 1.0;
                out[1] = e;
                out[2] = p[1] * e * x / (p[2] * p[2]);
            }
            DecayModel::Sinusoid => {
                out[0] = 1.0;
                out[1] = (x + p[2]).cos();
                out[2] = -p[1] * (x + p[2]).sin();
            }
        }
    }
}

/// Fit output: estimates and standard errors keyed by parameter name, the
/// minimized weighted residual sum, and whether the solver converged.
#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub rss: f64,
    pub converged: bool,
    pub n_points: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::FitInput(format!("no fitted parameter named {name}")))
    }

    pub fn stderr_of(&self, name: &str) -> Result<f64> {
        self.stderr
            .get(name)
            .copied()
            .ok_or_else(|| Error::FitInput(format!("no fitted parameter named {name}")))
    }
}

const GN_MAX_ITER: usize = 200;
const GN_REL_TOL: f64 = 1e-9;

struct GnProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

/// Weights are 1/y_err^2 when every error bar is positive, uniform otherwise.
fn make_weights(curve: &Curve) -> Vec<f64> {
    if curve.y_err.iter().all(|&e| e > 0.0) {
        curve.y_err.iter().map(|&e| 1.0 / (e * e)).collect()
    } else {
        vec![1.0; curve.len()]
    }
}

fn check_contrast(curve: &Curve) -> Result<()> {
    let max = curve.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let contrast = max - min;
    let mean_err = curve.y_err.iter().sum::<f64>() / curve.len() as f64;
    if contrast < 5.0 * mean_err {
        return Err(Error::FitContrast { contrast, mean_err });
    }
    Ok(())
}

/// Solves the k-by-k system m * out = rhs by Gaussian elimination with
/// partial pivoting; m is given row-major and is destroyed.
fn solve_dense(m: &mut [f64], rhs: &mut [f64], k: usize) -> Result<Vec<f64>> {
    for col in 0..k {
        let mut pivot_row = col;
        let mut pivot = m[col * k + col].abs();
        for row in col + 1..k {
            let v = m[row * k + col].abs();
            if v > pivot {
                pivot = v;
                pivot_row = row;
            }
        }
        if !pivot.is_finite() || pivot < 1e-300 {
            return Err(Error::DegenerateFit(
                "singular curvature matrix".into(),
            ));
        }
        if pivot_row != col {
            for j in 0..k {
                m.swap(col * k + j, pivot_row * k + j);
            }
            rhs.swap(col, pivot_row);
        }
        for row in col + 1..k {
            let f = m[row * k + col] / m[col * k + col];
            if f == 0.0 {
                continue;
            }
            for j in col..k {
                m[row * k + j] -= f * m[col * k + j];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut out = vec![0.0; k];
    for col in (0..k).rev() {
        let mut acc = rhs[col];
        for j in col + 1..k {
            acc -= m[col * k + j] * out[j];
        }
        out[col] = acc / m[col * k + col];
    }
    Ok(out)
}

fn chi_squared<F: Fn(f64, &[f64]) -> f64>(prob: &GnProblem, eval: &F, p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..prob.x.len() {
        let r = prob.y[i] - eval(prob.x[i], p);
        acc += prob.w[i] * r * r;
    }
    acc
}

struct GnOutcome {
    params: Vec<f64>,
    stderr: Vec<f64>,
    rss: f64,
    converged: bool,
}

/// Damped Gauss-Newton: solves (J^T W J + lambda diag) delta = J^T W r,
/// growing lambda until a step reduces chi^2.
fn gauss_newton<F, G>(prob: &GnProblem, init: &[f64], eval: F, grad: G) -> Result<GnOutcome>
where
    F: Fn(f64, &[f64]) -> f64,
    G: Fn(f64, &[f64], &mut [f64]),
{
    let k = init.len();
    let n = prob.x.len();
    let mut params = init.to_vec();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut chi2 = chi_squared(prob, &eval, &params);
    let mut g = vec![0.0; k];
    for _ in 0..GN_MAX_ITER {
        let mut jtj = vec![0.0; k * k];
        let mut jtr = vec![0.0; k];
        for i in 0..n {
            grad(prob.x[i], &params, &mut g);
            let r = prob.y[i] - eval(prob.x[i], &params);
            let w = prob.w[i];
            for a in 0..k {
                jtr[a] += w * g[a] * r;
                for b in 0..k {
                    jtj[a * k + b] += w * g[a] * g[b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for a in 0..k {
                m[a * k + a] += lambda * jtj[a * k + a].max(1e-300);
            }
            let mut rhs = jtr.clone();
            let delta = solve_dense(&mut m, &mut rhs, k)?;
            let candidate: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p + d).collect();
            let chi2_new = chi_squared(prob, &eval, &candidate);
            if chi2_new.is_finite() && chi2_new <= chi2 + 1e-30 {
                let rel = delta
                    .iter()
                    .zip(&params)
                    .map(|(d, p)| d.abs() / p.abs().max(1e-12))
                    .fold(0.0, f64::max);
                params = candidate;
                chi2 = chi2_new;
                lambda = (lambda / 10.0).max(1e-14);
                accepted = true;
                if rel < GN_REL_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted || converged {
            converged = converged || !accepted && chi2 == 0.0;
            break;
        }
    }
    // Standard errors from the undamped curvature at the optimum, scaled by
    // the residual variance.
    let mut jtj = vec![0.0; k * k];
    for i in 0..n {
        grad(prob.x[i], &params, &mut g);
        let w = prob.w[i];
        for a in 0..k {
            for b in 0..k {
                jtj[a * k + b] += w * g[a] * g[b];
            }
        }
    }
    let s2 = if n > k { chi2 / (n - k) as f64 } else { 1.0 };
    let mut stderr = vec![0.0; k];
    for a in 0..k {
        let mut rhs = vec![0.0; k];
        rhs[a] = 1.0;
        let mut m = jtj.clone();
        match solve_dense(&mut m, &mut rhs, k) {
            Ok(col) => stderr[a] = (col[a].max(0.0) * s2).sqrt(),
            Err(_) => stderr[a] = f64::NAN,
        }
    }
    if stderr.iter().any(|s| s.is_nan()) {
        return Err(Error::DegenerateFit(
            "curvature not invertible at the optimum".into(),
        ));
    }
    Ok(GnOutcome {
        params,
        stderr,
        rss: chi2,
        converged,
    })
}

fn initial_decay_guess(curve: &Curve, model: DecayModel) -> Vec<f64> {
    let n = curve.len();
    match model {
        DecayModel::Gaussian | DecayModel::Exponential => {
            let y_inf = curve.y[n - 1];
            let amp = curve.y[0] - y_inf;
            let target = amp.abs() / std::f64::consts::E;
            let mut tau = (curve.x[n - 1] - curve.x[0]).abs() / 2.0;
            for i in 0..n {
                if (curve.y[i] - y_inf).abs() <= target && curve.x[i] > curve.x[0] {
                    tau = curve.x[i] - curve.x[0];
                    break;
                }
            }
            if !(tau > 0.0) {
                tau = 1.0;
            }
            vec![y_inf, amp, tau]
        }
        DecayModel::Sinusoid => {
            let mean = curve.y.iter().sum::<f64>() / n as f64;
            let max = curve.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = curve.y.iter().cloned().fold(f64::INFINITY, f64::min);
            let amp = (max - min) / 2.0;
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..16 {
                let phi = -std::f64::consts::PI + i as f64 * std::f64::consts::TAU / 16.0;
                let chi: f64 = curve
                    .x
                    .iter()
                    .zip(&curve.y)
                    .map(|(&x, &y)| {
                        let r = y - (mean + amp * (x + phi).cos());
                        r * r
                    })
                    .sum();
                if chi < best.0 {
                    best = (chi, phi);
                }
            }
            vec![mean, amp, best.1]
        }
    }
}

fn build_result(
    model_name: &str,
    names: [&'static str; 3],
    outcome: GnOutcome,
    n_points: usize,
) -> FitResult {
    let mut params = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        params.insert((*name).to_string(), outcome.params[i]);
        stderr.insert((*name).to_string(), outcome.stderr[i]);
    }
    FitResult {
        model: model_name.to_string(),
        params,
        stderr,
        rss: outcome.rss,
        converged: outcome.converged,
        n_points,
    }
}

/// Fits a decay or fringe model. Weighted by 1/y_err^2 when all error bars
/// are positive; sinusoid amplitudes are normalized to be positive.
pub fn fit_decay(curve: &Curve, model: DecayModel) -> Result<FitResult> {
    if curve.len() < 5 {
        return Err(Error::FitInput(format!(
            "need at least 5 points, got {}",
            curve.len()
        )));
    }
    check_contrast(curve)?;
    let prob = GnProblem {
        x: &curve.x,
        y: &curve.y,
        w: make_weights(curve),
    };
    let init = initial_decay_guess(curve, model);
    let mut outcome = gauss_newton(
        &prob,
        &init,
        |x, p| model.eval(x, p),
        |x, p, out| model.grad(x, p, out),
    )?;
    match model {
        DecayModel::Gaussian => outcome.params[2] = outcome.params[2].abs(),
        DecayModel::Exponential => {}
        DecayModel::Sinusoid => {
            if outcome.params[1] < 0.0 {
                outcome.params[1] = -outcome.params[1];
                outcome.params[2] += std::f64::consts::PI;
            }
            outcome.params[2] = crate::gates::wrap_phase(outcome.params[2]);
        }
    }
    Ok(build_result(
        model.name(),
        model.param_names(),
        outcome,
        curve.len(),
    ))
}

fn gamma_grad(x: f64, p: &[f64], out: &mut [f64]) {
    let (a, _b, eps) = (p[0], p[1], p[2]);
    let x2 = x * x;
    let x3 = x2 * x;
    out[0] = 0.95 - 1.73 * eps * x - 2.79 * x2 + 3.9 * eps * x2 + 1.86 * x3 - 2.17 * eps * x3;
    out[1] = 1.0;
    out[2] = a * (-1.73 * x + 3.9 * x2 - 2.17 * x3);
}

/// Fits (a, b, epsilon) of [`gamma_model`] to a success curve by weighted
/// damped Gauss-Newton.
pub fn fit_gamma_model(curve: &Curve, initial: &GammaModelParams) -> Result<FitResult> {
    if curve.len() < 6 {
        return Err(Error::FitInput(format!(
            "need at least 6 points, got {}",
            curve.len()
        )));
    }
    for (i, &e) in curve.y_err.iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::FitInput(format!("y_err must be positive (row {i})")));
        }
    }
    for &x in &curve.x {
        check_unit_interval("p", x)?;
    }
    check_contrast(curve)?;
    let prob = GnProblem {
        x: &curve.x,
        y: &curve.y,
        w: make_weights(curve),
    };
    let init = [initial.a, initial.b, initial.epsilon];
    let outcome = gauss_newton(
        &prob,
        &init,
        |x, p| gamma_model_eval(x, p[0], p[1], p[2]),
        gamma_grad,
    )?;
    Ok(build_result(
        "gamma_model",
        ["a", "b", "epsilon"],
        outcome,
        curve.len(),
    ))
}

/// Parametric bootstrap cross-check of [`fit_gamma_model`] standard errors:
/// resamples each point from a normal with its error bar, refits, and
/// reports the standard deviation of each recovered parameter.
pub fn bootstrap_gamma_stderr(
    curve: &Curve,
    initial: &GammaModelParams,
    n_resamples: usize,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    if n_resamples < 2 {
        return Err(Error::FitInput("need at least 2 resamples".into()));
    }
    let base = fit_gamma_model(curve, initial)?;
    let center = GammaModelParams {
        a: base.param("a")?,
        b: base.param("b")?,
        epsilon: base.param("epsilon")?,
    };
    let fitted: Vec<f64> = curve
        .x
        .iter()
        .map(|&p| gamma_model_eval(p, center.a, center.b, center.epsilon))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<[f64; 3]> = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        let mut resampled = curve.clone();
        for i in 0..curve.len() {
            let dist = Normal::new(fitted[i], curve.y_err[i])
                .map_err(|e| Error::FitInput(format!("bad error bar: {e}")))?;
            resampled.y[i] = dist.sample(&mut rng);
        }
        if let Ok(fit) = fit_gamma_model(&resampled, &center) {
            if fit.converged {
                samples.push([
                    fit.param("a")?,
                    fit.param("b")?,
                    fit.param("epsilon")?,
                ]);
            }
        }
    }
    if samples.len() < n_resamples / 2 {
        return Err(Error::DegenerateFit(format!(
            "only {} of {} bootstrap refits converged",
            samples.len(),
            n_resamples
        )));
    }
    let mut out = BTreeMap::new();
    for (idx, name) in ["a", "b", "epsilon"].iter().enumerate() {
        let mean = samples.iter().map(|s| s[idx]).sum::<f64>() / samples.len() as f64;
        let var = samples
            .iter()
            .map(|s| (s[idx] - mean).powi(2))
            .sum::<f64>()
            / (samples.len() - 1) as f64;
        out.insert((*name).to_string(), var.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::Binomial;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn gamma_ideal_examples() {
        assert_eq!(gamma_ideal(0.0).unwrap(), 1.0);
        assert!((gamma_ideal(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(gamma_ideal(1.0).unwrap().abs() < 1e-12);
        assert!(gamma_ideal(-0.1).is_err());
        assert!(gamma_ideal(1.1).is_err());
    }

    #[test]
    fn gamma_ideal_point_symmetry() {
        for &p in grid(41).iter() {
            let s = gamma_ideal(p).unwrap() + gamma_ideal(1.0 - p).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corrected_beats_linear_below_half() {
        for i in 1..50 {
            let p = i as f64 / 100.0;
            // difference factors as p(1-p)(1-2p), positive on (0, 0.5)
            let diff = gamma_ideal(p).unwrap() - gamma_linear(p).unwrap();
            let factored = p * (1.0 - p) * (1.0 - 2.0 * p);
            assert!((diff - factored).abs() < 1e-12);
            assert!(diff > 0.0);
        }
    }

    #[test]
    fn gamma_model_reference_value_at_zero() {
        let v = gamma_model(0.0, &GammaModelParams::reference()).unwrap();
        assert!((v - 0.6524).abs() < 1e-12);
    }

    #[test]
    fn gamma_model_constant_when_a_zero() {
        let params = GammaModelParams {
            a: 0.0,
            b: 0.41,
            epsilon: 0.7,
        };
        for &p in grid(11).iter() {
            assert!((gamma_model(p, &params).unwrap() - 0.41).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_model_is_affine_in_ideal_curve() {
        // with epsilon = 0 the polynomial equals 0.93*gamma_ideal + 0.02
        let params = GammaModelParams {
            a: 0.3,
            b: 0.4,
            epsilon: 0.0,
        };
        let mut max_resid: f64 = 0.0;
        for &p in grid(101).iter() {
            let lhs = gamma_model(p, &params).unwrap();
            let rhs = 0.4 + 0.3 * (0.93 * gamma_ideal(p).unwrap() + 0.02);
            max_resid = max_resid.max((lhs - rhs).abs());
        }
        assert!(max_resid < 1e-12, "residual {max_resid}");
    }

    #[test]
    fn symmetric_model_even_part_vanishes() {
        let params = GammaModelParams {
            a: 0.272,
            b: 0.394,
            epsilon: 0.0,
        };
        let mid = gamma_model(0.5, &params).unwrap();
        for &p in grid(101).iter() {
            let even =
                (gamma_model(p, &params).unwrap() + gamma_model(1.0 - p, &params).unwrap()) / 2.0
                    - mid;
            assert!(even.abs() < 0.02 * params.a);
            assert!(even.abs() < 1e-12);
        }
    }

    #[test]
    fn reference_crossing_location() {
        let p = improvement_crossing(&GammaModelParams::reference(), 0.01, 0.5).unwrap();
        assert!((0.25..=0.29).contains(&p), "crossing at {p}");
    }

    #[test]
    fn crossing_requires_sign_change() {
        let params = GammaModelParams {
            a: 0.3,
            b: 0.4,
            epsilon: 0.0,
        };
        // epsilon = 0: model minus baseline is positive on all of (0, 0.5)
        assert!(matches!(
            improvement_crossing(&params, 0.01, 0.45),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn from_counts_floors_error_bars() {
        let c = Curve::from_counts(vec![0.0, 1.0], &[10_000, 5_000], 10_000).unwrap();
        assert_eq!(c.y[0], 1.0);
        assert!((c.y_err[0] - 0.05 / 100.0).abs() < 1e-15);
        assert!((c.y_err[1] - 0.005).abs() < 1e-5);
        assert!(Curve::from_counts(vec![0.0], &[2], 1).is_err());
    }

    fn synthetic_decay(model: DecayModel, p: &[f64], xs: &[f64]) -> Curve {
        let y: Vec<f64> = xs.iter().map(|&x| model.eval(x, p)).collect();
        Curve::new(xs.to_vec(), y, vec![0.0; xs.len()], vec![1; xs.len()]).unwrap()
    }

    #[test]
    fn gaussian_noiseless_round_trip() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        let truth = [0.5, 0.5, 0.28];
        let curve = synthetic_decay(DecayModel::Gaussian, &truth, &xs);
        let fit = fit_decay(&curve, DecayModel::Gaussian).unwrap();
        assert!(fit.converged);
        assert!(fit.rss < 1e-12);
        assert!((fit.param("tau").unwrap() / 0.28 - 1.0).abs() < 1e-6);
        assert!((fit.param("y_inf").unwrap() - 0.5).abs() < 1e-6);
        assert!((fit.param("amplitude").unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn exponential_noiseless_round_trip() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.4).collect();
        let truth = [0.5, 0.5, 2.72];
        let curve = synthetic_decay(DecayModel::Exponential, &truth, &xs);
        let fit = fit_decay(&curve, DecayModel::Exponential).unwrap();
        assert!(fit.converged);
        assert!((fit.param("tau").unwrap() / 2.72 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sinusoid_round_trip_normalizes_amplitude() {
        let xs: Vec<f64> = (0..24)
            .map(|i| -std::f64::consts::PI + i as f64 * std::f64::consts::TAU / 24.0)
            .collect();
        let truth = [0.5, -0.45, 0.8];
        let curve = synthetic_decay(DecayModel::Sinusoid, &truth, &xs);
        let fit = fit_decay(&curve, DecayModel::Sinusoid).unwrap();
        assert!(fit.converged);
        let amp = fit.param("amplitude").unwrap();
        let phi = fit.param("phi0").unwrap();
        assert!(amp > 0.0);
        // -0.45 cos(x + 0.8) = 0.45 cos(x + 0.8 - pi)
        assert!((amp - 0.45).abs() < 1e-6);
        assert!(
            (crate::gates::wrap_phase(phi - (0.8 - std::f64::consts::PI))).abs() < 1e-6,
            "phi0 {phi}"
        );
    }

    #[test]
    fn fit_preconditions() {
        let c = Curve::new(
            vec![0.0, 0.1, 0.2, 0.3],
            vec![1.0, 0.9, 0.8, 0.7],
            vec![0.01; 4],
            vec![100; 4],
        )
        .unwrap();
        assert!(matches!(
            fit_decay(&c, DecayModel::Gaussian),
            Err(Error::FitInput(_))
        ));
        let six = Curve::new(
            grid(6),
            vec![0.6, 0.6, 0.5, 0.5, 0.4, 0.4],
            vec![0.0; 6],
            vec![100; 6],
        )
        .unwrap();
        assert!(matches!(
            fit_gamma_model(&six, &GammaModelParams::reference()),
            Err(Error::FitInput(_))
        ));
    }

    #[test]
    fn flat_curve_fails_contrast_check() {
        let c = Curve::new(
            (0..10).map(|i| i as f64).collect(),
            vec![0.5; 10],
            vec![0.01; 10],
            vec![100; 10],
        )
        .unwrap();
        assert!(matches!(
            fit_decay(&c, DecayModel::Sinusoid),
            Err(Error::FitContrast { .. })
        ));
    }

    #[test]
    fn flat_noiseless_curve_is_degenerate() {
        let c = Curve::new(
            (0..10).map(|i| i as f64).collect(),
            vec![0.5; 10],
            vec![0.0; 10],
            vec![100; 10],
        )
        .unwrap();
        assert!(matches!(
            fit_decay(&c, DecayModel::Gaussian),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn gamma_noiseless_round_trip() {
        let truth = GammaModelParams::reference();
        let xs = grid(11);
        let y: Vec<f64> = xs.iter().map(|&p| gamma_model(p, &truth).unwrap()).collect();
        let curve = Curve::new(xs.clone(), y, vec![1e-3; 11], vec![10_000; 11]).unwrap();
        let fit = fit_gamma_model(
            &curve,
            &GammaModelParams {
                a: 0.35,
                b: 0.3,
                epsilon: 0.1,
            },
        )
        .unwrap();
        assert!(fit.converged);
        assert!((fit.param("a").unwrap() - truth.a).abs() < 1e-7);
        assert!((fit.param("b").unwrap() - truth.b).abs() < 1e-7);
        assert!((fit.param("epsilon").unwrap() - truth.epsilon).abs() < 1e-6);
    }

    #[test]
    fn gamma_noisy_round_trip_within_errors() {
        let truth = GammaModelParams::reference();
        let xs = grid(11);
        let shots = 10_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let counts: Vec<u64> = xs
            .iter()
            .map(|&p| {
                let prob = gamma_model(p, &truth).unwrap();
                Binomial::new(shots, prob).unwrap().sample(&mut rng)
            })
            .collect();
        let curve = Curve::from_counts(xs, &counts, shots).unwrap();
        let fit = fit_gamma_model(
            &curve,
            &GammaModelParams {
                a: 0.3,
                b: 0.35,
                epsilon: 0.2,
            },
        )
        .unwrap();
        assert!(fit.converged);
        for (name, want) in [("a", truth.a), ("b", truth.b), ("epsilon", truth.epsilon)] {
            let got = fit.param(name).unwrap();
            let se = fit.stderr_of(name).unwrap();
            assert!(
                (got - want).abs() < 3.0 * se,
                "{name}: got {got}, want {want}, se {se}"
            );
        }
    }

    #[test]
    fn bootstrap_agrees_with_curvature_errors() {
        let truth = GammaModelParams::reference();
        let xs = grid(11);
        let shots = 10_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let counts: Vec<u64> = xs
            .iter()
            .map(|&p| {
                let prob = gamma_model(p, &truth).unwrap();
                Binomial::new(shots, prob).unwrap().sample(&mut rng)
            })
            .collect();
        let curve = Curve::from_counts(xs, &counts, shots).unwrap();
        let init = GammaModelParams {
            a: 0.3,
            b: 0.35,
            epsilon: 0.2,
        };
        let fit = fit_gamma_model(&curve, &init).unwrap();
        let boot = bootstrap_gamma_stderr(&curve, &init, 200, 7).unwrap();
        for name in ["a", "b", "epsilon"] {
            let curv = fit.stderr_of(name).unwrap();
            let bs = boot[name];
            assert!(
                bs / curv < 3.0 && curv / bs < 3.0,
                "{name}: curvature {curv} bootstrap {bs}"
            );
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let models = [
            DecayModel::Gaussian,
            DecayModel::Exponential,
            DecayModel::Sinusoid,
        ];
        for model in models {
            for _ in 0..20 {
                let p = [
                    rng.random_range(0.2..0.8),
                    rng.random_range(0.2..0.8),
                    rng.random_range(0.5..2.0),
                ];
                let x: f64 = rng.random_range(0.1..2.0);
                let mut g = [0.0; 3];
                model.grad(x, &p, &mut g);
                for i in 0..3 {
                    let h = 1e-6 * p[i].abs().max(1e-3);
                    let mut hi = p;
                    hi[i] += h;
                    let mut lo = p;
                    lo[i] -= h;
                    let fd = (model.eval(x, &hi) - model.eval(x, &lo)) / (2.0 * h);
                    let scale = g[i].abs().max(fd.abs()).max(1e-6);
                    assert!(
                        ((g[i] - fd) / scale).abs() < 1e-5,
                        "{model:?} param {i}: analytic {} fd {}",
                        g[i],
                        fd
                    );
                }
            }
        }
        for _ in 0..20 {
            let p = [
                rng.random_range(0.1..0.5),
                rng.random_range(0.2..0.6),
                rng.random_range(0.0..0.8),
            ];
            let x: f64 = rng.random_range(0.0..1.0);
            let mut g = [0.0; 3];
            gamma_grad(x, &p, &mut g);
            for i in 0..3 {
                let h = 1e-6 * p[i].abs().max(1e-3);
                let mut hi = p;
                hi[i] += h;
                let mut lo = p;
                lo[i] -= h;
                let f = |q: &[f64]| gamma_model_eval(x, q[0], q[1], q[2]);
                let fd = (f(&hi) - f(&lo)) / (2.0 * h);
                let scale = g[i].abs().max(fd.abs()).max(1e-6);
                assert!(((g[i] - fd) / scale).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn weighting_prefers_low_error_points() {
        // two inconsistent measurements of a constant: the weighted fit of a
        // sinusoid's offset must land near the low-error point
        let xs: Vec<f64> = (0..8).map(|i| i as f64 * 0.7).collect();
        let mut y = vec![0.0; 8];
        let mut y_err = vec![0.0; 8];
        for i in 0..8 {
            y[i] = 0.5 + 0.3 * (xs[i] + 0.4).cos() + if i % 2 == 0 { 0.05 } else { -0.0005 };
            y_err[i] = if i % 2 == 0 { 0.1 } else { 0.002 };
        }
        let curve = Curve::new(xs, y, y_err, vec![100; 8]).unwrap();
        let fit = fit_decay(&curve, DecayModel::Sinusoid).unwrap();
        let resid_low: f64 = (0..8)
            .filter(|i| i % 2 == 1)
            .map(|i| {
                let m = fit.param("y0").unwrap()
                    + fit.param("amplitude").unwrap()
                        * (curve.x[i] + fit.param("phi0").unwrap()).cos();
                (curve.y[i] - m).abs()
            })
            .fold(0.0, f64::max);
        assert!(resid_low < 0.01, "low-error residual {resid_low}");
    }
}
