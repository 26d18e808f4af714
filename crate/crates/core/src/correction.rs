//! Perturbed forecasts and the asymmetric forecast-cost model.
//!
//! With residuals `r = actual - predicted` the two cost functionals are
//!
//! ```text
//! U = 1/(2N) sum |r|
//! V = 1/(2N) sum r^2 + gamma/N sum r + epsilon/(3N) sum r^3
//! ```
//!
//! A positive `gamma` makes underforecasts (positive `r`) costlier than
//! overforecasts of the same size; `epsilon` adds a skewed cubic term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::pearson;
use crate::num::{mean, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorrectionError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty series")]
    Empty,
    #[error("perturbation factor must lie within +-{limit}")]
    FactorOutOfRange { limit: String },
    #[error("need at least 3 forecast/cost pairs, got {0}")]
    TooFewPairs(usize),
    #[error("observed costs are all equal")]
    ConstantCosts,
    #[error("actual series is constant and cannot be normalised")]
    ConstantActual,
    #[error("predicted series is constant")]
    ConstantPredicted,
    #[error("cost-model scores do not vary across the pairs")]
    Degenerate,
    #[error("no finite local minimiser of V was found")]
    NoMinimizer,
}

/// Relative change applied to every value of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec<T> {
    pub factor: T,
}

impl<T: Scalar> PerturbationSpec<T> {
    pub const DEFAULT_LIMIT: f64 = 0.5;

    pub fn new(factor: T) -> Result<Self, CorrectionError> {
        Self::with_limit(factor, T::lit(Self::DEFAULT_LIMIT))
    }

    pub fn with_limit(factor: T, limit: T) -> Result<Self, CorrectionError> {
        if !factor.is_finite() || factor.abs() > limit {
            return Err(CorrectionError::FactorOutOfRange { limit: limit.to_string() });
        }
        Ok(Self { factor })
    }
}

/// `actual * (1 + factor)`.
pub fn perturb<T: Scalar>(actual: &[T], spec: PerturbationSpec<T>) -> Vec<T> {
    let k = T::one() + spec.factor;
    actual.iter().map(|&y| y * k).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModelParams<T> {
    pub gamma: T,
    pub epsilon: T,
}

/// `p -> beta + alpha * p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCorrection<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> LinearCorrection<T> {
    pub fn identity() -> Self {
        Self { alpha: T::one(), beta: T::zero() }
    }

    /// The correction applying `self` first, then `then`.
    pub fn then(self, then: Self) -> Self {
        Self { alpha: then.alpha * self.alpha, beta: then.alpha * self.beta + then.beta }
    }
}

pub fn apply_correction<T: Scalar>(predicted: &[T], corr: LinearCorrection<T>) -> Vec<T> {
    predicted.iter().map(|&p| corr.beta + corr.alpha * p).collect()
}

fn check<T>(a: &[T], b: &[T]) -> Result<(), CorrectionError> {
    if a.len() != b.len() {
        return Err(CorrectionError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(CorrectionError::Empty);
    }
    Ok(())
}

pub fn u_cost<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T, CorrectionError> {
    check(actual, predicted)?;
    let s: T = actual.iter().zip(predicted).map(|(&y, &p)| (y - p).abs()).sum();
    Ok(s / (T::lit(2.0) * T::from_usize_lossy(actual.len())))
}

/// The three residual averages V is linear in: `V = a + gamma * b + epsilon * c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VTerms<T> {
    /// `mean(r^2) / 2`
    pub a: T,
    /// `mean(r)`
    pub b: T,
    /// `mean(r^3) / 3`
    pub c: T,
}

impl<T: Scalar> VTerms<T> {
    pub fn new(actual: &[T], predicted: &[T]) -> Result<Self, CorrectionError> {
        check(actual, predicted)?;
        let (mut s1, mut s2, mut s3) = (T::zero(), T::zero(), T::zero());
        for (&y, &p) in actual.iter().zip(predicted) {
            let r = y - p;
            s1 = s1 + r;
            s2 = s2 + r * r;
            s3 = s3 + r * r * r;
        }
        let n = T::from_usize_lossy(actual.len());
        Ok(Self { a: s2 / (T::lit(2.0) * n), b: s1 / n, c: s3 / (T::lit(3.0) * n) })
    }

    pub fn value(&self, params: CostModelParams<T>) -> T {
        self.a + params.gamma * self.b + params.epsilon * self.c
    }
}

pub fn v_cost<T: Scalar>(actual: &[T], predicted: &[T], params: CostModelParams<T>) -> Result<T, CorrectionError> {
    Ok(VTerms::new(actual, predicted)?.value(params))
}

/// Mean and sample standard deviation used to normalise a forecast pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> Normalization<T> {
    /// Statistics of the actual series.
    pub fn of(actual: &[T]) -> Result<Self, CorrectionError> {
        let m = mean(actual).ok_or(CorrectionError::Empty)?;
        if actual.len() < 2 {
            return Err(CorrectionError::ConstantActual);
        }
        let ss: T = actual.iter().map(|&y| (y - m) * (y - m)).sum();
        let std = (ss / T::from_usize_lossy(actual.len() - 1)).sqrt();
        if std <= T::zero() {
            return Err(CorrectionError::ConstantActual);
        }
        Ok(Self { mean: m, std })
    }

    pub fn apply(&self, xs: &[T]) -> Vec<T> {
        xs.iter().map(|&x| (x - self.mean) / self.std).collect()
    }

    /// Maps a correction found in normalised space back to raw units.
    pub fn denormalize(&self, c: LinearCorrection<T>) -> LinearCorrection<T> {
        LinearCorrection { alpha: c.alpha, beta: self.mean + self.std * c.beta - c.alpha * self.mean }
    }
}

/// One forecast with the cost its schedule realised.
#[derive(Debug, Clone, Copy)]
pub struct FitPair<'a, T> {
    pub actual: &'a [T],
    pub predicted: &'a [T],
    pub cost: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub params: CostModelParams<T>,
    pub correlation: T,
}

pub const GRID_LIMIT: f64 = 5.0;
pub const GRID_STEP: f64 = 0.05;

/// Chooses `(gamma, epsilon)` to maximise the Pearson correlation between
/// V scores and observed costs. Each pair is normalised with its actual
/// series' mean and standard deviation. A grid over `[-5, 5]^2` with step
/// 0.05 is searched first (ties go to the lexicographically smallest
/// point), then refined by a shrinking pattern search inside the same box.
pub fn fit_gamma_epsilon<T: Scalar>(pairs: &[FitPair<T>]) -> Result<FitResult<T>, CorrectionError> {
    if pairs.len() < 3 {
        return Err(CorrectionError::TooFewPairs(pairs.len()));
    }
    let mut terms = Vec::with_capacity(pairs.len());
    for p in pairs {
        let norm = Normalization::of(p.actual)?;
        terms.push(VTerms::new(&norm.apply(p.actual), &norm.apply(p.predicted))?);
    }
    let costs: Vec<f64> = pairs.iter().map(|p| p.cost.as_f64()).collect();
    let abc: Vec<[f64; 3]> = terms.iter().map(|t| [t.a.as_f64(), t.b.as_f64(), t.c.as_f64()]).collect();
    let corr = Correlator::new(&abc, &costs).ok_or(CorrectionError::ConstantCosts)?;

    let steps = (2.0 * GRID_LIMIT / GRID_STEP).round() as i64;
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..=steps {
        let g = -GRID_LIMIT + i as f64 * GRID_STEP;
        for j in 0..=steps {
            let e = -GRID_LIMIT + j as f64 * GRID_STEP;
            if let Some(r) = corr.at(g, e) {
                if best.is_none_or(|(br, _, _)| r > br) {
                    best = Some((r, g, e));
                }
            }
        }
    }
    let (mut r, mut g, mut e) = best.ok_or(CorrectionError::Degenerate)?;
    let mut step = GRID_STEP / 2.0;
    while step > 1e-7 {
        let mut moved = false;
        for (dg, de) in [(-step, 0.0), (step, 0.0), (0.0, -step), (0.0, step)] {
            let (gn, en) = (g + dg, e + de);
            if gn.abs() > GRID_LIMIT || en.abs() > GRID_LIMIT {
                continue;
            }
            if let Some(rn) = corr.at(gn, en) {
                if rn > r {
                    (r, g, e) = (rn, g + dg, e + de);
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    let params = CostModelParams { gamma: T::lit(g), epsilon: T::lit(e) };
    // report the correlation computed directly from the scores
    let scores: Vec<T> = terms.iter().map(|t| t.value(params)).collect();
    let observed: Vec<T> = pairs.iter().map(|p| p.cost).collect();
    let correlation = pearson(&scores, &observed).map_err(|_| CorrectionError::Degenerate)?;
    Ok(FitResult { params, correlation })
}

/// Pearson correlation of `a + g b + e c` with the costs in O(1) per point.
struct Correlator {
    /// Covariances of (a, b, c) with the costs.
    cov_y: [f64; 3],
    /// Covariance matrix of (a, b, c).
    cov: [[f64; 3]; 3],
    var_y: f64,
}

impl Correlator {
    fn new(abc: &[[f64; 3]], y: &[f64]) -> Option<Self> {
        let n = y.len() as f64;
        let my = y.iter().sum::<f64>() / n;
        let mut m = [0.0; 3];
        for row in abc {
            for k in 0..3 {
                m[k] += row[k] / n;
            }
        }
        let mut cov_y = [0.0; 3];
        let mut cov = [[0.0; 3]; 3];
        let mut var_y = 0.0;
        for (row, &yi) in abc.iter().zip(y) {
            let dy = yi - my;
            var_y += dy * dy;
            for k in 0..3 {
                cov_y[k] += (row[k] - m[k]) * dy;
                for l in 0..3 {
                    cov[k][l] += (row[k] - m[k]) * (row[l] - m[l]);
                }
            }
        }
        let scale = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
        (var_y > (scale * 1e-12).powi(2) * n).then_some(Self { cov_y, cov, var_y })
    }

    fn at(&self, g: f64, e: f64) -> Option<f64> {
        let w = [1.0, g, e];
        let mut num = 0.0;
        let mut var = 0.0;
        let mut diag = 0.0;
        for k in 0..3 {
            num += w[k] * self.cov_y[k];
            diag += (w[k] * w[k]) * self.cov[k][k];
            for l in 0..3 {
                var += w[k] * w[l] * self.cov[k][l];
            }
        }
        if var <= diag.abs() * 1e-12 || var <= 0.0 {
            return None;
        }
        Some((num / (var.sqrt() * self.var_y.sqrt())).clamp(-1.0, 1.0))
    }
}

fn ols<T: Scalar>(actual: &[T], predicted: &[T]) -> Option<LinearCorrection<T>> {
    let mx = mean(predicted)?;
    let my = mean(actual)?;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&y, &x) in actual.iter().zip(predicted) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx <= T::zero() {
        return None;
    }
    let alpha = sxy / sxx;
    Some(LinearCorrection { alpha, beta: my - alpha * mx })
}

/// Gradient and Hessian of V over `(beta, alpha)`.
fn derivatives<T: Scalar>(
    actual: &[T],
    predicted: &[T],
    params: CostModelParams<T>,
    c: LinearCorrection<T>,
) -> ([T; 2], [[T; 2]; 2]) {
    let n = T::from_usize_lossy(actual.len());
    let (mut g0, mut g1, mut h00, mut h01, mut h11) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&y, &x) in actual.iter().zip(predicted) {
        let r = y - c.beta - c.alpha * x;
        let phi = r + params.gamma + params.epsilon * r * r;
        let dphi = T::one() + T::lit(2.0) * params.epsilon * r;
        g0 = g0 - phi;
        g1 = g1 - phi * x;
        h00 = h00 + dphi;
        h01 = h01 + dphi * x;
        h11 = h11 + dphi * x * x;
    }
    ([g0 / n, g1 / n], [[h00 / n, h01 / n], [h01 / n, h11 / n]])
}

fn positive_definite<T: Scalar>(h: [[T; 2]; 2]) -> bool {
    h[0][0] > T::zero() && h[0][0] * h[1][1] - h[0][1] * h[0][1] > T::zero()
}

/// Damped Newton descent on V from `start`. Returns a point with a small
/// gradient and positive definite Hessian, or `None`.
fn newton<T: Scalar>(
    actual: &[T],
    predicted: &[T],
    params: CostModelParams<T>,
    start: LinearCorrection<T>,
    tol: T,
) -> Option<(LinearCorrection<T>, T)> {
    let vc = |c: LinearCorrection<T>| v_cost(actual, &apply_correction(predicted, c), params).ok();
    let mut c = start;
    let mut v = vc(c)?;
    for _ in 0..500 {
        let (g, h) = derivatives(actual, predicted, params, c);
        if g[0].abs().max(g[1].abs()) < tol {
            return positive_definite(h).then_some((c, v));
        }
        let mut lambda = T::zero();
        let scale = h[0][0].abs() + h[1][1].abs() + T::one();
        let mut improved = false;
        for _ in 0..60 {
            let m = [[h[0][0] + lambda, h[0][1]], [h[0][1], h[1][1] + lambda]];
            if positive_definite(m) {
                let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
                let d0 = -(m[1][1] * g[0] - m[0][1] * g[1]) / det;
                let d1 = -(m[0][0] * g[1] - m[0][1] * g[0]) / det;
                let mut t = T::one();
                for _ in 0..40 {
                    let cand = LinearCorrection { beta: c.beta + t * d0, alpha: c.alpha + t * d1 };
                    if let Some(vn) = vc(cand) {
                        if vn.is_finite() && vn <= v {
                            if vn == v && (cand.alpha != c.alpha || cand.beta != c.beta) && t < T::one() {
                                break;
                            }
                            c = cand;
                            v = vn;
                            improved = true;
                            break;
                        }
                    }
                    t = t / T::lit(2.0);
                }
                if improved {
                    break;
                }
            }
            lambda = if lambda == T::zero() { scale * T::lit(1e-6) } else { lambda * T::lit(10.0) };
        }
        if !improved || !c.alpha.is_finite() || !c.beta.is_finite() || c.alpha.abs() > T::lit(1e12) {
            let (g, h) = derivatives(actual, predicted, params, c);
            let ok = g[0].abs().max(g[1].abs()) < tol && positive_definite(h);
            return ok.then_some((c, v));
        }
    }
    None
}

/// `(alpha, beta)` minimising `V(actual, beta + alpha * predicted)`.
///
/// For `epsilon != 0` V is a cubic polynomial and unbounded below, so the
/// result is the best local minimiser reached by damped Newton descent from
/// the identity and from the least-squares fit. A point counts as a minimiser
/// when its gradient is below the scalar's stationarity tolerance (scaled by
/// `max(1, mean(predicted^2))`) and its Hessian is positive definite. Descent
/// from the identity never increases V, so a result never costs more than
/// leaving the forecast unchanged.
pub fn linear_correction<T: Scalar>(
    actual: &[T],
    predicted: &[T],
    params: CostModelParams<T>,
) -> Result<LinearCorrection<T>, CorrectionError> {
    check(actual, predicted)?;
    let start_ols = ols(actual, predicted).ok_or(CorrectionError::ConstantPredicted)?;
    let x2 = mean(&predicted.iter().map(|&x| x * x).collect::<Vec<_>>()).expect("non-empty");
    let tol = T::lit(T::STATIONARITY_TOL) * x2.max(T::one());
    let identity = LinearCorrection::identity();
    let v_identity = v_cost(actual, predicted, params)?;
    let mut best: Option<(LinearCorrection<T>, T)> = None;
    for start in [identity, start_ols] {
        if let Some((c, v)) = newton(actual, predicted, params, start, tol) {
            if v <= v_identity && best.is_none_or(|(_, bv)| v < bv) {
                best = Some((c, v));
            }
        }
    }
    best.map(|(c, _)| c).ok_or(CorrectionError::NoMinimizer)
}
