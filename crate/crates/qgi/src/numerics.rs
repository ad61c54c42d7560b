//! Small numerical toolkit: scaled polynomial least squares, a dense
//! Levenberg-Marquardt fitter, Brent root finding, composite Simpson
//! quadrature and phase unwrapping.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("root is not bracketed: f({a}) = {fa}, f({b}) = {fb}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("root finder failed to converge")]
    NoConvergence,
    #[error("least-squares problem is ill-conditioned or underdetermined")]
    IllConditioned,
    #[error("fit did not converge after {0} iterations")]
    FitDiverged(usize),
    #[error("Simpson quadrature needs an even interval count per segment, got {0}")]
    OddIntervals(usize),
}

/// Polynomial in a centered, scaled abscissa: p(x) = sum c_k u^k with
/// u = (x - x0) / scale. Centering keeps high orders well conditioned.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
    pub x0: f64,
    pub scale: f64,
}

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.x0) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    /// Derivative dp/dx as a new polynomial on the same abscissa.
    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c / self.scale)
            .collect();
        Poly {
            coeffs,
            x0: self.x0,
            scale: self.scale,
        }
    }

    /// Least-squares fit of the given order over (x, y).
    pub fn fit(x: &[f64], y: &[f64], order: usize) -> Result<Poly, NumericsError> {
        assert_eq!(x.len(), y.len());
        if x.len() < order + 1 {
            return Err(NumericsError::IllConditioned);
        }
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let x0 = 0.5 * (lo + hi);
        let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let mut a = DMatrix::zeros(x.len(), order + 1);
        for (i, &xi) in x.iter().enumerate() {
            let u = (xi - x0) / scale;
            let mut p = 1.0;
            for k in 0..=order {
                a[(i, k)] = p;
                p *= u;
            }
        }
        let b = DVector::from_column_slice(y);
        let svd = a.svd(true, true);
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|_| NumericsError::IllConditioned)?;
        Ok(Poly {
            coeffs: sol.iter().copied().collect(),
            x0,
            scale,
        })
    }

    /// Coefficients of p expressed in the raw abscissa, lowest order first.
    /// Useful for comparing cubic phase fits against closed forms.
    pub fn raw_coeffs(&self) -> Vec<f64> {
        // expand sum c_k ((x - x0)/scale)^k by repeated binomial products
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        // powers of (x - x0): build iteratively
        let mut pow = vec![0.0; n]; // coefficients of ((x-x0)/scale)^k in x
        for (k, &c) in self.coeffs.iter().enumerate() {
            if k == 0 {
                pow[0] = 1.0;
            } else {
                // multiply previous power by (x - x0)/scale
                let mut next = vec![0.0; n];
                for j in 0..k {
                    next[j + 1] += pow[j] / self.scale;
                    next[j] -= pow[j] * self.x0 / self.scale;
                }
                pow = next;
            }
            for j in 0..n {
                out[j] += c * pow[j];
            }
        }
        out
    }
}

/// Result of a Levenberg-Marquardt fit.
#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Diagonal of the approximate parameter covariance (J^T J)^-1 * 2 cost / dof.
    pub param_variance: Vec<f64>,
}

/// Dense Levenberg-Marquardt with forward-difference Jacobian.
///
/// `residuals(p, out)` fills `out` with r_i(p); the cost is sum r_i^2 / 2.
pub fn lm_fit<F>(
    mut residuals: F,
    p0: &[f64],
    n_res: usize,
    max_iter: usize,
) -> Result<LmResult, NumericsError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n_par = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; n_res];
    residuals(&p, &mut r);
    let mut cost = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    let mut jac = DMatrix::zeros(n_res, n_par);
    let mut r_trial = vec![0.0; n_res];

    for iter in 0..max_iter {
        // forward-difference Jacobian
        for j in 0..n_par {
            let h = 1e-7 * p[j].abs().max(1e-7);
            let mut pj = p.clone();
            pj[j] += h;
            residuals(&pj, &mut r_trial);
            for i in 0..n_res {
                jac[(i, j)] = (r_trial[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        if g.amax() < 1e-14 {
            return Ok(finish(p, cost, iter, &jtj, n_res));
        }

        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n_par {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let p_try: Vec<f64> = p.iter().zip(step.iter()).map(|(pi, s)| pi - s).collect();
            residuals(&p_try, &mut r_trial);
            let cost_try = 0.5 * r_trial.iter().map(|v| v * v).sum::<f64>();
            if cost_try < cost {
                let rel = (cost - cost_try) / cost.max(1e-300);
                p = p_try;
                r.copy_from_slice(&r_trial);
                cost = cost_try;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-12 || cost < 1e-300 {
                    return Ok(finish(p, cost, iter + 1, &jtj, n_res));
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                return Ok(finish(p, cost, iter + 1, &jtj, n_res));
            }
        }
        if !improved {
            return Ok(finish(p, cost, iter + 1, &jtj, n_res));
        }
    }
    Ok(finish(p, cost, max_iter, &DMatrix::zeros(0, 0), n_res))
}

fn finish(p: Vec<f64>, cost: f64, iterations: usize, jtj: &DMatrix<f64>, n_res: usize) -> LmResult {
    let n_par = p.len();
    let dof = n_res.saturating_sub(n_par).max(1) as f64;
    let var = if jtj.nrows() == n_par {
        jtj.clone()
            .try_inverse()
            .map(|inv| (0..n_par).map(|k| inv[(k, k)] * 2.0 * cost / dof).collect())
            .unwrap_or_else(|| vec![f64::NAN; n_par])
    } else {
        vec![f64::NAN; n_par]
    };
    LmResult {
        params: p,
        cost,
        iterations,
        param_variance: var,
    }
}

/// Brent root finder on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(NumericsError::NotBracketed { a, b, fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            (a, b, c) = (b, c, b);
            (fa, fb, fc) = (fb, fc, fb);
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let (qq, rr) = (fa / fc, fb / fc);
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(NumericsError::NoConvergence)
}

/// Composite Simpson rule on a uniform grid slice (even interval count).
pub fn simpson_uniform(y: &[f64], h: f64) -> Result<f64, NumericsError> {
    let n = y.len() - 1;
    if n == 0 {
        return Ok(0.0);
    }
    if n % 2 != 0 {
        return Err(NumericsError::OddIntervals(n));
    }
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * h / 3.0)
}

/// Unwrap a phase series by removing 2 pi jumps between neighbours.
pub fn unwrap_phase(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut offset = 0.0;
    for (i, &w) in wrapped.iter().enumerate() {
        if i > 0 {
            let d = w - wrapped[i - 1];
            if d > std::f64::consts::PI {
                offset -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                offset += 2.0 * std::f64::consts::PI;
            }
        }
        out.push(w + offset);
    }
    out
}

/// Centered moving average with given odd window; ends use shrunken windows.
pub fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polyfit_recovers_cubic() {
        let x: Vec<f64> = (0..50).map(|i| 0.2 + 0.05 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 1.0 - 2.0 * v + 0.5 * v.powi(3)).collect();
        let p = Poly::fit(&x, &y, 3).unwrap();
        for (&xi, &yi) in x.iter().zip(&y) {
            assert_relative_eq!(p.eval(xi), yi, max_relative = 1e-10, epsilon = 1e-12);
        }
        let raw = p.raw_coeffs();
        assert_relative_eq!(raw[0], 1.0, max_relative = 1e-8);
        assert_relative_eq!(raw[1], -2.0, max_relative = 1e-8);
        assert_relative_eq!(raw[3], 0.5, max_relative = 1e-8);
        // derivative
        let d = p.derivative();
        assert_relative_eq!(d.eval(1.0), -2.0 + 1.5, max_relative = 1e-8);
    }

    #[test]
    fn brent_finds_root() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, max_relative = 1e-12);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let n = 10;
        let h = 0.1;
        let y: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3)).collect();
        let exact = (n as f64 * h).powi(4) / 4.0;
        assert_relative_eq!(simpson_uniform(&y, h).unwrap(), exact, max_relative = 1e-14);
    }

    #[test]
    fn lm_fits_exponential() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.5 * (-0.7 * x).exp()).collect();
        let res = lm_fit(
            |p, out| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    out[i] = p[0] * (p[1] * x).exp() - y;
                }
            },
            &[1.0, -0.1],
            xs.len(),
            200,
        )
        .unwrap();
        assert_relative_eq!(res.params[0], 2.5, max_relative = 1e-6);
        assert_relative_eq!(res.params[1], -0.7, max_relative = 1e-6);
    }

    #[test]
    fn unwrap_recovers_linear_ramp() {
        let true_phase: Vec<f64> = (0..100).map(|i| 0.3 * i as f64).collect();
        let wrapped: Vec<f64> = true_phase
            .iter()
            .map(|p| p.sin().atan2(p.cos()))
            .collect();
        let un = unwrap_phase(&wrapped);
        for (u, t) in un.iter().zip(&true_phase) {
            assert_relative_eq!(u, t, max_relative = 1e-10, epsilon = 1e-10);
        }
    }
}
