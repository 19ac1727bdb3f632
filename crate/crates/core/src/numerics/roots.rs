use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Bisection on a sign change; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisection(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(GeomError::NoRootInBracket {
            lo,
            hi,
            best: fa.abs().min(fb.abs()),
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Safeguarded Newton for an increasing function with known derivative.
/// Falls back to bisection whenever the Newton step leaves the bracket.
pub fn monotone_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa > 0.0 || fb < 0.0 {
        return Err(GeomError::NoRootInBracket {
            lo,
            hi,
            best: fa.abs().min(fb.abs()),
        });
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let d = df(x);
        let mut next = if d > 0.0 { x - fx / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= xtol {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Outcome of a damped Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton with a forward-difference Jacobian.
///
/// The step solves the linearized system in the least-squares sense (SVD
/// pseudo-inverse), so rank-deficient families still converge onto their
/// solution set. `f` returns `Err` for points outside its domain; those
/// trial points are treated like a residual increase and the step is halved.
pub fn newton_fd(
    f: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    x0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut norm = fx.norm();
    for it in 0..max_iter {
        if norm <= tol {
            return Ok(NewtonOutcome {
                x,
                residual: norm,
                iterations: it,
            });
        }
        let n = x.len();
        let mut jac = DMatrix::zeros(fx.len(), n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let col = match (f(&xp), f(&xm)) {
                (Ok(fp), Ok(fm)) => (fp - fm) / (2.0 * h),
                (Ok(fp), Err(_)) => (fp - &fx) / h,
                (Err(_), Ok(fm)) => (&fx - fm) / h,
                (Err(e), Err(_)) => return Err(e),
            };
            jac.set_column(j, &col);
        }
        let step = jac
            .svd(true, true)
            .solve(&(-&fx), 1e-12)
            .map_err(|e| GeomError::Numeric(e.to_string()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x + &step * lambda;
            if let Ok(ft) = f(&trial) {
                let tn = ft.norm();
                if tn.is_finite() && tn < norm {
                    x = trial;
                    fx = ft;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(GeomError::NonConvergence {
                iterations: it + 1,
                residual: norm,
            });
        }
    }
    if norm <= tol {
        Ok(NewtonOutcome {
            x,
            residual: norm,
            iterations: max_iter,
        })
    } else {
        Err(GeomError::NonConvergence {
            iterations: max_iter,
            residual: norm,
        })
    }
}
