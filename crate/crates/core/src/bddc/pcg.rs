use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dotc, eigvalsh_real, norm2, CVec};

/// Outcome of a preconditioned conjugate gradient run.
#[derive(Debug, Clone, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub converged: bool,
    /// Relative residuals `‖r_i‖ / ‖b‖`, starting with the initial one.
    pub residuals: Vec<f64>,
    /// Extreme Ritz values of the preconditioned operator.
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SolveStats {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Turns a capped run into [`Error::NotConverged`].
    pub fn check(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.final_residual(),
            })
        }
    }
}

/// Complex Hermitian PCG from a zero initial guess, stopping at
/// `‖r‖ ≤ tol ‖b‖` or after `maxit` iterations. Ritz values come from the
/// Lanczos tridiagonal built from the CG coefficients.
pub fn pcg<A, M>(apply_a: A, apply_m: M, b: &CVec, tol: f64, maxit: usize) -> Result<(CVec, SolveStats)>
where
    A: Fn(&CVec) -> Result<CVec>,
    M: Fn(&CVec) -> Result<CVec>,
{
    let n = b.len();
    let mut x = CVec::zeros(n);
    let b_norm = norm2(&b.view());
    let mut stats = SolveStats {
        iterations: 0,
        converged: true,
        residuals: vec![1.0],
        lambda_min: f64::NAN,
        lambda_max: f64::NAN,
    };
    if b_norm == 0.0 {
        stats.residuals = vec![0.0];
        return Ok((x, stats));
    }
    let mut r = b.clone();
    let mut z = apply_m(&r)?;
    let mut rz = dotc(&r.view(), &z.view()).re;
    if rz <= 0.0 {
        return Err(Error::Breakdown { iteration: 0, curvature: rz });
    }
    let mut p = z.clone();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    stats.converged = false;
    for it in 1..=maxit {
        let q = apply_a(&p)?;
        let pq = dotc(&p.view(), &q.view()).re;
        if pq <= 0.0 {
            return Err(Error::Breakdown { iteration: it, curvature: pq });
        }
        let alpha = rz / pq;
        x.scaled_add(alpha.into(), &p);
        r.scaled_add((-alpha).into(), &q);
        alphas.push(alpha);
        stats.iterations = it;
        let res = norm2(&r.view()) / b_norm;
        stats.residuals.push(res);
        log::trace!("pcg {it}: {res:.3e}");
        if res <= tol {
            stats.converged = true;
            break;
        }
        z = apply_m(&r)?;
        let rz_new = dotc(&r.view(), &z.view()).re;
        if rz_new <= 0.0 {
            return Err(Error::Breakdown { iteration: it, curvature: rz_new });
        }
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        p = &z + &p.mapv(|v| v * beta);
    }
    let (lo, hi) = ritz_extremes(&alphas, &betas)?;
    stats.lambda_min = lo;
    stats.lambda_max = hi;
    Ok((x, stats))
}

/// Extreme eigenvalues of the Lanczos tridiagonal
/// `T_jj = 1/α_j + β_{j-1}/α_{j-1}`, `T_{j,j-1} = √β_{j-1} / α_{j-1}`.
pub fn ritz_extremes(alphas: &[f64], betas: &[f64]) -> Result<(f64, f64)> {
    let m = alphas.len();
    if m == 0 {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut t = ndarray::Array2::<f64>::zeros((m, m));
    for j in 0..m {
        t[[j, j]] = 1.0 / alphas[j];
        if j > 0 {
            t[[j, j]] += betas[j - 1] / alphas[j - 1];
            let off = betas[j - 1].sqrt() / alphas[j - 1];
            t[[j, j - 1]] = off;
            t[[j - 1, j]] = off;
        }
    }
    let w = eigvalsh_real(&t)?;
    Ok((w[0], w[m - 1]))
}
