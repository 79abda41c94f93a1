//! Jacobi-preconditioned conjugate gradient for the SPD Newton systems.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgFailure {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` from the initial guess in `x` until `‖r‖ ≤ rel_tol·‖b‖`.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize, PcgFailure> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let target = rel_tol * bnorm;
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= target {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(PcgFailure {
                iterations: it,
                relative_residual: rnorm / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    if rnorm <= target {
        Ok(max_iter)
    } else {
        Err(PcgFailure {
            iterations: max_iter,
            relative_residual: rnorm / bnorm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        // 1D Dirichlet Laplacian plus identity; oracle by the Thomas algorithm.
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 3.0 * x[i] - l - r;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut x = vec![0.0; n];
        pcg(apply, &vec![3.0; n], &b, &mut x, 1e-14, 500).unwrap();

        let (mut c, mut d) = (vec![0.0; n], vec![0.0; n]);
        c[0] = -1.0 / 3.0;
        d[0] = b[0] / 3.0;
        for i in 1..n {
            let m = 3.0 + c[i - 1];
            c[i] = -1.0 / m;
            d[i] = (b[i] + d[i - 1]) / m;
        }
        let mut want = vec![0.0; n];
        want[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            want[i] = d[i] - c[i] * want[i + 1];
        }
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_indefinite_operator() {
        let apply = |x: &[f64], y: &mut [f64]| {
            y[0] = -x[0];
            y[1] = x[1];
        };
        let mut x = vec![0.0; 2];
        assert!(pcg(apply, &[1.0, 1.0], &[1.0, 0.0], &mut x, 1e-12, 10).is_err());
    }
}
