use super::{NumError, RealMatrix, Tolerances, DEFAULT_TOLERANCES};

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending order.
/// Column `i` of `eigenvectors` belongs to `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: RealMatrix,
}

pub fn sym_eig(a: &RealMatrix) -> Result<EigenResult, NumError> {
    sym_eig_with(a, &DEFAULT_TOLERANCES)
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eig_with(a: &RealMatrix, tol: &Tolerances) -> Result<EigenResult, NumError> {
    let n = a.rows();
    if n == 0 {
        return Err(NumError::Empty);
    }
    if a.cols() != n {
        return Err(NumError::DimensionMismatch { expected: n, found: a.cols() });
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(NumError::NonFinite);
    }
    let scale = a.max_abs();
    let asym = a.max_asymmetry();
    if asym > tol.symmetry * scale {
        return Err(NumError::NonSymmetric { max_asymmetry: asym });
    }

    // Work on the symmetrized copy so tiny asymmetries cannot bias the result.
    let mut m = RealMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = RealMatrix::identity(n);
    let total = m.frobenius_norm();

    let mut converged = total == 0.0 || n == 1;
    let mut sweep = 0;
    while !converged {
        if sweep >= tol.jacobi_max_sweeps {
            return Err(NumError::NoConvergence {
                routine: "sym_eig",
                iterations: sweep,
                best: None,
            });
        }
        let off = off_diagonal_norm(&m);
        if off <= tol.jacobi_offdiag * total {
            converged = true;
            continue;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q, sweep > 3);
            }
        }
        sweep += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = RealMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenResult { eigenvalues, eigenvectors })
}

fn off_diagonal_norm(m: &RealMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut RealMatrix, v: &mut RealMatrix, p: usize, q: usize, late_sweep: bool) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    // Once the iteration has settled, drop entries that no longer affect either diagonal.
    if late_sweep {
        let g = 100.0 * apq.abs();
        if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
            m[(p, q)] = 0.0;
            m[(q, p)] = 0.0;
            return;
        }
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = m.rows();
    let data = m.as_mut_slice();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = data[k * n + p];
        let akq = data[k * n + q];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        data[k * n + p] = new_p;
        data[p * n + k] = new_p;
        data[k * n + q] = new_q;
        data[q * n + k] = new_q;
    }
    data[p * n + p] = app - t * apq;
    data[q * n + q] = aqq + t * apq;
    data[p * n + q] = 0.0;
    data[q * n + p] = 0.0;

    let vd = v.as_mut_slice();
    for k in 0..n {
        let vkp = vd[k * n + p];
        let vkq = vd[k * n + q];
        vd[k * n + p] = c * vkp - s * vkq;
        vd[k * n + q] = s * vkp + c * vkq;
    }
}
