use super::{ComplexMatrix, NumError, Tolerances, C64, DEFAULT_TOLERANCES};

#[derive(Debug, Clone)]
pub struct RidgeSolution {
    pub x: Vec<C64>,
    /// Ratio of the largest to smallest `|R_ii|` of the (augmented) QR factor.
    pub condition_estimate: f64,
    pub ridge: f64,
}

/// `scale · trace(AᴴA) / cols`, the regularization floor used wherever a
/// pseudoinverse is taken without an explicit ridge.
pub fn default_ridge(a: &ComplexMatrix, tol: &Tolerances) -> f64 {
    if a.cols() == 0 {
        return 0.0;
    }
    tol.ridge_scale * a.frobenius_norm().powi(2) / a.cols() as f64
}

/// Solves `(AᴴA + ridge·I) x = Aᴴb`.
pub fn ridge_pinv_solve(a: &ComplexMatrix, b: &[C64], ridge: f64) -> Result<Vec<C64>, NumError> {
    ridge_pinv_solve_with(a, b, ridge, &DEFAULT_TOLERANCES).map(|s| s.x)
}

/// The normal equations are never formed: the problem is solved as the
/// least-squares system `[A; √ridge·I] x ≈ [b; 0]` by Householder QR, which has
/// the same solution and keeps the conditioning of `A` rather than its square.
pub fn ridge_pinv_solve_with(
    a: &ComplexMatrix,
    b: &[C64],
    ridge: f64,
    tol: &Tolerances,
) -> Result<RidgeSolution, NumError> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(NumError::Empty);
    }
    if b.len() != m {
        return Err(NumError::DimensionMismatch { expected: m, found: b.len() });
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(NumError::InvalidArgument(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    if a.as_slice().iter().chain(b).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumError::NonFinite);
    }

    let extra = if ridge > 0.0 { n } else { 0 };
    let rows = m + extra;
    if rows < n {
        return Err(NumError::SingularSystem { condition: f64::INFINITY });
    }
    let zero = C64::new(0.0, 0.0);
    // column-major working copy
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut c = Vec::with_capacity(rows);
            c.extend((0..m).map(|i| a[(i, j)]));
            c.resize(rows, zero);
            if ridge > 0.0 {
                c[m + j] = C64::new(ridge.sqrt(), 0.0);
            }
            c
        })
        .collect();
    let mut rhs = b.to_vec();
    rhs.resize(rows, zero);

    let mut diag = vec![zero; n];
    for k in 0..n {
        let (head, tail) = cols.split_at_mut(k + 1);
        let col = &mut head[k];
        let norm_x = col[k..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            diag[k] = zero;
            continue;
        }
        let x0 = col[k];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        // v = x - alpha e1, stored in place of column k
        col[k] -= alpha;
        let v = &col[k..];
        let v_norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sqr > 0.0 {
            for other in tail.iter_mut() {
                reflect(v, &mut other[k..], v_norm_sqr);
            }
            reflect(v, &mut rhs[k..], v_norm_sqr);
        }
        diag[k] = alpha;
    }

    let mags: Vec<f64> = diag.iter().map(|z| z.norm()).collect();
    let max_r = mags.iter().cloned().fold(0.0, f64::max);
    let min_r = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min_r == 0.0 { f64::INFINITY } else { max_r / min_r };
    if min_r == 0.0 || (ridge == 0.0 && condition > tol.max_condition) {
        return Err(NumError::SingularSystem { condition });
    }

    // back substitution on R (upper triangle of the reflected columns, diag separate)
    let mut x = vec![zero; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= cols[j][i] * x[j];
        }
        x[i] = s / diag[i];
    }
    Ok(RidgeSolution { x, condition_estimate: condition, ridge })
}

/// Applies `I − 2vvᴴ/‖v‖²` to `target`.
fn reflect(v: &[C64], target: &mut [C64], v_norm_sqr: f64) {
    let s: C64 = v.iter().zip(target.iter()).map(|(vi, ti)| vi.conj() * ti).sum();
    let f = s * (2.0 / v_norm_sqr);
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= f * vi;
    }
}
