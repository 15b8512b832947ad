use super::{norm2, ComplexMatrix, NumError, Tolerances, C64, DEFAULT_TOLERANCES};

pub fn spectral_radius(w: &ComplexMatrix) -> Result<f64, NumError> {
    spectral_radius_with(w, &DEFAULT_TOLERANCES)
}

/// Largest eigenvalue magnitude.
///
/// Diagonal matrices are answered exactly. Otherwise power iteration runs
/// (one restart from a different start vector on stagnation); when two
/// dominant eigenvalues are too close in modulus for power iteration to settle
/// within the iteration cap, the answer comes from the full Hessenberg QR
/// spectrum instead.
pub fn spectral_radius_with(w: &ComplexMatrix, tol: &Tolerances) -> Result<f64, NumError> {
    if !w.is_square() {
        return Err(NumError::DimensionMismatch { expected: w.rows(), found: w.cols() });
    }
    if w.rows() == 0 {
        return Err(NumError::Empty);
    }
    if w.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumError::NonFinite);
    }
    if w.is_diagonal() {
        return Ok(w.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    for restart in 0..2u64 {
        if let Some(rho) = power_iteration(w, tol, restart) {
            return Ok(rho);
        }
    }
    log::debug!("power iteration stagnated on a {}x{} matrix; using QR spectrum", w.rows(), w.cols());
    let eig = eigenvalues_general_with(w, tol)?;
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Deterministic, well-spread start vector.
fn start_vector(n: usize, salt: u64) -> Vec<C64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut next = || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let v: Vec<C64> = (0..n).map(|_| C64::new(next(), next())).collect();
    let norm = norm2(&v);
    v.into_iter().map(|z| z / norm).collect()
}

fn power_iteration(w: &ComplexMatrix, tol: &Tolerances, salt: u64) -> Option<f64> {
    let n = w.rows();
    let mut x = start_vector(n, salt);
    let mut previous = f64::NAN;
    let mut settled = 0;
    for _ in 0..tol.power_max_iterations {
        let y = w.mul_vec(&x).ok()?;
        let growth = norm2(&y);
        if growth == 0.0 {
            // x was annihilated; for a generic start vector that means W is nilpotent
            return Some(0.0);
        }
        if (growth - previous).abs() <= tol.power_step_tol * growth {
            settled += 1;
            if settled >= 3 {
                return Some(growth);
            }
        } else {
            settled = 0;
        }
        previous = growth;
        x = y.into_iter().map(|z| z / growth).collect();
    }
    None
}

pub fn eigenvalues_general(w: &ComplexMatrix) -> Result<Vec<C64>, NumError> {
    eigenvalues_general_with(w, &DEFAULT_TOLERANCES)
}

/// Eigenvalues of a general complex square matrix: Householder reduction to
/// upper Hessenberg form followed by single-shift QR with Wilkinson shifts.
/// Eigenvalues only; no Schur vectors are accumulated.
fn eigenvalues_general_with(w: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<C64>, NumError> {
    let n = w.rows();
    if !w.is_square() {
        return Err(NumError::DimensionMismatch { expected: n, found: w.cols() });
    }
    let mut h = w.clone();
    to_hessenberg(&mut h);

    let zero = C64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let cap = tol.qr_iterations_per_eigenvalue * n.max(1);
    let mut total = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    while hi > 0 {
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { norm } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > cap {
            return Err(NumError::NoConvergence { routine: "hessenberg_qr", iterations: total, best: None });
        }

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75, 0.43) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let a = h[(k, k)];
            let b = h[(k + 1, k)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 { (C64::new(1.0, 0.0), zero) } else { (a / r, b / r) };
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c.conj() * x + s.conj() * y;
                h[(k + 1, j)] = -s * x + c * y;
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            for i in lo..=(k + 2).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s;
                h[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    eig[0] = h[(0, 0)];
    Ok(eig)
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn to_hessenberg(h: &mut ComplexMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let norm_x = norm2(&x);
        if norm_x == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let mut v = x;
        v[0] += phase * norm_x;
        let v_norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sqr == 0.0 {
            continue;
        }
        // left: rows k+1.., all columns from k
        for j in k..n {
            let s: C64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * h[(k + 1 + t, j)]).sum();
            let f = s * (2.0 / v_norm_sqr);
            for (t, vt) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= f * vt;
            }
        }
        // right: columns k+1.., all rows
        for i in 0..n {
            let s: C64 = v.iter().enumerate().map(|(t, vt)| h[(i, k + 1 + t)] * vt).sum();
            let f = s * (2.0 / v_norm_sqr);
            for (t, vt) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= f * vt.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64, sparsity: f64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, n, |_, _| {
            let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if rng.random::<f64>() < sparsity {
                c(0.0, 0.0)
            } else {
                z
            }
        })
    }

    /// Dense Schur-based spectrum from an independent implementation.
    fn oracle_eigenvalues(w: &ComplexMatrix) -> Vec<C64> {
        let m = DMatrix::from_fn(w.rows(), w.cols(), |i, j| w[(i, j)]);
        m.schur().eigenvalues().expect("complex Schur form has a diagonal").iter().cloned().collect()
    }

    #[test]
    fn diagonal_shortcut() {
        let w = ComplexMatrix::from_diagonal(&[c(0.3, 0.0), c(0.0, -0.5)]);
        assert_eq!(spectral_radius(&w).unwrap(), 0.5);
    }

    #[test]
    fn scaled_rotation() {
        let th: f64 = 0.7;
        let w = ComplexMatrix::from_row_major(
            2,
            2,
            vec![c(0.4 * th.cos(), 0.0), c(-0.4 * th.sin(), 0.0), c(0.4 * th.sin(), 0.0), c(0.4 * th.cos(), 0.0)],
        )
        .unwrap();
        assert!((spectral_radius(&w).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn random_50_matches_dense_oracle() {
        for seed in 0..5 {
            let w = random_matrix(50, seed, 0.0);
            let oracle = oracle_eigenvalues(&w).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let got = spectral_radius(&w).unwrap();
            assert!((got - oracle).abs() <= 1e-5 * oracle, "seed {seed}: {got} vs {oracle}");
        }
    }

    #[test]
    fn sparse_reservoirs_match_oracle_to_1e6() {
        // includes cases where the two largest moduli are close enough to stall power iteration
        for seed in 0..20 {
            let w = random_matrix(100, 100 + seed, 0.6);
            let oracle = oracle_eigenvalues(&w).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let got = spectral_radius(&w).unwrap();
            assert!((got - oracle).abs() <= 1e-6 * oracle, "seed {seed}: {got} vs {oracle}");
        }
    }

    #[test]
    fn qr_spectrum_matches_oracle() {
        let w = random_matrix(30, 77, 0.3);
        let mut got = eigenvalues_general(&w).unwrap();
        let mut want = oracle_eigenvalues(&w);
        let key = |z: &C64| (z.re * 1e6).round() as i64 * 10_000_000 + (z.im * 1e6).round() as i64;
        got.sort_by_key(key);
        want.sort_by_key(key);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-8, "{g} vs {w}");
        }
    }

    #[test]
    fn nilpotent_has_zero_radius() {
        let mut w = ComplexMatrix::zeros(3, 3);
        w[(0, 1)] = c(1.0, 0.0);
        w[(1, 2)] = c(2.0, 0.0);
        assert!(spectral_radius(&w).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_non_square() {
        assert!(spectral_radius(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}
