use std::f64::consts::TAU;

use super::{NumError, Tolerances, C64, DEFAULT_TOLERANCES};

/// Horner evaluation; `coeffs[i]` multiplies `x^i`.
pub fn poly_eval(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Value and first derivative in one Horner pass.
fn eval_with_derivative(coeffs: &[C64], x: C64) -> (C64, C64) {
    let zero = C64::new(0.0, 0.0);
    coeffs.iter().rev().fold((zero, zero), |(p, dp), &c| (p * x + c, dp * x + p))
}

/// Ascending coefficients of `leading · Π (x − r)`.
pub fn poly_from_roots(roots: &[C64], leading: C64) -> Vec<C64> {
    let mut coeffs = vec![leading];
    for &r in roots {
        let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>, NumError> {
    poly_roots_with(coeffs, &DEFAULT_TOLERANCES)
}

/// All roots of a polynomial given by ascending coefficients, by Aberth–Ehrlich
/// simultaneous iteration.
///
/// Exact zero roots (vanishing low-order coefficients) are split off first.
/// A root is accepted when its backward error `|p(z)| / Σ|c_i||z|^i` is below
/// `tol.roots_residual`; for roots of modulus at most one this bound is at
/// least as strict as `|p(z)| ≤ tol · max|c_i|`.
pub fn poly_roots_with(coeffs: &[C64], tol: &Tolerances) -> Result<Vec<C64>, NumError> {
    if coeffs.len() < 2 {
        return Err(NumError::InvalidArgument("polynomial degree must be at least 1".into()));
    }
    if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumError::NonFinite);
    }
    let lead = *coeffs.last().unwrap();
    if lead.norm() <= 1e-12 {
        return Err(NumError::InvalidArgument(format!(
            "leading coefficient magnitude {:e} too small",
            lead.norm()
        )));
    }

    let zero_roots = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let monic: Vec<C64> = coeffs[zero_roots..].iter().map(|&c| c / lead).collect();
    let degree = monic.len() - 1;
    let mut roots = vec![C64::new(0.0, 0.0); zero_roots];
    if degree == 0 {
        return Ok(roots);
    }
    if degree == 1 {
        roots.push(-monic[0]);
        return Ok(roots);
    }

    let radius = monic[0].norm().powf(1.0 / degree as f64);
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let mut z: Vec<C64> = (0..degree)
        .map(|k| C64::from_polar(radius, TAU * k as f64 / degree as f64 + 0.4))
        .collect();
    let mut done = vec![false; degree];

    let mut iterations = 0;
    while iterations < tol.roots_max_iterations && done.iter().any(|d| !d) {
        iterations += 1;
        for k in 0..degree {
            if done[k] {
                continue;
            }
            let (p, dp) = eval_with_derivative(&monic, z[k]);
            if p.norm() == 0.0 {
                done[k] = true;
                continue;
            }
            let repulsion: C64 = (0..degree)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = dp - p * repulsion;
            let step = if denom.norm() == 0.0 {
                // stationary point: nudge off it
                C64::from_polar(1e-8 * (1.0 + z[k].norm()), k as f64)
            } else {
                p / denom
            };
            z[k] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[k].norm().max(f64::MIN_POSITIVE) {
                done[k] = true;
            }
        }
    }

    let backward = |x: C64| {
        let scale: f64 = monic.iter().enumerate().map(|(i, c)| c.norm() * x.norm().powi(i as i32)).sum();
        poly_eval(&monic, x).norm() / scale
    };
    if z.iter().any(|&x| !(backward(x) <= tol.roots_residual)) {
        return Err(NumError::NoConvergence {
            routine: "poly_roots",
            iterations,
            best: Some(roots.iter().cloned().chain(z).collect()),
        });
    }
    roots.extend(z);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn factored_quadratic() {
        // (1 − 0.5x)(1 + 0.25x)
        let coeffs = [c(1.0, 0.0), c(-0.25, 0.0), c(-0.125, 0.0)];
        let r = sorted(poly_roots(&coeffs).unwrap());
        assert!((r[0] - c(-4.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-12);
        for x in r {
            assert!(poly_eval(&coeffs, x).norm() <= 1e-8);
        }
    }

    #[test]
    fn imaginary_pair() {
        let r = sorted(poly_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap());
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn degree_eight_from_known_roots() {
        let known: Vec<C64> = (0..8)
            .map(|k| C64::from_polar(0.3 + 0.1 * k as f64, 0.7 * k as f64 + 0.2))
            .collect();
        let coeffs = poly_from_roots(&known, c(1.5, -0.5));
        let found = poly_roots(&coeffs).unwrap();
        let max_coeff = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for want in &known {
            let best = found.iter().map(|f| (f - want).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6);
        }
        for x in &found {
            assert!(poly_eval(&coeffs, *x).norm() <= 1e-8 * max_coeff);
        }
    }

    #[test]
    fn zero_roots_split_off() {
        // x^2 (x - 3)
        let r = sorted(poly_roots(&[c(0.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)]).unwrap());
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!((r[2] - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_tiny_leading_coefficient() {
        assert!(poly_roots(&[c(1.0, 0.0), c(1e-13, 0.0)]).is_err());
        assert!(poly_roots(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let coeffs = poly_from_roots(&[c(0.5, 0.1), c(-0.2, 0.7), c(0.9, -0.3)], c(1.0, 0.0));
        let tol = Tolerances { roots_max_iterations: 1, ..Tolerances::default() };
        match poly_roots_with(&coeffs, &tol) {
            Err(NumError::NoConvergence { best: Some(best), .. }) => assert_eq!(best.len(), 3),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn expand_then_solve_is_identity(
            mags in proptest::collection::vec(0.1f64..2.0, 1..9),
            seed in 0.0f64..std::f64::consts::TAU,
        ) {
            let roots: Vec<C64> = mags
                .iter()
                .enumerate()
                .map(|(k, &m)| C64::from_polar(m, seed + 1.1 * k as f64))
                .collect();
            let min_sep = roots
                .iter()
                .enumerate()
                .flat_map(|(i, a)| roots[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            prop_assume!(min_sep > 1e-3);
            let found = poly_roots(&poly_from_roots(&roots, c(1.0, 0.0))).unwrap();
            for want in &roots {
                let best = found.iter().map(|f| (f - want).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-6, "root {} missed by {}", want, best);
            }
        }
    }
}
