use std::f64::consts::TAU;

use super::{NumError, C64};

/// `H[n] = Σ_ℓ h_ℓ e^{−j2πnℓ/N}` by direct summation.
///
/// Exponents are reduced modulo `N` before the twiddle lookup so every term
/// uses one of `N` exactly-tabulated unit phasors.
pub fn dft_response(h: &[C64], n: usize) -> Result<Vec<C64>, NumError> {
    if h.is_empty() {
        return Err(NumError::Empty);
    }
    if n < h.len() {
        return Err(NumError::InvalidArgument(format!(
            "need N >= L (N = {n}, L = {})",
            h.len()
        )));
    }
    let twiddle: Vec<C64> = (0..n)
        .map(|k| if k == 0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, -TAU * k as f64 / n as f64) })
        .collect();
    Ok((0..n)
        .map(|k| {
            h.iter()
                .enumerate()
                .map(|(l, &tap)| tap * twiddle[(k * l) % n])
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn flat_channel_is_all_ones() {
        let r = dft_response(&[c(1.0, 0.0)], 8).unwrap();
        assert!(r.iter().all(|z| *z == c(1.0, 0.0)));
    }

    #[test]
    fn two_tap_two_points() {
        let r = dft_response(&[c(1.0, 0.0), c(1.0, 0.0)], 2).unwrap();
        assert!((r[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(r[1].norm() < 1e-15);
    }

    #[test]
    fn matches_brute_force_sum() {
        let h = [c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)];
        let r = dft_response(&h, 16).unwrap();
        for (k, got) in r.iter().enumerate() {
            let mut want = c(0.0, 0.0);
            for (l, tap) in h.iter().enumerate() {
                let ang = -TAU * (k * l) as f64 / 16.0;
                want += tap * c(ang.cos(), ang.sin());
            }
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn dc_bin_is_exact_tap_sum() {
        let h = [c(0.1, 0.7), c(-0.3, 0.2), c(1e-3, -5.0)];
        let r = dft_response(&h, 5).unwrap();
        let sum: C64 = h.iter().sum();
        assert_eq!(r[0], sum);
    }

    #[test]
    fn requires_n_at_least_l() {
        assert!(dft_response(&[c(1.0, 0.0); 4], 3).is_err());
    }
}
