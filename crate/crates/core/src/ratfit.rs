//! Rational approximation of sampled frequency responses and single-pole decomposition.
//!
//! A response `f(ω)` sampled at `ω_r = 2πr/N` is fitted as
//! `R(x) = C(x)/D(x)`, `x = e^{−jω}`, with `C(x) = Σ_{k≤K'} c_k x^k` and
//! `D(x) = 1 + Σ_{k=1..K} d_k x^k`, then rewritten as `Σ_k q_k / (1 − p_k x)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{
    default_ridge, poly_eval, poly_roots, ridge_pinv_solve_with, ComplexMatrix, NumError, DEFAULT_TOLERANCES,
};
use crate::C64;

/// Default pole magnitude ceiling applied by [`stabilize_poles`].
pub const DEFAULT_RHO_MAX: f64 = 0.999;
/// Poles closer than this are treated as repeated.
pub const POLE_SEPARATION_TOL: f64 = 1e-8;
/// Size of the deterministic nudge applied to a repeated pole.
pub const POLE_PERTURBATION: f64 = 1e-6;
/// Denominator magnitude below which evaluation on the unit circle is refused.
pub const NEAR_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RatfitError {
    #[error("numerator order K' = {k_prime} must be below denominator order K = {k}")]
    OrderError { k: usize, k_prime: usize },
    #[error("need at least {needed} samples for K = {k}, K' = {k_prime}, got {found}")]
    TooFewSamples { needed: usize, found: usize, k: usize, k_prime: usize },
    #[error("poles {first} and {second} still coincide after perturbation")]
    RepeatedPoles { first: usize, second: usize },
    #[error("denominator vanishes (|D| = {magnitude:e}) at omega = {omega}")]
    NearPoleOnCircle { omega: f64, magnitude: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerical(#[from] NumError),
}

/// `C(x)/D(x)` with `K' < K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalApprox {
    c: Vec<C64>,
    d: Vec<C64>,
    fit_error: f64,
    /// Regularization used in the coefficient solve (0 unless the plain solve was singular).
    ridge: f64,
}

impl RationalApprox {
    /// `c` holds `c_0..c_{K'}`, `d` holds `d_1..d_K`.
    pub fn new(c: Vec<C64>, d: Vec<C64>) -> Result<Self, RatfitError> {
        if c.is_empty() || d.is_empty() {
            return Err(RatfitError::InvalidArgument("need K >= 1 and K' >= 0".into()));
        }
        let (k, k_prime) = (d.len(), c.len() - 1);
        if k_prime >= k {
            return Err(RatfitError::OrderError { k, k_prime });
        }
        if c.iter().chain(&d).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumError::NonFinite.into());
        }
        Ok(Self { c, d, fit_error: 0.0, ridge: 0.0 })
    }

    pub fn c(&self) -> &[C64] {
        &self.c
    }

    pub fn d(&self) -> &[C64] {
        &self.d
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn k_prime(&self) -> usize {
        self.c.len() - 1
    }

    /// `(2π/N) Σ_r |f_r − R(ω_r)|²` over the fitted samples.
    pub fn fit_error(&self) -> f64 {
        self.fit_error
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Ascending coefficients of `D`, including the constant 1.
    pub fn denominator(&self) -> Vec<C64> {
        std::iter::once(C64::new(1.0, 0.0)).chain(self.d.iter().cloned()).collect()
    }
}

fn unit_phasor(omega: f64) -> C64 {
    C64::from_polar(1.0, -omega)
}

fn sample_omega(r: usize, n: usize) -> f64 {
    TAU * r as f64 / n as f64
}

/// Fits `R = C/D` to `f` sampled at `ω_r = 2πr/N` by solving `[Ω₁ Ω₂] [c; d] ≈ f`
/// with rows `Ω₁⁽ʳ⁾ = [1, x_r, …, x_r^{K'}]` and `Ω₂⁽ʳ⁾ = [−f_r x_r, …, −f_r x_r^K]`.
///
/// The plain least-squares solve is tried first; if it is numerically singular,
/// the default ridge is applied.
pub fn fit_rational(f: &[C64], k: usize, k_prime: usize) -> Result<RationalApprox, RatfitError> {
    if k_prime >= k {
        return Err(RatfitError::OrderError { k, k_prime });
    }
    let n = f.len();
    let needed = k + k_prime + 1;
    if n < needed {
        return Err(RatfitError::TooFewSamples { needed, found: n, k, k_prime });
    }
    let cols = needed;
    let omega = ComplexMatrix::from_fn(n, cols, |r, j| {
        let x = unit_phasor(sample_omega(r, n));
        if j <= k_prime {
            x.powu(j as u32)
        } else {
            -f[r] * x.powu((j - k_prime) as u32)
        }
    });
    let solution = match ridge_pinv_solve_with(&omega, f, 0.0, &DEFAULT_TOLERANCES) {
        Ok(s) => s,
        Err(NumError::SingularSystem { condition }) => {
            let ridge = default_ridge(&omega, &DEFAULT_TOLERANCES);
            log::warn!("rational fit is ill-conditioned (estimate {condition:e}); using ridge {ridge:e}");
            ridge_pinv_solve_with(&omega, f, ridge, &DEFAULT_TOLERANCES)?
        }
        Err(e) => return Err(e.into()),
    };
    let mut approx = RationalApprox::new(solution.x[..=k_prime].to_vec(), solution.x[k_prime + 1..].to_vec())?;
    approx.ridge = solution.ridge;
    let mut err = 0.0;
    for (r, fr) in f.iter().enumerate() {
        let x = unit_phasor(sample_omega(r, n));
        let model = poly_eval(&approx.c, x) / poly_eval(&approx.denominator(), x);
        err += (fr - model).norm_sqr();
    }
    approx.fit_error = TAU / n as f64 * err;
    Ok(approx)
}

/// `C(x)/D(x)` at `x = e^{−jω}`.
pub fn eval_rational(ra: &RationalApprox, omega: f64) -> Result<C64, RatfitError> {
    let x = unit_phasor(omega);
    let den = poly_eval(&ra.denominator(), x);
    if den.norm() <= NEAR_POLE_TOL {
        return Err(RatfitError::NearPoleOnCircle { omega, magnitude: den.norm() });
    }
    Ok(poly_eval(&ra.c, x) / den)
}

/// Poles `p_k` and residues `q_k` of `Σ_k q_k / (1 − p_k x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleResidueSet {
    pub poles: Vec<C64>,
    pub residues: Vec<C64>,
    /// Set for each pole whose magnitude was clamped by [`stabilize_poles`].
    pub stabilized: Vec<bool>,
    /// True when repeated poles had to be nudged apart.
    pub perturbed: bool,
}

impl PoleResidueSet {
    pub fn new(poles: Vec<C64>, residues: Vec<C64>) -> Result<Self, RatfitError> {
        if poles.is_empty() || poles.len() != residues.len() {
            return Err(RatfitError::InvalidArgument(format!(
                "need equal, non-zero pole and residue counts ({} vs {})",
                poles.len(),
                residues.len()
            )));
        }
        let stabilized = vec![false; poles.len()];
        Ok(Self { poles, residues, stabilized, perturbed: false })
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn stabilized_count(&self) -> usize {
        self.stabilized.iter().filter(|&&s| s).count()
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

fn closest_pair(poles: &[C64]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            let d = (poles[i] - poles[j]).norm();
            if best.is_none_or(|b| d < b.2) {
                best = Some((i, j, d));
            }
        }
    }
    best
}

/// Splits `C/D` into single-pole terms.
///
/// The poles are the reciprocals of the roots of `D(x)`; equivalently they are the
/// roots of the monic reversed polynomial `z^K + d_1 z^{K−1} + … + d_K`, which is how
/// they are computed (this also covers a zero pole when `d_K = 0`). With
/// `N₁(z) = Σ_i c_i z^{K−1−i}`, the residues are `q_k = N₁(p_k) / Π_{j≠k}(p_k − p_j)`,
/// the same quantity as `C(x_k) / Π_{j≠k}(1 − p_j x_k)` at `x_k = 1/p_k`.
pub fn partial_fractions(ra: &RationalApprox) -> Result<PoleResidueSet, RatfitError> {
    let k = ra.k();
    let reversed: Vec<C64> = ra.d.iter().rev().cloned().chain(std::iter::once(C64::new(1.0, 0.0))).collect();
    let mut poles = poly_roots(&reversed)?;

    let mut perturbed = false;
    if let Some((_, _, sep)) = closest_pair(&poles) {
        if sep < POLE_SEPARATION_TOL {
            perturbed = true;
            for idx in 1..poles.len() {
                if (0..idx).any(|j| (poles[idx] - poles[j]).norm() < POLE_SEPARATION_TOL) {
                    poles[idx] += C64::from_polar(POLE_PERTURBATION, idx as f64);
                }
            }
            if let Some((first, second, sep)) = closest_pair(&poles) {
                if sep < POLE_SEPARATION_TOL {
                    return Err(RatfitError::RepeatedPoles { first, second });
                }
            }
            log::warn!("repeated poles perturbed apart by {POLE_PERTURBATION:e}");
        }
    }

    // N₁ in ascending powers of z: coefficient of z^{K−1−i} is c_i
    let mut n1 = vec![C64::new(0.0, 0.0); k];
    for (i, &ci) in ra.c.iter().enumerate() {
        n1[k - 1 - i] = ci;
    }
    let residues = poles
        .iter()
        .enumerate()
        .map(|(a, &pa)| {
            let den: C64 = poles.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &pb)| pa - pb).product();
            poly_eval(&n1, pa) / den
        })
        .collect();
    let mut prs = PoleResidueSet::new(poles, residues)?;
    prs.perturbed = perturbed;
    Ok(prs)
}

/// Clamps every pole with `|p| > rho_max` to magnitude `rho_max`, keeping its phase
/// and residue.
pub fn stabilize_poles(prs: &PoleResidueSet, rho_max: f64) -> Result<PoleResidueSet, RatfitError> {
    if !(rho_max > 0.0 && rho_max < 1.0) {
        return Err(RatfitError::InvalidArgument(format!("rho_max must lie in (0, 1), got {rho_max}")));
    }
    let mut out = prs.clone();
    for (p, flag) in out.poles.iter_mut().zip(out.stabilized.iter_mut()) {
        let mag = p.norm();
        if mag > rho_max {
            *p *= rho_max / mag;
            *flag = true;
        }
    }
    Ok(out)
}

/// `Σ_k q_k / (1 − p_k e^{−jω})`.
pub fn eval_pf(prs: &PoleResidueSet, omega: f64) -> Result<C64, RatfitError> {
    let x = unit_phasor(omega);
    let mut sum = C64::new(0.0, 0.0);
    for (&p, &q) in prs.poles.iter().zip(&prs.residues) {
        let den = C64::new(1.0, 0.0) - p * x;
        if den.norm() <= NEAR_POLE_TOL {
            return Err(RatfitError::NearPoleOnCircle { omega, magnitude: den.norm() });
        }
        sum += q / den;
    }
    Ok(sum)
}

/// Samples of `Σ_k q_k / (1 − p_k e^{−jω_r})` at `ω_r = 2πr/N`.
pub fn expand_pf(prs: &PoleResidueSet, n: usize) -> Result<Vec<C64>, RatfitError> {
    (0..n).map(|r| eval_pf(prs, sample_omega(r, n))).collect()
}

/// One fitted basis vector: its rational form and the (stabilized) single-pole terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub k: usize,
    pub k_prime: usize,
    pub c: Vec<C64>,
    pub d: Vec<C64>,
    pub poles: Vec<C64>,
    pub residues: Vec<C64>,
    pub stabilized: Vec<bool>,
    pub perturbed: bool,
    pub fit_error: f64,
    pub ridge: f64,
}

impl WeightEntry {
    pub fn new(ra: &RationalApprox, prs: &PoleResidueSet) -> Self {
        Self {
            k: ra.k(),
            k_prime: ra.k_prime(),
            c: ra.c.clone(),
            d: ra.d.clone(),
            poles: prs.poles.clone(),
            residues: prs.residues.clone(),
            stabilized: prs.stabilized.clone(),
            perturbed: prs.perturbed,
            fit_error: ra.fit_error,
            ridge: ra.ridge,
        }
    }

    pub fn pole_residues(&self) -> Result<PoleResidueSet, RatfitError> {
        let mut prs = PoleResidueSet::new(self.poles.clone(), self.residues.clone())?;
        if self.stabilized.len() != prs.len() {
            return Err(RatfitError::InvalidArgument("stabilized flags do not match pole count".into()));
        }
        prs.stabilized = self.stabilized.clone();
        prs.perturbed = self.perturbed;
        Ok(prs)
    }
}

/// Fit, decompose and stabilize one sampled response.
pub fn synthesize_filter(f: &[C64], k: usize, k_prime: usize, rho_max: f64) -> Result<WeightEntry, RatfitError> {
    let ra = fit_rational(f, k, k_prime)?;
    let prs = stabilize_poles(&partial_fractions(&ra)?, rho_max)?;
    Ok(WeightEntry::new(&ra, &prs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sort(mut v: Vec<(C64, C64)>) -> Vec<(C64, C64)> {
        v.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        v
    }

    fn planted(rng: &mut RngStream, k: usize, max_mag: f64, min_sep: f64) -> PoleResidueSet {
        let mut poles: Vec<C64> = Vec::new();
        while poles.len() < k {
            let p = C64::from_polar(max_mag * rng.unit().sqrt(), rng.uniform(0.0, TAU));
            if poles.iter().all(|q| (p - q).norm() >= min_sep) {
                poles.push(p);
            }
        }
        let residues = (0..k).map(|_| rng.complex_uniform()).collect();
        PoleResidueSet::new(poles, residues).unwrap()
    }

    #[test]
    fn order_constraint_enforced() {
        assert!(matches!(RationalApprox::new(vec![c(1.0, 0.0); 2], vec![c(0.5, 0.0)]), Err(RatfitError::OrderError { .. })));
        assert!(matches!(fit_rational(&[c(1.0, 0.0); 16], 2, 2), Err(RatfitError::OrderError { .. })));
        assert!(matches!(fit_rational(&[c(1.0, 0.0); 3], 2, 1), Err(RatfitError::TooFewSamples { .. })));
    }

    #[test]
    fn recovers_single_pole() {
        let f: Vec<C64> = (0..32).map(|r| c(0.7, 0.0) / (c(1.0, 0.0) - 0.5 * unit_phasor(sample_omega(r, 32)))).collect();
        let ra = fit_rational(&f, 1, 0).unwrap();
        assert!((ra.c()[0] - c(0.7, 0.0)).norm() < 1e-12);
        assert!((ra.d()[0] - c(-0.5, 0.0)).norm() < 1e-12);
        assert!(ra.fit_error() <= 1e-12);
    }

    #[test]
    fn recovers_planted_third_order() {
        // C = 1 + 0.5x − 0.2x², D = (1 − 0.8x)(1 + 0.3jx)(1 − 0.5x)
        let den = crate::numkit::poly_from_roots(&[c(1.25, 0.0), c(0.0, 1.0 / 0.3), c(2.0, 0.0)], c(1.0, 0.0));
        let scale = den[0];
        let d: Vec<C64> = den[1..].iter().map(|z| z / scale).collect();
        let num = vec![c(1.0, 0.0), c(0.5, 0.0), c(-0.2, 0.0)];
        let truth = RationalApprox::new(num.clone(), d.clone()).unwrap();
        let f: Vec<C64> = (0..64).map(|r| eval_rational(&truth, sample_omega(r, 64)).unwrap()).collect();
        let ra = fit_rational(&f, 3, 2).unwrap();
        for (a, b) in ra.c().iter().zip(&num).chain(ra.d().iter().zip(&d)) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn paper_orders_fit() {
        let mut rng = RngStream::new(1);
        let prs = planted(&mut rng, 10, 0.8, 0.05);
        let f = expand_pf(&prs, 128).unwrap();
        let ra = fit_rational(&f, 10, 9).unwrap();
        assert_eq!((ra.k(), ra.k_prime()), (10, 9));
        assert!(ra.fit_error() < 1e-12);
    }

    #[test]
    fn single_pole_decomposition() {
        let prs = partial_fractions(&RationalApprox::new(vec![c(1.0, 0.0)], vec![c(-0.5, 0.0)]).unwrap()).unwrap();
        assert!((prs.poles[0] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((prs.residues[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_pole_decomposition() {
        let ra = RationalApprox::new(vec![c(1.0, 0.0)], vec![c(-0.25, 0.0), c(-0.125, 0.0)]).unwrap();
        let prs = partial_fractions(&ra).unwrap();
        let pairs = sort(prs.poles.iter().cloned().zip(prs.residues.iter().cloned()).collect());
        assert!((pairs[0].0 - c(-0.25, 0.0)).norm() < 1e-12);
        assert!((pairs[0].1 - c(1.0 / 3.0, 0.0)).norm() < 1e-12);
        assert!((pairs[1].0 - c(0.5, 0.0)).norm() < 1e-12);
        assert!((pairs[1].1 - c(2.0 / 3.0, 0.0)).norm() < 1e-12);
        for r in 0..64 {
            let w = sample_omega(r, 64);
            assert!((eval_rational(&ra, w).unwrap() - eval_pf(&prs, w).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_pole_is_handled() {
        // D = 1 − 0.5x + 0x², so one pole sits at the origin
        let ra = RationalApprox::new(vec![c(1.0, 0.0), c(0.2, 0.0)], vec![c(-0.5, 0.0), c(0.0, 0.0)]).unwrap();
        let prs = partial_fractions(&ra).unwrap();
        for r in 0..16 {
            let w = sample_omega(r, 16);
            assert!((eval_rational(&ra, w).unwrap() - eval_pf(&prs, w).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn repeated_poles_are_perturbed() {
        // D = (1 − 0.5x)²
        let ra = RationalApprox::new(vec![c(1.0, 0.0)], vec![c(-1.0, 0.0), c(0.25, 0.0)]).unwrap();
        let prs = partial_fractions(&ra).unwrap();
        assert!(prs.perturbed);
        assert!((prs.poles[0] - prs.poles[1]).norm() >= POLE_SEPARATION_TOL);
    }

    #[test]
    fn planted_round_trip() {
        let mut rng = RngStream::new(2);
        for trial in 0..20 {
            let k = 1 + trial % 10;
            let prs = planted(&mut rng, k, 0.8, 0.05);
            let f = expand_pf(&prs, 128).unwrap();
            let got = partial_fractions(&fit_rational(&f, k, k - 1).unwrap()).unwrap();
            for (p, q) in prs.poles.iter().zip(&prs.residues) {
                let j = (0..k)
                    .min_by(|&a, &b| (got.poles[a] - p).norm().total_cmp(&(got.poles[b] - p).norm()))
                    .unwrap();
                assert!((got.poles[j] - p).norm() < 1e-6, "trial {trial}");
                assert!((got.residues[j] - q).norm() < 1e-5, "trial {trial}");
            }
        }
    }

    #[test]
    fn stabilization_clamps_magnitude() {
        let p = C64::from_polar(1.25, std::f64::consts::FRAC_PI_4);
        let prs = PoleResidueSet::new(vec![p, c(0.3, 0.0)], vec![c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let s = stabilize_poles(&prs, DEFAULT_RHO_MAX).unwrap();
        assert!((s.poles[0] - C64::from_polar(0.999, std::f64::consts::FRAC_PI_4)).norm() < 1e-14);
        assert_eq!(s.stabilized, vec![true, false]);
        assert_eq!(s.residues, prs.residues);
        assert_eq!(s.poles[1], prs.poles[1]);
        assert!(stabilize_poles(&prs, 1.0).is_err());

        let inside = PoleResidueSet::new(vec![c(0.5, 0.1)], vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(stabilize_poles(&inside, 0.999).unwrap(), inside);
    }

    #[test]
    fn clamped_filter_has_summable_impulse_response() {
        let prs = PoleResidueSet::new(vec![C64::from_polar(3.0, 1.0), c(-1.5, 0.0)], vec![c(1.0, 0.0), c(0.5, 0.5)])
            .unwrap();
        let s = stabilize_poles(&prs, 0.999).unwrap();
        let steps = 10_000;
        let mut energy = 0.0;
        for n in 0..steps {
            let h: C64 = s.poles.iter().zip(&s.residues).map(|(p, q)| q * p.powu(n)).sum();
            energy += h.norm_sqr();
        }
        // tail beyond the truncation is bounded by a geometric series
        let q_sum: f64 = s.residues.iter().map(|q| q.norm()).sum();
        let rho = s.max_pole_magnitude();
        let tail = q_sum * q_sum * rho.powi(2 * steps as i32) / (1.0 - rho * rho);
        assert!(energy.is_finite() && tail < energy);
    }

    #[test]
    fn evaluation_examples() {
        let ra = RationalApprox::new(vec![c(1.0, 0.0)], vec![c(-0.5, 0.0)]).unwrap();
        assert!((eval_rational(&ra, 0.0).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
        let prs = PoleResidueSet::new(vec![c(0.5, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        assert!((eval_pf(&prs, std::f64::consts::PI).unwrap() - c(2.0 / 3.0, 0.0)).norm() < 1e-14);

        let on_circle = RationalApprox::new(vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]).unwrap();
        assert!(matches!(eval_rational(&on_circle, 0.0), Err(RatfitError::NearPoleOnCircle { .. })));
        let pf_on_circle = PoleResidueSet::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(eval_pf(&pf_on_circle, 0.0), Err(RatfitError::NearPoleOnCircle { .. })));
    }

    #[test]
    fn forms_agree_on_random_planted_systems() {
        let mut rng = RngStream::new(3);
        for _ in 0..10 {
            let k = 2 + rng.index(8);
            let num: Vec<C64> = (0..k).map(|_| rng.complex_uniform()).collect();
            let poles = planted(&mut rng, k, 0.9, 0.05).poles;
            let den = crate::numkit::poly_from_roots(&poles.iter().map(|p| p.inv()).collect::<Vec<_>>(), c(1.0, 0.0));
            let d: Vec<C64> = den[1..].iter().map(|z| z / den[0]).collect();
            let ra = RationalApprox::new(num, d).unwrap();
            let prs = partial_fractions(&ra).unwrap();
            for r in 0..256 {
                let w = sample_omega(r, 256);
                let a = eval_rational(&ra, w).unwrap();
                let b = eval_pf(&prs, w).unwrap();
                assert!((a - b).norm() <= 1e-8 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn fit_error_non_increasing_in_k() {
        // a response that no low order fits exactly: the inverse of a 3-tap channel times a delay-spread ripple
        let n = 128;
        let f: Vec<C64> = (0..n)
            .map(|r| {
                let x = unit_phasor(sample_omega(r, n));
                (c(1.0, 0.0) + 0.4 * x + c(0.1, 0.2) * x * x).inv() * (c(1.0, 0.0) + 0.3 * x.powu(7))
            })
            .collect();
        let mut last = f64::INFINITY;
        for k in [2, 4, 6, 8, 10] {
            let e = fit_rational(&f, k, k - 1).unwrap().fit_error();
            assert!(e <= last + 1e-9, "K = {k}: {e} > {last}");
            last = e;
        }
    }

    #[test]
    fn weight_entry_round_trips_through_json() {
        let mut rng = RngStream::new(4);
        let f = expand_pf(&planted(&mut rng, 4, 0.8, 0.05), 64).unwrap();
        let w = synthesize_filter(&f, 4, 3, DEFAULT_RHO_MAX).unwrap();
        let text = serde_json::to_string(&w).unwrap();
        let back: WeightEntry = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.pole_residues().unwrap().len(), 4);
    }
}
