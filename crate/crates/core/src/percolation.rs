//! Bernoulli bond percolation on a Galton-Watson tree.
//!
//! The open cluster of the root is again a Galton-Watson tree, with the
//! binomially thinned law `p̄`. Everything downstream is expressed through
//! the original generating function `f` evaluated at
//! `lambda = 1 - p + p * rho`, where `rho` is the extinction probability of
//! the thinned process:
//!
//! * backbone law `p̃_k = f^(k)(lambda)/k! * p^k (1 - rho)^(k-1)`, `k >= 1`
//! * bush law `p̂_k = p̄_k rho^(k-1)`, `k >= 0`, with mean `m̂ = p f'(lambda)`
//! * mean bush size `M = 1 / (1 - m̂)`
//! * mean number of bush excursions at a backbone vertex of degree `k + 1`,
//!   `N(p, k) = p rho / (k+1) * f^(k+1)(lambda) / f^(k)(lambda)`

use crate::error::{Error, Result};
use crate::offspring::OffspringLaw;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Tail mass of the original law beyond which series are cut.
pub(crate) const SERIES_TAIL: f64 = 1e-16;

/// Margin below 1 at which a derived mean counts as critical.
const CRITICAL_MARGIN: f64 = 1e-12;

fn check_retention(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name: "p",
            value: p,
            reason: "retaining probability must lie in (0, 1]",
        })
    }
}

fn check_supercritical(law: &OffspringLaw, p: f64) -> Result<()> {
    check_retention(p)?;
    if law.is_degenerate() {
        return Err(Error::DegenerateLaw);
    }
    let m = law.mean();
    if m <= 1.0 {
        return Err(Error::NotSupercritical { mean: m });
    }
    if p * m <= 1.0 {
        return Err(Error::BelowCritical { p, critical: 1.0 / m });
    }
    Ok(())
}

/// `p̄_l`, the probability that a vertex keeps exactly `l` open child edges.
///
/// Does not require supercriticality.
pub fn thinned_pmf(law: &OffspringLaw, p: f64, l: usize) -> Result<f64> {
    check_retention(p)?;
    // sum_r p_{l+r} C(l+r, r) (1-p)^r = f^(l)(1-p) / l!
    Ok(p.powi(l as i32) * law.taylor_coefficient(1.0 - p, l))
}

/// Smallest fixed point of `rho = f(1 - p + p rho)`, returned with `lambda`.
///
/// Monotone iteration from 0, then Newton polish on
/// `g(x) = f(1 - p + p x) - x`.
pub fn solve_rho(law: &OffspringLaw, p: f64, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        });
    }
    check_supercritical(law, p)?;

    let lam = |x: f64| 1.0 - p + p * x;
    let mut rho = 0.0;
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let next = law.pgf(lam(rho));
        last_step = (next - rho).abs();
        rho = next;
        if last_step <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            last_step,
        });
    }

    let residual = |x: f64| law.pgf(lam(x)) - x;
    let mut g = residual(rho);
    for _ in 0..50 {
        if g == 0.0 {
            break;
        }
        let slope = p * law.taylor_coefficient(lam(rho), 1) - 1.0;
        if slope >= 0.0 {
            break;
        }
        let cand = rho - g / slope;
        if !(0.0..1.0).contains(&cand) {
            break;
        }
        let g_cand = residual(cand);
        if g_cand.abs() >= g.abs() {
            break;
        }
        rho = cand;
        g = g_cand;
    }
    if g.abs() > 10.0 * tol {
        return Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            last_step: g.abs(),
        });
    }
    Ok((rho, lam(rho)))
}

/// A supercritical percolated Galton-Watson model with its extinction data cached.
#[derive(Debug, Clone)]
pub struct PercolatedModel {
    law: OffspringLaw,
    p: f64,
    rho: f64,
    lambda: f64,
    m_hat: f64,
    tol: f64,
}

impl PercolatedModel {
    pub fn new(law: OffspringLaw, p: f64) -> Result<Self> {
        Self::with_tol(law, p, DEFAULT_TOL)
    }

    pub fn with_tol(law: OffspringLaw, p: f64, tol: f64) -> Result<Self> {
        let (rho, lambda) = solve_rho(&law, p, tol)?;
        let m_hat = p * law.taylor_coefficient(lambda, 1);
        Ok(PercolatedModel {
            law,
            p,
            rho,
            lambda,
            m_hat,
            tol,
        })
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean offspring of the bush law, `p f'(lambda)`.
    pub fn m_hat(&self) -> f64 {
        self.m_hat
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `(1 - lambda) f'(lambda) / (1 - f(lambda))`, the second expression for `m̂`.
    pub fn m_hat_ratio(&self) -> f64 {
        let lam = self.lambda;
        (1.0 - lam) * self.law.taylor_coefficient(lam, 1) / (1.0 - self.law.pgf(lam))
    }

    /// Index past which truncated series over `p̄`, `p̃`, `p̂` stop.
    pub fn series_cutoff(&self) -> usize {
        self.law.tail_cutoff(SERIES_TAIL)
    }

    pub fn thinned_pmf(&self, l: usize) -> f64 {
        self.p.powi(l as i32) * self.law.taylor_coefficient(1.0 - self.p, l)
    }

    /// `d rho / d p = -(1 - rho) f'(lambda) / (1 - p f'(lambda))`.
    pub fn rho_derivative(&self) -> Result<f64> {
        let fp = self.law.taylor_coefficient(self.lambda, 1);
        let denom = 1.0 - self.p * fp;
        if denom.abs() <= CRITICAL_MARGIN {
            return Err(Error::Critical {
                value: self.p * fp,
            });
        }
        Ok(-(1.0 - self.rho) * fp / denom)
    }

    /// `p̃_k`; zero for `k = 0` since the backbone has no leaves.
    pub fn backbone_pmf(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.law.taylor_coefficient(self.lambda, k)
            * self.p.powi(k as i32)
            * (1.0 - self.rho).powi(k as i32 - 1)
    }

    /// Mean total number of red vertices in a bush, counting its root.
    pub fn bush_mean_size(&self) -> Result<f64> {
        if self.m_hat >= 1.0 - CRITICAL_MARGIN {
            return Err(Error::Critical { value: self.m_hat });
        }
        Ok(1.0 / (1.0 - self.m_hat))
    }

    /// `N(p, k)` for a backbone vertex of degree `k + 1`.
    pub fn mean_excursions(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument {
                name: "k",
                value: 0.0,
                reason: "backbone vertices have at least one backbone child",
            });
        }
        let ck = self.law.taylor_coefficient(self.lambda, k);
        if ck == 0.0 {
            return Err(Error::ImpossibleDegree {
                order: k,
                degree: k + 1,
            });
        }
        // f^(k+1)/f^(k) / (k+1) = c_{k+1} / c_k for Taylor coefficients c
        let ck1 = self.law.taylor_coefficient(self.lambda, k + 1);
        Ok(self.p * self.rho * ck1 / ck)
    }

    /// `p̂_k = p̄_k rho^(k-1)`.
    pub fn bush_pmf(&self, k: usize) -> Result<f64> {
        if self.rho == 0.0 {
            return Err(Error::NoBushes);
        }
        Ok(self.thinned_pmf(k) * self.rho.powi(k as i32 - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::parse_law;
    use approx::assert_abs_diff_eq;

    fn binary() -> OffspringLaw {
        parse_law("pmf:0,0,1").unwrap()
    }

    #[test]
    fn thinned_examples() {
        let m = PercolatedModel::new(binary(), 0.75).unwrap();
        assert_abs_diff_eq!(m.thinned_pmf(2), 0.5625, epsilon = 1e-15);
        assert_abs_diff_eq!(m.thinned_pmf(1), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(m.thinned_pmf(0), 0.0625, epsilon = 1e-15);
        assert_eq!(m.thinned_pmf(3), 0.0);

        // direct double sum sum_r p_r (1-p)^r for Geometric(0.5) at p = 0.8
        let g = parse_law("geometric:0.5").unwrap();
        let mut oracle = 0.0;
        for r in 0..200 {
            oracle += 0.5f64.powi(r) * 0.5 * 0.2f64.powi(r);
        }
        let v = thinned_pmf(&g, 0.8, 0).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.5 / 0.9, epsilon = 1e-14);
    }

    #[test]
    fn thinned_matches_double_sum() {
        // p̄_l = sum_r p_{l+r} p^l (1-p)^r C(l+r, r), truncated
        let p: f64 = 0.7;
        for spec in ["poisson:2", "binomial:3,0.8", "geometric:0.6", "pmf:0.1,0.2,0.3,0.4"] {
            let law = parse_law(spec).unwrap();
            for l in 0..6 {
                let mut s = 0.0;
                for r in 0..150usize {
                    s += law.pmf(l + r)
                        * p.powi(l as i32)
                        * (1.0 - p).powi(r as i32)
                        * crate::offspring::binomial_coeff((l + r) as u64, r as u64);
                }
                assert_abs_diff_eq!(thinned_pmf(&law, p, l).unwrap(), s, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn binary_rho_closed_form() {
        let (rho, lam) = solve_rho(&binary(), 0.75, 1e-12).unwrap();
        assert_abs_diff_eq!(rho, 1.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lam, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn no_extinction_without_leaves() {
        for spec in ["pmf:0,0,1", "pmf:0,0.5,0,0.5", "binomial:3,1"] {
            let (rho, lam) = solve_rho(&parse_law(spec).unwrap(), 1.0, 1e-12).unwrap();
            assert_eq!(rho, 0.0);
            assert_eq!(lam, 0.0);
        }
    }

    #[test]
    fn poisson_rho_matches_long_iteration() {
        let law = parse_law("poisson:2").unwrap();
        let mut r = 0.0;
        for _ in 0..10_000 {
            r = law.pgf(1.0 - 0.9 + 0.9 * r);
        }
        let (rho, _) = solve_rho(&law, 0.9, 1e-14).unwrap();
        assert_abs_diff_eq!(rho, r, epsilon = 1e-10);
        assert_abs_diff_eq!(rho, 0.267_570_033_363_233_5, epsilon = 1e-10);
    }

    #[test]
    fn solver_errors() {
        let bin = binary();
        assert!(matches!(
            solve_rho(&bin, 0.5, 1e-12),
            Err(Error::BelowCritical { .. })
        ));
        assert!(matches!(
            solve_rho(&parse_law("pmf:0,1").unwrap(), 0.9, 1e-12),
            Err(Error::DegenerateLaw)
        ));
        assert!(matches!(
            solve_rho(&parse_law("geometric:0.5").unwrap(), 0.9, 1e-12),
            Err(Error::NotSupercritical { .. })
        ));
        assert!(solve_rho(&bin, 1.2, 1e-12).is_err());
        assert!(solve_rho(&bin, 0.75, 0.0).is_err());
        // cap trips this close to criticality at a tiny tolerance
        assert!(matches!(
            solve_rho(&bin, 0.5 + 1e-9, 1e-15),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        let m = PercolatedModel::new(binary(), 0.75).unwrap();
        assert_abs_diff_eq!(m.rho_derivative().unwrap(), -32.0 / 27.0, epsilon = 1e-10);

        // closed form rho'(p) = -2(1-p)/p^3 and finite differences
        let h = 1e-6;
        for i in 0..9 {
            let p = 0.55 + 0.05 * i as f64;
            let d = PercolatedModel::new(binary(), p).unwrap().rho_derivative().unwrap();
            assert_abs_diff_eq!(d, -2.0 * (1.0 - p) / p.powi(3), epsilon = 1e-9);
            let up = solve_rho(&binary(), p + h, 1e-13).unwrap().0;
            let dn = solve_rho(&binary(), p - h, 1e-13).unwrap().0;
            assert_abs_diff_eq!(d, (up - dn) / (2.0 * h), epsilon = 1e-5);
        }

        let full = PercolatedModel::new(binary(), 1.0).unwrap();
        assert_eq!(full.rho_derivative().unwrap(), 0.0);
    }

    #[test]
    fn backbone_examples() {
        let m = PercolatedModel::new(binary(), 0.75).unwrap();
        assert_eq!(m.backbone_pmf(0), 0.0);
        assert_abs_diff_eq!(m.backbone_pmf(1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.backbone_pmf(2), 0.5, epsilon = 1e-12);
        assert_eq!(m.backbone_pmf(1), m.m_hat());
    }

    #[test]
    fn bush_examples() {
        let m = PercolatedModel::new(binary(), 0.75).unwrap();
        assert_abs_diff_eq!(m.m_hat(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.bush_mean_size().unwrap(), 2.0, epsilon = 1e-11);
        assert_abs_diff_eq!(m.bush_pmf(0).unwrap(), 0.5625, epsilon = 1e-11);
        let total: f64 = (0..=2).map(|k| m.bush_pmf(k).unwrap()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let mean: f64 = (0..=2).map(|k| k as f64 * m.bush_pmf(k).unwrap()).sum();
        assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-12);

        let full = PercolatedModel::new(binary(), 1.0).unwrap();
        assert_eq!(full.bush_mean_size().unwrap(), 1.0);
        assert!(matches!(full.bush_pmf(0), Err(Error::NoBushes)));

        let g = PercolatedModel::new(parse_law("geometric:0.6666666666666666").unwrap(), 0.8).unwrap();
        assert_abs_diff_eq!(g.m_hat(), g.m_hat_ratio(), epsilon = 1e-10);
    }

    #[test]
    fn excursion_examples() {
        let m = PercolatedModel::new(binary(), 0.75).unwrap();
        assert_eq!(m.mean_excursions(2).unwrap(), 0.0);
        assert_abs_diff_eq!(m.mean_excursions(1).unwrap(), 0.125, epsilon = 1e-12);
        assert!(matches!(m.mean_excursions(3), Err(Error::ImpossibleDegree { .. })));
        assert!(m.mean_excursions(0).is_err());

        let reg = PercolatedModel::new(OffspringLaw::regular(4).unwrap(), 0.6).unwrap();
        assert_eq!(reg.mean_excursions(4).unwrap(), 0.0);
    }

    #[test]
    fn invariants_hold() {
        for spec in ["pmf:0,0,1", "poisson:2", "binomial:3,0.8", "geometric:0.75", "pmf:0.1,0.2,0.3,0.4"] {
            let law = parse_law(spec).unwrap();
            let pc = 1.0 / law.mean();
            for i in 1..20 {
                let p = pc + (1.0 - pc) * i as f64 / 20.0;
                let m = PercolatedModel::new(law.clone(), p).unwrap();
                assert!((m.rho() - law.pgf(m.lambda())).abs() <= m.tol());
                assert!(m.rho() >= 0.0 && m.rho() < 1.0);
                assert!(m.lambda() > 0.0 && m.lambda() <= 1.0);
                assert!(m.m_hat() < 1.0);
                assert!((p * (1.0 - law.pgf(m.lambda())) - (1.0 - m.lambda())).abs() <= 1e-11);
                assert_abs_diff_eq!(m.m_hat(), m.m_hat_ratio(), epsilon = 1e-10);
            }
        }
    }
}
