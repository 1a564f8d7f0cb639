//! Offspring distributions of a Galton-Watson process.
//!
//! A law is one of four families. Infinite-support families are handled
//! through their closed-form generating functions; only `FinitePmf` is ever
//! summed term by term, and its support is exactly the weight vector given.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};

/// Absolute tolerance on probability normalization.
pub const PROB_TOL: f64 = 1e-12;

/// Hard cap on any truncated series index.
pub const MAX_SERIES_INDEX: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Normalized weights `p_0, p_1, ..., p_K`.
    FinitePmf(Vec<f64>),
    /// `p_k = a^k (1 - a)`.
    Geometric { a: f64 },
    Poisson { mu: f64 },
    Binomial { n: u32, q: f64 },
}

#[derive(Debug, Clone)]
enum Sampler {
    Table(Vec<f64>),
    Geometric(Geometric),
    Poisson(Poisson<f64>),
    Binomial(Binomial),
}

/// An offspring distribution `{p_k}` with generating function `f(s) = sum p_k s^k`.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    family: Family,
    sampler: Sampler,
}

impl PartialEq for OffspringLaw {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

fn bad(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidArgument {
        name,
        value,
        reason,
    }
}

/// `C(n, k)` as a float; exact while the result fits in 53 bits.
pub(crate) fn binomial_coeff(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut c: u64 = 1;
        for i in 0..k {
            // c * (n - i) / (i + 1) stays integral at every step
            c = c * (n - i) / (i + 1);
        }
        c as f64
    } else {
        ln_binomial(n, k).exp()
    }
}

/// `n (n-1) ... (n-k+1)`.
fn falling_factorial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

fn powi(x: f64, n: u64) -> f64 {
    match i32::try_from(n) {
        Ok(n) => x.powi(n),
        Err(_) => x.powf(n as f64),
    }
}

impl OffspringLaw {
    /// Builds a finite law from nonnegative weights, renormalizing them to sum 1.
    pub fn finite_pmf(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(bad("pmf", 0.0, "no weights given"));
        }
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(bad("pmf weight", w, "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(bad("pmf", total, "all weights are zero"));
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(OffspringLaw {
            family: Family::FinitePmf(probs),
            sampler: Sampler::Table(cdf),
        })
    }

    /// The `d`-ary regular tree, `p_d = 1`.
    pub fn regular(d: usize) -> Result<Self> {
        let mut w = vec![0.0; d + 1];
        w[d] = 1.0;
        Self::finite_pmf(w)
    }

    pub fn geometric(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(bad("a", a, "geometric parameter must lie in (0, 1)"));
        }
        // failures before the first success, success probability 1 - a
        let g = Geometric::new(1.0 - a).map_err(|_| bad("a", a, "rejected by sampler"))?;
        Ok(OffspringLaw {
            family: Family::Geometric { a },
            sampler: Sampler::Geometric(g),
        })
    }

    pub fn poisson(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(bad("mu", mu, "Poisson mean must be positive and finite"));
        }
        let s = Poisson::new(mu).map_err(|_| bad("mu", mu, "rejected by sampler"))?;
        Ok(OffspringLaw {
            family: Family::Poisson { mu },
            sampler: Sampler::Poisson(s),
        })
    }

    pub fn binomial(n: u32, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(bad("n", 0.0, "binomial size must be positive"));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(bad("q", q, "binomial probability must lie in (0, 1]"));
        }
        let s = Binomial::new(u64::from(n), q).map_err(|_| bad("q", q, "rejected by sampler"))?;
        Ok(OffspringLaw {
            family: Family::Binomial { n, q },
            sampler: Sampler::Binomial(s),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// `p_k`.
    pub fn pmf(&self, k: usize) -> f64 {
        match &self.family {
            Family::FinitePmf(w) => w.get(k).copied().unwrap_or(0.0),
            Family::Geometric { a } => powi(*a, k as u64) * (1.0 - a),
            Family::Poisson { mu } => (k as f64 * mu.ln() - mu - ln_factorial(k as u64)).exp(),
            Family::Binomial { n, q } => {
                let n = u64::from(*n);
                let k = k as u64;
                if k > n {
                    0.0
                } else {
                    binomial_coeff(n, k) * powi(*q, k) * powi(1.0 - q, n - k)
                }
            }
        }
    }

    pub fn p0(&self) -> f64 {
        self.pmf(0)
    }

    /// Largest `k` with `p_k > 0`, if the support is finite.
    pub fn max_support(&self) -> Option<usize> {
        match &self.family {
            Family::FinitePmf(w) => Some(w.len() - 1),
            Family::Binomial { n, .. } => Some(*n as usize),
            _ => None,
        }
    }

    /// `m = f'(1)`.
    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::FinitePmf(w) => w.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
            Family::Geometric { a } => a / (1.0 - a),
            Family::Poisson { mu } => *mu,
            Family::Binomial { n, q } => f64::from(*n) * q,
        }
    }

    /// The law `p_1 = 1`, whose generating function is the identity.
    pub fn is_degenerate(&self) -> bool {
        match &self.family {
            Family::FinitePmf(w) => w.len() == 2 && w[1] >= 1.0 - PROB_TOL,
            Family::Binomial { n, q } => *n == 1 && *q >= 1.0 - PROB_TOL,
            _ => false,
        }
    }

    /// `f(s)`.
    pub fn pgf(&self, s: f64) -> f64 {
        self.taylor_coefficient(s, 0)
    }

    /// `f^(order)(s)` for `s` in `[0, 1]`; order 0 is `f` itself.
    pub fn pgf_derivative(&self, s: f64, order: usize) -> Result<f64> {
        check_unit(s)?;
        let k = order as u64;
        Ok(match &self.family {
            Family::FinitePmf(w) => w
                .iter()
                .enumerate()
                .skip(order)
                .map(|(j, p)| p * falling_factorial(j as u64, k) * powi(s, j as u64 - k))
                .sum(),
            Family::Geometric { a } => {
                let base = 1.0 - a * s;
                statrs::function::factorial::factorial(k) * powi(*a, k) * (1.0 - a)
                    / powi(base, k + 1)
            }
            Family::Poisson { mu } => powi(*mu, k) * (mu * (s - 1.0)).exp(),
            Family::Binomial { n, q } => {
                let n = u64::from(*n);
                if k > n {
                    0.0
                } else {
                    falling_factorial(n, k) * powi(*q, k) * powi(1.0 - q + q * s, n - k)
                }
            }
        })
    }

    /// `f^(k)(s) / k!`, the k-th Taylor coefficient of `f` at `s`.
    ///
    /// Stays finite for large `k`, where `f^(k)` itself overflows. Callers
    /// guarantee `0 <= s <= 1`.
    pub fn taylor_coefficient(&self, s: f64, k: usize) -> f64 {
        let k64 = k as u64;
        match &self.family {
            Family::FinitePmf(w) => w
                .iter()
                .enumerate()
                .skip(k)
                .map(|(j, p)| p * binomial_coeff(j as u64, k64) * powi(s, (j - k) as u64))
                .sum(),
            Family::Geometric { a } => {
                let base = 1.0 - a * s;
                (1.0 - a) / base * powi(a / base, k64)
            }
            Family::Poisson { mu } => {
                if k == 0 {
                    (mu * (s - 1.0)).exp()
                } else {
                    (k as f64 * mu.ln() - ln_factorial(k64) + mu * (s - 1.0)).exp()
                }
            }
            Family::Binomial { n, q } => {
                let n = u64::from(*n);
                if k64 > n {
                    0.0
                } else {
                    binomial_coeff(n, k64) * powi(*q, k64) * powi(1.0 - q + q * s, n - k64)
                }
            }
        }
    }

    /// `integral_lo^1 f(s) ds = sum_n p_n (1 - lo^(n+1)) / (n+1)`.
    pub fn pgf_integral_to_one(&self, lo: f64) -> f64 {
        let gap = 1.0 - lo;
        match &self.family {
            Family::FinitePmf(w) => w
                .iter()
                .enumerate()
                .map(|(n, p)| p * (1.0 - powi(lo, n as u64 + 1)) / (n as f64 + 1.0))
                .sum(),
            Family::Geometric { a } => (1.0 - a) / a * (a * gap / (1.0 - a)).ln_1p(),
            Family::Poisson { mu } => -(-mu * gap).exp_m1() / mu,
            Family::Binomial { n, q } => {
                let m = f64::from(*n) + 1.0;
                -(m * (-q * gap).ln_1p()).exp_m1() / (q * m)
            }
        }
    }

    /// Smallest index `K` with `P(X > K) <= eps`, capped at [`MAX_SERIES_INDEX`].
    pub fn tail_cutoff(&self, eps: f64) -> usize {
        match &self.family {
            Family::FinitePmf(w) => w.len() - 1,
            Family::Binomial { n, .. } => *n as usize,
            Family::Geometric { a } => {
                // P(X > K) = a^(K+1)
                let k = (eps.ln() / a.ln()).ceil() - 1.0;
                (k.max(0.0) as usize).min(MAX_SERIES_INDEX)
            }
            Family::Poisson { mu } => {
                // past the mode the tail is dominated by a geometric series
                let mut k = mu.ceil() as usize + 1;
                while k < MAX_SERIES_INDEX {
                    let ratio = mu / (k as f64 + 2.0);
                    if ratio < 1.0 && self.pmf(k + 1) / (1.0 - ratio) <= eps {
                        return k;
                    }
                    k += 1;
                }
                MAX_SERIES_INDEX
            }
        }
    }

    /// Draws one offspring count. The stream is owned by the caller.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.sampler {
            Sampler::Table(cdf) => {
                let u: f64 = rng.random();
                let idx = cdf.partition_point(|&c| c <= u);
                if idx < cdf.len() {
                    idx as u64
                } else {
                    // u landed in the rounding gap above the last cumulative value
                    let Family::FinitePmf(w) = &self.family else {
                        unreachable!()
                    };
                    w.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
                }
            }
            Sampler::Geometric(g) => g.sample(rng),
            Sampler::Poisson(p) => p.sample(rng) as u64,
            Sampler::Binomial(b) => b.sample(rng),
        }
    }
}

pub(crate) fn check_unit(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(bad("s", s, "argument must lie in [0, 1]"))
    }
}

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::FinitePmf(w) => {
                f.write_str("pmf:")?;
                for (i, p) in w.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Family::Geometric { a } => write!(f, "geometric:{a}"),
            Family::Poisson { mu } => write!(f, "poisson:{mu}"),
            Family::Binomial { n, q } => write!(f, "binomial:{n},{q}"),
        }
    }
}

/// Parses `geometric:<a>`, `poisson:<mu>`, `binomial:<n>,<q>` or `pmf:<w0>,<w1>,...`.
pub fn parse_law(spec: &str) -> Result<OffspringLaw> {
    let parse_err = |reason: String| Error::Parse {
        input: spec.to_string(),
        reason,
    };
    let (name, args) = spec
        .trim()
        .split_once(':')
        .ok_or_else(|| parse_err("expected `<family>:<parameters>`".into()))?;
    let floats = |args: &str| -> Result<Vec<f64>> {
        args.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("`{}` is not a number", t.trim())))
            })
            .collect()
    };
    match name.trim() {
        "geometric" => match floats(args)?.as_slice() {
            [a] => OffspringLaw::geometric(*a),
            _ => Err(parse_err("geometric takes one parameter".into())),
        },
        "poisson" => match floats(args)?.as_slice() {
            [mu] => OffspringLaw::poisson(*mu),
            _ => Err(parse_err("poisson takes one parameter".into())),
        },
        "binomial" => {
            let (n, q) = args
                .split_once(',')
                .ok_or_else(|| parse_err("binomial takes `<n>,<q>`".into()))?;
            let n: u32 = n
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("`{}` is not a positive integer", n.trim())))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("`{}` is not a number", q.trim())))?;
            OffspringLaw::binomial(n, q)
        }
        "pmf" => OffspringLaw::finite_pmf(floats(args)?),
        other => Err(parse_err(format!("unknown family `{other}`"))),
    }
}

impl FromStr for OffspringLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_law(s)
    }
}
