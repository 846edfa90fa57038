//! Return probabilities of the symmetric walk and their convolution powers.
//!
//! `g(k) = P(S_k = 0)`, `μ = g∗g` and `ν = g∗g∗g∗g`. Their generating
//! functions are `(1 − t²)^{-1/2}`, `(1 − t²)^{-1}` and `(1 − t²)^{-2}`,
//! so `μ(2i) = 1` and `ν(2i) = i + 1` exactly.

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::lattice::SkewParam;

/// Nonnegative sequence indexed from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSeq {
    label: String,
    values: Vec<f64>,
}

impl ConvSeq {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("entry {i} is {v}, expected >= 0")));
        }
        Ok(ConvSeq {
            label: label.into(),
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Largest index held.
    pub fn kmax(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn vanishes_on_odd(&self) -> bool {
        self.values.iter().skip(1).step_by(2).all(|&v| v == 0.0)
    }

    /// Bound on the truncated tail `Σ_{k > kmax} s(k) t^k`, valid when the
    /// held entries are nonincreasing over their nonzero terms and the
    /// unseen tail continues that way. `None` if that shape is absent.
    pub fn tail_bound(&self, t: f64) -> Option<f64> {
        let nonzero: Vec<f64> = self.values.iter().copied().filter(|&v| v > 0.0).collect();
        if nonzero.windows(2).any(|w| w[1] > w[0]) {
            return None;
        }
        let last = nonzero.last().copied().unwrap_or(0.0);
        Some(last * t.powi(self.len() as i32) / (1.0 - t))
    }
}

/// `g(0..=kmax)` via `g(2i) = g(2i − 2)·(2i − 1)/(2i)`, zero at odd indices.
pub fn g_seq(kmax: usize) -> ConvSeq {
    let mut values = vec![0.0; kmax + 1];
    values[0] = 1.0;
    let mut k = 2;
    while k <= kmax {
        values[k] = values[k - 2] * (k - 1) as f64 / k as f64;
        k += 2;
    }
    ConvSeq {
        label: "g".into(),
        values,
    }
}

/// `g` with its zeroth term removed: return probabilities at strictly
/// positive times, the building block of the lemma sums.
fn g_positive(kmax: usize) -> ConvSeq {
    let mut g = g_seq(kmax);
    g.values[0] = 0.0;
    g.with_label("g+")
}

/// `μ = g∗g` on `0..=kmax`.
pub fn mu_seq(kmax: usize) -> ConvSeq {
    let g = g_seq(kmax);
    convolve(&g, &g).expect("equal lengths").with_label("mu")
}

/// `ν = g∗g∗g∗g` on `0..=kmax`.
pub fn nu_seq(kmax: usize) -> ConvSeq {
    let mu = mu_seq(kmax);
    convolve(&mu, &mu).expect("equal lengths").with_label("nu")
}

/// Cauchy product truncated to the common index range.
///
/// Every output entry is an independent left-to-right sum, so the result does
/// not depend on how the work is scheduled.
pub fn convolve(a: &ConvSeq, b: &ConvSeq) -> Result<ConvSeq> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "convolution operands differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let label = format!("{}*{}", a.label, b.label);
    let len = a.len();
    if a.vanishes_on_odd() && b.vanishes_on_odd() {
        // Work on the even subsequences; odd outputs are identically zero.
        let ae: Vec<f64> = a.values.iter().copied().step_by(2).collect();
        let be: Vec<f64> = b.values.iter().copied().step_by(2).collect();
        let half = dense_convolve(&ae, &be);
        let mut values = vec![0.0; len];
        for (i, v) in half.into_iter().enumerate() {
            values[2 * i] = v;
        }
        return Ok(ConvSeq { label, values });
    }
    Ok(ConvSeq {
        label,
        values: dense_convolve(&a.values, &b.values),
    })
}

fn dense_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let support: Vec<(usize, f64)> = a
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .collect();
    (0..a.len())
        .into_par_iter()
        .with_min_len(64)
        .map(|n| {
            let mut acc = 0.0;
            for &(j, av) in &support {
                if j > n {
                    break;
                }
                acc += av * b[n - j];
            }
            acc
        })
        .collect()
}

/// Running sums `Σ_{j ≤ n} s(j)`.
pub fn partial_sums(s: &ConvSeq) -> ConvSeq {
    let mut acc = 0.0;
    let values = s
        .values
        .iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect();
    ConvSeq {
        label: format!("cumsum({})", s.label),
        values,
    }
}

fn check_unit_interval(t: f64) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "generating function argument must lie in [0, 1), got {t}"
        )));
    }
    Ok(())
}

/// Truncated generating function `Σ_{k ≤ kmax} s(k) t^k`.
pub fn gen_fn_eval(s: &ConvSeq, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    Ok(s.values.iter().rev().fold(0.0, |acc, &v| acc * t + v))
}

/// Like [`gen_fn_eval`] but refuses when the held terms cannot certify a
/// truncation error of at most `tolerance`.
pub fn gen_fn_eval_within(s: &ConvSeq, t: f64, tolerance: f64) -> Result<f64> {
    check_unit_interval(t)?;
    match s.tail_bound(t) {
        Some(bound) if bound <= tolerance => gen_fn_eval(s, t),
        Some(bound) => Err(Error::Domain(format!(
            "truncation bound {bound:e} exceeds {tolerance:e}; raise kmax"
        ))),
        None => Err(Error::Domain(format!(
            "no tail bound available for nonmonotone sequence {}",
            s.label
        ))),
    }
}

/// Ratios of partial sums to their Karamata-predicted growth.
#[derive(Debug, Clone, PartialEq)]
pub struct TauberianRatio {
    pub theta: f64,
    pub slowly_varying: f64,
    /// `None` at `n = 0`, where the normaliser vanishes.
    pub ratios: Vec<Option<f64>>,
}

impl TauberianRatio {
    pub fn at(&self, n: usize) -> Option<f64> {
        self.ratios.get(n).copied().flatten()
    }
}

/// `Σ_{j ≤ n} s(j) / (c · n^θ / Γ(θ + 1))`.
///
/// If the generating function behaves like `c·(1 − t)^{-θ}` as `t ↑ 1`, the
/// ratio tends to one. For `g`, `μ`, `ν` the constants are `(1/2, 1/√2)`,
/// `(1, 1/2)` and `(2, 1/4)`.
pub fn tauberian_ratio(s: &ConvSeq, theta: f64, c: f64) -> Result<TauberianRatio> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Domain(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("constant must be positive, got {c}")));
    }
    let norm = c / gamma(theta + 1.0);
    let sums = partial_sums(s);
    let ratios = sums
        .values
        .iter()
        .enumerate()
        .map(|(n, &sum)| (n > 0).then(|| sum / (norm * (n as f64).powf(theta))))
        .collect();
    Ok(TauberianRatio {
        theta,
        slowly_varying: c,
        ratios,
    })
}

/// Lemma sums for every horizon `d` in `0..=dmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSums {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LemmaSums {
    /// Smallest positive integer `C` with `a(d), b(d) ≤ C·d²` for all
    /// `1 ≤ d ≤ dmax`.
    pub fn smallest_constant(&self) -> u64 {
        let worst = (1..self.a.len())
            .map(|d| self.a[d].max(self.b[d]) / (d * d) as f64)
            .fold(0.0, f64::max);
        (worst.ceil() as u64).max(1)
    }
}

/// `a(d) = Σ_{1≤i₁<i₂<i₃≤d} (2α−1)² g(i₁) g(i₂−i₁)` and
/// `b(d) = Σ_{1≤i₁<…<i₄≤d} (2α−1)⁴ g(i₁) g(i₂−i₁) g(i₃−i₂) g(i₄−i₃)`.
///
/// With `g₊` the return probabilities at positive times, the inner sums are
/// `g₊∗g₊` and `g₊^{∗4}`; the outer indices collapse to running sums.
pub fn lemma_sums(p: SkewParam, dmax: usize) -> LemmaSums {
    let gp = g_positive(dmax);
    let g2 = convolve(&gp, &gp).expect("equal lengths");
    let g4 = convolve(&g2, &g2).expect("equal lengths");
    let skew2 = p.skew() * p.skew();

    // a(d) = Σ_{i₃ ≤ d} Σ_{i₂ < i₃} g₊∗g₊(i₂)
    let mut a = vec![0.0; dmax + 1];
    let mut inner = 0.0;
    let mut outer = 0.0;
    for d in 1..=dmax {
        inner += g2.values[d - 1];
        outer += inner;
        a[d] = skew2 * outer;
    }

    let mut b = vec![0.0; dmax + 1];
    let mut acc = 0.0;
    for d in 1..=dmax {
        acc += g4.values[d];
        b[d] = skew2 * skew2 * acc;
    }
    LemmaSums { a, b }
}

pub fn a_sum(p: SkewParam, d: usize) -> Result<f64> {
    check_horizon(d)?;
    Ok(lemma_sums(p, d).a[d])
}

pub fn b_sum(p: SkewParam, d: usize) -> Result<f64> {
    check_horizon(d)?;
    Ok(lemma_sums(p, d).b[d])
}

fn check_horizon(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("lemma horizon must be at least 1".into()));
    }
    Ok(())
}
