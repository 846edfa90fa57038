//! Exact laws of the skew walk on the integer lattice.
//!
//! A [`LatticePmf`] is stored densely over a contiguous window of lattice
//! points. Points of the wrong parity carry zero weight; keeping them in the
//! buffer makes the one-step update a pair of shifted axpy passes.

use crate::error::{Error, Result};

/// Largest step count for which exact laws are materialised.
pub const MAX_EXACT_STEPS: usize = 1 << 18;

const MASS_TOLERANCE: f64 = 1e-12;

/// Skewness parameter: probability of stepping up from the origin.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SkewParam(f64);

impl SkewParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(SkewParam(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    /// Bypasses the open-interval check. Only the excursion sampler's tests use
    /// the endpoints, where the sign law degenerates.
    #[cfg(test)]
    pub(crate) fn degenerate(alpha: f64) -> Self {
        assert!((0.0..=1.0).contains(&alpha));
        SkewParam(alpha)
    }

    #[inline]
    pub fn alpha(self) -> f64 {
        self.0
    }

    /// `2α − 1`, the drift of a single step taken from the origin.
    #[inline]
    pub fn skew(self) -> f64 {
        2.0 * self.0 - 1.0
    }

    /// The parameter `1 − α`, whose walk is the mirror image of this one.
    pub fn mirror(self) -> Self {
        SkewParam(1.0 - self.0)
    }

    /// Probability of moving from `m` to `m + 1`.
    #[inline]
    pub fn up_prob(self, m: i64) -> f64 {
        if m == 0 {
            self.0
        } else {
            0.5
        }
    }

    /// Probability of moving from `m` to `m − 1`.
    #[inline]
    pub fn down_prob(self, m: i64) -> f64 {
        if m == 0 {
            1.0 - self.0
        } else {
            0.5
        }
    }
}

/// Finite probability mass function on the lattice at a given step index.
///
/// `weights[i]` is the probability of the point `min_support + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    min_support: i64,
    weights: Vec<f64>,
    step_index: usize,
}

impl LatticePmf {
    /// Validating constructor. Checks nonnegativity, unit mass, the
    /// `[-k, k]` window and the parity of every charged point.
    pub fn new(min_support: i64, weights: Vec<f64>, step_index: usize) -> Result<Self> {
        let pmf = LatticePmf {
            min_support,
            weights,
            step_index,
        };
        pmf.validate()?;
        Ok(pmf)
    }

    pub(crate) fn from_parts(min_support: i64, weights: Vec<f64>, step_index: usize) -> Self {
        LatticePmf {
            min_support,
            weights,
            step_index,
        }
    }

    /// Point mass at the origin, the law of `S_0`.
    pub fn dirac_origin() -> Self {
        LatticePmf::from_parts(0, vec![1.0], 0)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.step_index as i64;
        let mut total = 0.0;
        for (m, w) in self.iter() {
            if !(w >= 0.0) {
                return Err(Error::InvalidPmf(format!("weight {w} at {m} is negative")));
            }
            if w > 0.0 {
                if m.abs() > k {
                    return Err(Error::InvalidPmf(format!("point {m} outside [-{k}, {k}]")));
                }
                if (m - k).rem_euclid(2) != 0 {
                    return Err(Error::InvalidPmf(format!(
                        "point {m} has the wrong parity for step {k}"
                    )));
                }
            }
            total += w;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total} != 1")));
        }
        Ok(())
    }

    pub fn min_support(&self) -> i64 {
        self.min_support
    }

    pub fn max_support(&self) -> i64 {
        self.min_support + self.weights.len() as i64 - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Probability of the point `m`; zero outside the stored window.
    pub fn prob(&self, m: i64) -> f64 {
        let i = m - self.min_support;
        if i < 0 {
            return 0.0;
        }
        self.weights.get(i as usize).copied().unwrap_or(0.0)
    }

    /// `(point, weight)` pairs in increasing order of the point.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.min_support + i as i64, w))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `E[f(S)]` under this law.
    pub fn expect(&self, f: impl Fn(i64) -> f64) -> f64 {
        self.iter().map(|(m, w)| w * f(m)).sum()
    }

    /// Largest absolute pointwise difference against another pmf.
    pub fn max_abs_diff(&self, other: &LatticePmf) -> f64 {
        let lo = self.min_support.min(other.min_support);
        let hi = self.max_support().max(other.max_support());
        (lo..=hi)
            .map(|m| (self.prob(m) - other.prob(m)).abs())
            .fold(0.0, f64::max)
    }
}

/// One transition of the skew kernel applied to a law.
///
/// Mass at the origin moves up with probability `α` and down with `1 − α`;
/// mass elsewhere splits evenly. The window widens by one on each side.
pub fn step(pmf: &LatticePmf, p: SkewParam) -> LatticePmf {
    let mut out = vec![0.0; pmf.weights.len() + 2];
    step_into(pmf.min_support, &pmf.weights, p, &mut out);
    LatticePmf::from_parts(pmf.min_support - 1, out, pmf.step_index + 1)
}

/// `out` must have length `weights.len() + 2`; its window starts one below
/// `min_support`.
fn step_into(min_support: i64, weights: &[f64], p: SkewParam, out: &mut [f64]) {
    debug_assert_eq!(out.len(), weights.len() + 2);
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &mass) in weights.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let m = min_support + i as i64;
        out[i] += p.down_prob(m) * mass;
        out[i + 2] += p.up_prob(m) * mass;
    }
}

/// Law of `S_k` started at the origin, by `k` applications of [`step`].
pub fn exact_pmf(p: SkewParam, k: usize) -> Result<LatticePmf> {
    check_steps(k)?;
    let mut cur = Vec::with_capacity(2 * k + 1);
    let mut next = Vec::with_capacity(2 * k + 1);
    cur.push(1.0);
    for i in 0..k {
        next.resize(cur.len() + 2, 0.0);
        step_into(-(i as i64), &cur, p, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(LatticePmf::from_parts(-(k as i64), cur, k))
}

/// Law of the simple symmetric walk at step `k`, from the binomial closed form.
///
/// Built outward from the central term with the ratio
/// `P(m + 2) / P(m) = (k − m) / (k + m + 2)`, which never overflows.
pub fn ssrw_pmf(k: usize) -> Result<LatticePmf> {
    check_steps(k)?;
    let mut weights = vec![0.0; 2 * k + 1];
    let center = k as i64;
    // P(S_k = 0) = g(k) for even k; P(S_k = 1) = g(k + 1) for odd k.
    let start = (k % 2) as i64;
    let mut central = 1.0;
    for i in 1..=k.div_ceil(2) {
        central *= (2 * i - 1) as f64 / (2 * i) as f64;
    }
    let kf = k as f64;
    let mut w = central;
    let mut m = start;
    while m <= center {
        weights[(center + m) as usize] = w;
        weights[(center - m) as usize] = w;
        let mf = m as f64;
        w *= (kf - mf) / (kf + mf + 2.0);
        m += 2;
    }
    Ok(LatticePmf::from_parts(-center, weights, k))
}

/// Law of `|S_k|` for the simple symmetric walk, obtained by folding
/// [`ssrw_pmf`] onto the nonnegative half-line.
pub fn reflected_pmf(k: usize) -> Result<LatticePmf> {
    let full = ssrw_pmf(k)?;
    let mut weights = vec![0.0; k + 1];
    weights[0] = full.prob(0);
    for (m, w) in weights.iter_mut().enumerate().skip(1) {
        let m = m as i64;
        *w = full.prob(m) + full.prob(-m);
    }
    Ok(LatticePmf::from_parts(0, weights, k))
}

/// Law of `S_k` assembled from the reflected law: positive points get the
/// share `α`, negative points `1 − α`, the origin keeps its mass.
pub fn factorized_pmf(p: SkewParam, k: usize) -> Result<LatticePmf> {
    let refl = reflected_pmf(k)?;
    Ok(signed_from_reflected(&refl, p))
}

pub(crate) fn signed_from_reflected(refl: &LatticePmf, p: SkewParam) -> LatticePmf {
    let k = refl.step_index;
    let center = k as i64;
    let mut weights = vec![0.0; 2 * k + 1];
    weights[k] = refl.prob(0);
    for z in 1..=center {
        let r = refl.prob(z);
        weights[(center + z) as usize] = p.alpha() * r;
        weights[(center - z) as usize] = (1.0 - p.alpha()) * r;
    }
    LatticePmf::from_parts(-center, weights, k)
}

/// Kernel-level increment moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementMoments {
    /// `E[Δ | S = 0]`.
    pub mean_at_zero: f64,
    /// `E[Δ | S ≠ 0]` under the supplied law; zero when the law has no mass
    /// off the origin.
    pub mean_off_zero: f64,
    /// `E[Δ²]` under the supplied law.
    pub second_moment: f64,
}

/// Conditional increment moments read off the transition kernel.
pub fn conditional_increment_moments(pmf: &LatticePmf, p: SkewParam) -> IncrementMoments {
    let drift = |m: i64| p.up_prob(m) - p.down_prob(m);
    let mean_at_zero = drift(0);
    let off_mass: f64 = pmf.iter().filter(|&(m, _)| m != 0).map(|(_, w)| w).sum();
    let mean_off_zero = if off_mass > 0.0 {
        pmf.iter()
            .filter(|&(m, _)| m != 0)
            .map(|(m, w)| w * drift(m))
            .sum::<f64>()
            / off_mass
    } else {
        0.0
    };
    // (+1)² and (−1)² both contribute 1.
    let second_moment = pmf.expect(|m| p.up_prob(m) + p.down_prob(m)) / pmf.total_mass();
    IncrementMoments {
        mean_at_zero,
        mean_off_zero,
        second_moment,
    }
}

fn check_steps(k: usize) -> Result<()> {
    if k > MAX_EXACT_STEPS {
        return Err(Error::Resource {
            what: "steps",
            requested: k as u64,
            limit: MAX_EXACT_STEPS as u64,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(x: f64) -> SkewParam {
        SkewParam::new(x).unwrap()
    }

    fn assert_pmf(pmf: &LatticePmf, expected: &[(i64, f64)]) {
        for &(m, w) in expected {
            assert!(
                (pmf.prob(m) - w).abs() < 1e-15,
                "at {m}: {} vs {w}",
                pmf.prob(m)
            );
        }
        let listed: f64 = expected.iter().map(|e| e.1).sum();
        assert!((pmf.total_mass() - listed).abs() < 1e-15);
    }

    #[test]
    fn alpha_outside_open_interval_rejected() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN, f64::INFINITY] {
            assert!(SkewParam::new(bad).is_err(), "{bad}");
        }
        assert!(SkewParam::new(0.5).is_ok());
    }

    #[test]
    fn step_from_origin() {
        let out = step(&LatticePmf::dirac_origin(), a(0.7));
        assert_pmf(&out, &[(-1, 0.3), (1, 0.7)]);
        assert_eq!(out.step_index(), 1);

        let sym = step(&LatticePmf::dirac_origin(), a(0.5));
        assert_pmf(&sym, &[(-1, 0.5), (1, 0.5)]);
    }

    #[test]
    fn step_away_from_origin_is_fair() {
        let at5 = LatticePmf::from_parts(5, vec![1.0], 5);
        for alpha in [0.1, 0.7, 0.99] {
            let out = step(&at5, a(alpha));
            assert_pmf(&out, &[(4, 0.5), (6, 0.5)]);
        }
    }

    #[test]
    fn exact_small_cases() {
        assert_eq!(exact_pmf(a(0.3), 0).unwrap(), LatticePmf::dirac_origin());
        let two = exact_pmf(a(0.7), 2).unwrap();
        assert_pmf(&two, &[(-2, 0.15), (0, 0.5), (2, 0.35)]);
        for alpha in [0.05, 0.5, 0.93] {
            assert!((exact_pmf(a(alpha), 2).unwrap().prob(0) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_rejects_huge_horizon() {
        let err = exact_pmf(a(0.5), MAX_EXACT_STEPS + 1).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn reflected_small_cases() {
        assert_pmf(&reflected_pmf(0).unwrap(), &[(0, 1.0)]);
        assert_pmf(&reflected_pmf(1).unwrap(), &[(1, 1.0)]);
        assert_pmf(&reflected_pmf(2).unwrap(), &[(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn factorized_small_cases() {
        let f = factorized_pmf(a(0.7), 2).unwrap();
        assert!(f.max_abs_diff(&exact_pmf(a(0.7), 2).unwrap()) < 1e-15);
        assert!((factorized_pmf(a(0.25), 4).unwrap().prob(4) - 0.03125).abs() < 1e-16);
        for k in [1, 7, 40] {
            let f = factorized_pmf(a(0.5), k).unwrap();
            assert!(f.max_abs_diff(&ssrw_pmf(k).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn validation_catches_bad_pmfs() {
        assert!(LatticePmf::new(0, vec![1.0], 0).is_ok());
        assert!(LatticePmf::new(-1, vec![0.5, 0.0, 0.5], 1).is_ok());
        assert!(LatticePmf::new(0, vec![0.9], 0).is_err());
        assert!(LatticePmf::new(0, vec![-0.5, 1.5], 1).is_err());
        // wrong parity
        assert!(LatticePmf::new(0, vec![1.0], 1).is_err());
        // outside [-k, k]
        assert!(LatticePmf::new(3, vec![1.0], 1).is_err());
    }

    #[test]
    fn increment_moments_from_kernel() {
        let pmf = exact_pmf(a(0.7), 3).unwrap();
        let mom = conditional_increment_moments(&pmf, a(0.7));
        assert!((mom.mean_at_zero - 0.4).abs() < 1e-15);
        assert_eq!(mom.mean_off_zero, 0.0);
        assert_eq!(mom.second_moment, 1.0);

        let sym = conditional_increment_moments(&LatticePmf::dirac_origin(), a(0.5));
        assert_eq!(sym.mean_at_zero, 0.0);
        assert_eq!(sym.mean_off_zero, 0.0);
    }

    #[test]
    fn parity_and_window_hold() {
        for k in [0, 1, 2, 9, 64] {
            let pmf = exact_pmf(a(0.37), k).unwrap();
            pmf.validate().unwrap();
            reflected_pmf(k).unwrap().validate().unwrap();
            factorized_pmf(a(0.37), k).unwrap().validate().unwrap();
        }
    }

    proptest! {
        #[test]
        fn mass_conserved_under_repeated_steps(alpha in 0.001f64..0.999, k in 0usize..300) {
            let pmf = exact_pmf(a(alpha), k).unwrap();
            prop_assert!((pmf.total_mass() - 1.0).abs() <= 1e-12);
            prop_assert!(pmf.weights().iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn mirror_image_under_alpha_swap(alpha in 0.001f64..0.999, k in 0usize..200) {
            let p = a(alpha);
            let lhs = exact_pmf(p, k).unwrap();
            let rhs = exact_pmf(p.mirror(), k).unwrap();
            for (m, w) in lhs.iter() {
                prop_assert!((w - rhs.prob(-m)).abs() <= 1e-12);
            }
        }

        #[test]
        fn folding_matches_reflected_law(alpha in 0.001f64..0.999, k in 0usize..200) {
            let pmf = exact_pmf(a(alpha), k).unwrap();
            let refl = reflected_pmf(k).unwrap();
            prop_assert!((pmf.prob(0) - refl.prob(0)).abs() <= 1e-12);
            for m in 1..=k as i64 {
                prop_assert!((pmf.prob(m) + pmf.prob(-m) - refl.prob(m)).abs() <= 1e-12);
            }
        }
    }
}
