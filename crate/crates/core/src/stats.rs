//! Goodness-of-fit helpers and compensated summation.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

fn finish(statistic: f64, bins: usize) -> ChiSquareTest {
    let dof = bins.saturating_sub(1).max(1);
    let p_value = if statistic.is_finite() {
        ChiSquared::new(dof as f64)
            .expect("positive dof")
            .sf(statistic)
    } else {
        0.0
    };
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}

/// Pearson goodness of fit of `counts` against cell probabilities `probs`.
///
/// Cells are pooled left to right until each pooled cell expects at least
/// five observations; a trailing short cell joins its predecessor.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for (&c, &q) in counts.iter().zip(probs) {
        if q == 0.0 && c > 0 {
            return finish(f64::INFINITY, 2);
        }
        pending.0 += c as f64;
        pending.1 += q * n;
        if pending.1 >= 5.0 {
            cells.push(pending);
            pending = (0.0, 0.0);
        }
    }
    if pending.1 > 0.0 || pending.0 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => cells.push(pending),
        }
    }
    let stat = cells
        .iter()
        .map(|&(obs, exp)| (obs - exp) * (obs - exp) / exp)
        .sum();
    finish(stat, cells.len())
}

/// Two-sample chi-square homogeneity test on aligned histograms.
///
/// Cells are pooled until the combined count reaches ten.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareTest {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let k1 = (nb as f64 / na as f64).sqrt();
    let k2 = (na as f64 / nb as f64).sqrt();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        pending.0 += x as f64;
        pending.1 += y as f64;
        if pending.0 + pending.1 >= 10.0 {
            cells.push(pending);
            pending = (0.0, 0.0);
        }
    }
    if pending.0 + pending.1 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => cells.push(pending),
        }
    }
    let stat = cells
        .iter()
        .map(|&(x, y)| (k1 * x - k2 * y).powi(2) / (x + y))
        .sum();
    finish(stat, cells.len())
}
