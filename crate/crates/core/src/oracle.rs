//! Exhaustive path enumeration, the ground truth for short horizons.
//!
//! Deliberately shares nothing with the dynamic-programming code: the
//! transition probabilities are written out again here and every one of the
//! `2^k` sign sequences is visited.

use std::collections::BTreeMap;

/// Laws and increment moments gathered from all paths of a fixed length.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub horizon: usize,
    /// `pmfs[k][m]` = P(S_k = m), for every `k ≤ horizon`.
    pub pmfs: Vec<BTreeMap<i64, f64>>,
    /// `pair_fourth[j][k]` = E(S_k − S_j)^4 for `j < k ≤ horizon`.
    pub pair_fourth: Vec<Vec<f64>>,
}

impl Enumeration {
    pub fn prob(&self, k: usize, m: i64) -> f64 {
        self.pmfs[k].get(&m).copied().unwrap_or(0.0)
    }
}

fn kernel(alpha: f64, from: i64, up: bool) -> f64 {
    match (from == 0, up) {
        (true, true) => alpha,
        (true, false) => 1.0 - alpha,
        (false, _) => 0.5,
    }
}

/// Visits every path of length `horizon` (must be at most 24).
pub fn enumerate(alpha: f64, horizon: usize) -> Enumeration {
    assert!(horizon <= 24, "enumeration beyond 2^24 paths");
    let mut out = Enumeration {
        horizon,
        pmfs: vec![BTreeMap::new(); horizon + 1],
        pair_fourth: vec![vec![0.0; horizon + 1]; horizon + 1],
    };
    let mut prefix = Vec::with_capacity(horizon + 1);
    prefix.push(0i64);
    visit(alpha, &mut prefix, 1.0, &mut out);
    out
}

fn visit(alpha: f64, prefix: &mut Vec<i64>, prob: f64, out: &mut Enumeration) {
    let k = prefix.len() - 1;
    let here = prefix[k];
    *out.pmfs[k].entry(here).or_insert(0.0) += prob;
    for j in 0..k {
        let d = (here - prefix[j]) as f64;
        out.pair_fourth[j][k] += prob * d * d * d * d;
    }
    if k == out.horizon {
        return;
    }
    for up in [true, false] {
        let p = kernel(alpha, here, up);
        if p == 0.0 {
            continue;
        }
        prefix.push(if up { here + 1 } else { here - 1 });
        visit(alpha, prefix, prob * p, out);
        prefix.pop();
    }
}

/// E|X_n(t) − X_n(s)|^4 by enumerating every path long enough to reach
/// time `t`. The interpolation is written out directly.
pub fn interp_fourth_moment(alpha: f64, n: usize, s: f64, t: f64) -> f64 {
    let len = (n as f64 * t).floor() as usize + 1;
    assert!(len <= 22);
    let mut total = 0.0;
    for mask in 0u32..(1u32 << len) {
        let mut pos = 0i64;
        let mut prob = 1.0;
        let mut path = vec![0i64];
        for i in 0..len {
            let up = mask >> i & 1 == 1;
            prob *= kernel(alpha, pos, up);
            pos += if up { 1 } else { -1 };
            path.push(pos);
        }
        let x = |time: f64| {
            let nt = n as f64 * time;
            let a = nt.floor() as usize;
            let frac = nt - a as f64;
            let next = if frac > 0.0 { path[a + 1] } else { path[a] };
            (path[a] as f64 + frac * (next - path[a]) as f64) / (n as f64).sqrt()
        };
        let diff = x(t) - x(s);
        total += prob * diff.powi(4);
    }
    total
}
