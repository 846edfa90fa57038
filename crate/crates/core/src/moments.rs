//! Fourth moments of increments of the skew walk and of its rescaled,
//! linearly interpolated path `X_n(t)`.
//!
//! Three independent exact routes live here:
//!
//! * [`fourth_moment_exact`] conditions on `S_j` and runs the backward
//!   Kolmogorov recursion for the displacement moments `E[(S_d − m)^q | S_0 = m]`.
//! * [`decomposition_terms`] expands `E(Σ δ_i)^4` multinomially and tracks each
//!   exponent pattern with a forward DP over the joint law.
//! * [`MomentKernel`] evaluates closed forms in the occupation sums
//!   `Z_z(m) = Σ_{τ<m} P_z(S_τ = 0)` of the reflected walk; it is what makes a
//!   full pair scan at `n = 4096` affordable and is checked against the other
//!   two in tests.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{exact_pmf, reflected_pmf, SkewParam};
use crate::rng::RngContract;
use crate::simulator::PathSample;

/// Largest `k` accepted by the per-pair dynamic programmes.
pub const MAX_DP_HORIZON: usize = 1 << 13;

/// Largest horizon for which [`MomentKernel`] tables are built.
pub const MAX_KERNEL_HORIZON: usize = 1 << 13;

const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// A pair of grid times `s = j/n < t = k/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPair {
    pub n: usize,
    pub j: usize,
    pub k: usize,
}

impl GridPair {
    pub fn new(n: usize, j: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("scale n must be positive".into()));
        }
        if j >= k {
            return Err(Error::Domain(format!(
                "grid pair needs j < k, got j={j}, k={k}"
            )));
        }
        Ok(GridPair { n, j, k })
    }

    pub fn s(&self) -> f64 {
        self.j as f64 / self.n as f64
    }

    pub fn t(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn d(&self) -> usize {
        self.k - self.j
    }
}

/// The four groups of the multinomial expansion of `E(Σ δ_i)^4`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermBreakdown {
    /// `Σ E δ_i⁴`.
    pub diagonal: f64,
    /// `6 Σ_{i<l} E δ_i² δ_l²`.
    pub square_square: f64,
    /// `4 Σ_{i≠l} E δ_i³ δ_l + 12 Σ E δ_i² δ_l δ_m`.
    pub square_cross: f64,
    /// `24 Σ_{i<l<m<p} E δ_i δ_l δ_m δ_p`.
    pub full_cross: f64,
}

impl TermBreakdown {
    pub fn total(&self) -> f64 {
        self.diagonal + self.square_square + self.square_cross + self.full_cross
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TermBreakdown {
            diagonal: self.diagonal * factor,
            square_square: self.square_square * factor,
            square_cross: self.square_cross * factor,
            full_cross: self.full_cross * factor,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.diagonal,
            self.square_square,
            self.square_cross,
            self.full_cross,
        ]
    }
}

/// Fourth moment of `X_n(t) − X_n(s)` at a grid pair, with its breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub pair: GridPair,
    pub alpha: f64,
    pub fourth_moment: f64,
    /// `fourth_moment / (t − s)²`.
    pub ratio: f64,
    pub terms: TermBreakdown,
}

impl MomentReport {
    /// Checks nonnegativity and that the term groups add up to the total
    /// within `1e-9` relative.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !(self.fourth_moment >= 0.0 && self.ratio >= 0.0) {
            return Err(format!("negative moment in {self:?}"));
        }
        let gap = (self.terms.total() - self.fourth_moment).abs();
        if gap > 1e-9 * self.fourth_moment.max(1e-300) {
            return Err(format!(
                "terms sum to {} but fourth moment is {} (j={}, k={})",
                self.terms.total(),
                self.fourth_moment,
                self.pair.j,
                self.pair.k
            ));
        }
        Ok(())
    }
}

fn check_dp_horizon(k: usize) -> Result<()> {
    if k > MAX_DP_HORIZON {
        return Err(Error::Resource {
            what: "grid index",
            requested: k as u64,
            limit: MAX_DP_HORIZON as u64,
        });
    }
    Ok(())
}

fn check_pair(j: usize, k: usize) -> Result<()> {
    if j >= k {
        return Err(Error::Domain(format!("need j < k, got j={j}, k={k}")));
    }
    check_dp_horizon(k)
}

/// `E|S_k − S_j|^4` by conditioning on `S_j`.
///
/// The displacement moments `M_q(m, r) = E[(S_r − m)^q | S_0 = m]` satisfy
/// `M_q(m, r) = Σ_ε P(m → m+ε) Σ_i C(q,i) ε^{q−i} M_i(m+ε, r−1)`; one backward
/// sweep yields `M_4(m, k−j)` for every starting point reachable at time `j`.
pub fn fourth_moment_exact(p: SkewParam, j: usize, k: usize) -> Result<f64> {
    check_pair(j, k)?;
    let law = exact_pmf(p, j)?;
    let d = k - j;
    let reach = k as i64;
    let width = (2 * reach + 1) as usize;
    let idx = |x: i64| (x + reach) as usize;

    let mut cur = vec![[1.0, 0.0, 0.0, 0.0, 0.0]; width];
    let mut next = vec![[0.0; 5]; width];
    for r in 1..=d as i64 {
        let span = reach - r;
        for x in -span..=span {
            let (up, down) = (p.up_prob(x), p.down_prob(x));
            let mu = cur[idx(x + 1)];
            let md = cur[idx(x - 1)];
            let out = &mut next[idx(x)];
            for q in 0..5 {
                let mut acc = 0.0;
                for i in 0..=q {
                    let sign = if (q - i) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += BINOM[q][i] * (up * mu[i] + down * sign * md[i]);
                }
                out[q] = acc;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(law.iter().map(|(m, w)| w * cur[idx(m)][4]).sum())
}

// Exponent patterns tracked by the decomposition DP, as symmetric sums over
// distinct increment indices: {}, {1}, {2}, {3}, {4}, {1,1}, {2,1}, {3,1},
// {2,2}, {1,1,1}, {2,1,1}, {1,1,1,1}.
const PATTERNS: usize = 12;

fn absorb_increment(t: &[f64; PATTERNS], eps: f64, prob: f64, out: &mut [f64; PATTERNS]) {
    let (e1, e2, e3, e4) = (eps, eps * eps, eps * eps * eps, eps * eps * eps * eps);
    let upd = [
        t[0],
        t[1] + e1 * t[0],
        t[2] + e2 * t[0],
        t[3] + e3 * t[0],
        t[4] + e4 * t[0],
        t[5] + e1 * t[1],
        t[6] + e2 * t[1] + e1 * t[2],
        t[7] + e3 * t[1] + e1 * t[3],
        t[8] + e2 * t[2],
        t[9] + e1 * t[5],
        t[10] + e2 * t[5] + e1 * t[6],
        t[11] + e1 * t[9],
    ];
    for (o, u) in out.iter_mut().zip(upd) {
        *o += prob * u;
    }
}

fn breakdown_from(sums: &[f64; PATTERNS]) -> TermBreakdown {
    TermBreakdown {
        diagonal: sums[4],
        square_square: 6.0 * sums[8],
        square_cross: 4.0 * sums[7] + 12.0 * sums[10],
        full_cross: 24.0 * sums[11],
    }
}

/// Term groups of `E(S_k − S_j)^4` for every `k` in `j+1..=k_max`.
///
/// Forward DP from the law of `S_j`; each lattice point carries the partial
/// symmetric sums of every exponent pattern that can appear in a fourth
/// power, so the groups are read off without assuming `δ² = 1`.
pub fn decomposition_sweep(p: SkewParam, j: usize, k_max: usize) -> Result<Vec<TermBreakdown>> {
    check_pair(j, k_max)?;
    let law = exact_pmf(p, j)?;
    let reach = k_max as i64;
    let width = (2 * reach + 1) as usize;
    let idx = |x: i64| (x + reach) as usize;

    let mut cur = vec![[0.0; PATTERNS]; width];
    for (m, w) in law.iter() {
        cur[idx(m)][0] = w;
    }
    let mut next = vec![[0.0; PATTERNS]; width];
    let mut out = Vec::with_capacity(k_max - j);
    for time in j..k_max {
        let span = time as i64;
        next.iter_mut().for_each(|a| *a = [0.0; PATTERNS]);
        for x in -span..=span {
            let state = cur[idx(x)];
            if state[0] == 0.0 {
                continue;
            }
            absorb_increment(&state, 1.0, p.up_prob(x), &mut next[idx(x + 1)]);
            absorb_increment(&state, -1.0, p.down_prob(x), &mut next[idx(x - 1)]);
        }
        std::mem::swap(&mut cur, &mut next);
        let mut sums = [0.0; PATTERNS];
        for a in &cur {
            for (s, v) in sums.iter_mut().zip(a) {
                *s += v;
            }
        }
        out.push(breakdown_from(&sums));
    }
    Ok(out)
}

pub fn decomposition_terms(p: SkewParam, j: usize, k: usize) -> Result<TermBreakdown> {
    Ok(*decomposition_sweep(p, j, k)?.last().expect("k > j"))
}

/// Grid report for `(j, k)` at scale `n`, using the two DP routes.
pub fn moment_report(p: SkewParam, pair: GridPair) -> Result<MomentReport> {
    let raw = fourth_moment_exact(p, pair.j, pair.k)?;
    let terms = decomposition_terms(p, pair.j, pair.k)?;
    let scale = 1.0 / (pair.n as f64).powi(2);
    let gap = pair.t() - pair.s();
    Ok(MomentReport {
        pair,
        alpha: p.alpha(),
        fourth_moment: raw * scale,
        ratio: raw * scale / (gap * gap),
        terms: terms.scaled(scale),
    })
}

/// Reports for every grid pair with `k ≤ k_max`, ordered by `(j, k)`.
///
/// Totals come from the closed-form kernel and term groups from the
/// decomposition DP, so [`MomentReport::check`] compares two independent
/// computations.
pub fn moment_reports(p: SkewParam, n: usize, k_max: usize) -> Result<Vec<MomentReport>> {
    if n == 0 {
        return Err(Error::Domain("scale n must be positive".into()));
    }
    check_dp_horizon(k_max)?;
    let kernel = MomentKernel::new(k_max)?;
    let scale = 1.0 / (n as f64).powi(2);
    let per_j: Vec<Result<Vec<MomentReport>>> = (0..k_max)
        .into_par_iter()
        .map(|j| {
            let sweep = decomposition_sweep(p, j, k_max)?;
            sweep
                .into_iter()
                .enumerate()
                .map(|(i, terms)| {
                    let pair = GridPair::new(n, j, j + 1 + i)?;
                    let raw = kernel.grid_fourth_moment(p, pair.j, pair.k)?;
                    let d = pair.d() as f64;
                    Ok(MomentReport {
                        pair,
                        alpha: p.alpha(),
                        fourth_moment: raw * scale,
                        ratio: raw / (d * d),
                        terms: terms.scaled(scale),
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for chunk in per_j {
        out.extend(chunk?);
    }
    Ok(out)
}

/// `n·t` snapped to the nearest integer when within rounding of it.
fn scaled_time(n: usize, t: f64) -> (usize, f64) {
    let nt = n as f64 * t;
    let nearest = nt.round();
    if (nt - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        (nearest as usize, 0.0)
    } else {
        let a = nt.floor();
        (a as usize, nt - a)
    }
}

/// `X_n(t) = n^{-1/2} (S_[nt] + (nt − [nt])(S_[nt]+1 − S_[nt]))`.
pub fn interp_value(path: &PathSample, n: usize, t: f64) -> Result<f64> {
    if n == 0 || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "need n > 0 and t >= 0, got n={n}, t={t}"
        )));
    }
    let (a, frac) = scaled_time(n, t);
    let pos = path.positions();
    let needed = if frac > 0.0 { a + 1 } else { a };
    if needed >= pos.len() {
        return Err(Error::Domain(format!(
            "time {t} at scale {n} needs step {needed}, path has {} steps",
            pos.len() - 1
        )));
    }
    let base = pos[a] as f64;
    let next = if frac > 0.0 { pos[a + 1] as f64 } else { base };
    Ok((base + frac * (next - base)) / (n as f64).sqrt())
}

/// Interpolated increment `X_n(t) − X_n(s)` written as `n^{-1/2} Σ c_i δ_i`.
struct IncrementWeights {
    first: usize,
    coeffs: Vec<f64>,
}

fn increment_weights(n: usize, s: f64, t: f64) -> Result<IncrementWeights> {
    if n == 0 || !(s >= 0.0) || !(t > s) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "need n > 0 and 0 <= s < t, got n={n}, s={s}, t={t}"
        )));
    }
    let (a, us) = scaled_time(n, s);
    let (b, ut) = scaled_time(n, t);
    let coeffs = if a == b {
        vec![ut - us]
    } else {
        let mut c = vec![1.0; b - a];
        c[0] = 1.0 - us;
        if ut > 0.0 {
            c.push(ut);
        }
        c
    };
    Ok(IncrementWeights { first: a, coeffs })
}

/// Exact `E|X_n(t) − X_n(s)|^4` for arbitrary times.
///
/// Starts from the law of `S_[ns]` and carries `E[L^q; S = x]`, `q ≤ 4`, for
/// the partial weighted increment `L` through the cells between `s` and `t`.
pub fn fourth_moment_interp(p: SkewParam, n: usize, s: f64, t: f64) -> Result<f64> {
    let w = increment_weights(n, s, t)?;
    let last = w.first + w.coeffs.len();
    check_dp_horizon(last)?;
    let law = exact_pmf(p, w.first)?;
    let reach = last as i64;
    let width = (2 * reach + 1) as usize;
    let idx = |x: i64| (x + reach) as usize;

    let mut cur = vec![[0.0; 5]; width];
    for (m, pm) in law.iter() {
        cur[idx(m)][0] = pm;
    }
    let mut next = vec![[0.0; 5]; width];
    for (offset, &c) in w.coeffs.iter().enumerate() {
        let span = (w.first + offset) as i64;
        next.iter_mut().for_each(|a| *a = [0.0; 5]);
        for x in -span..=span {
            let st = cur[idx(x)];
            if st[0] == 0.0 {
                continue;
            }
            for (eps, prob) in [(1.0, p.up_prob(x)), (-1.0, p.down_prob(x))] {
                let step = c * eps;
                let pw = [1.0, step, step * step, step.powi(3), step.powi(4)];
                let target = &mut next[idx(x + eps as i64)];
                for q in 0..5 {
                    let mut acc = 0.0;
                    for r in 0..=q {
                        acc += BINOM[q][r] * st[r] * pw[q - r];
                    }
                    target[q] += prob * acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let raw: f64 = cur.iter().map(|a| a[4]).sum();
    Ok(raw / (n as f64).powi(2))
}

/// Precomputed reflected-walk tables for closed-form fourth moments up to a
/// fixed horizon `N`.
///
/// For a start point `y` and `m` further steps the displacement moments of the
/// skew walk are, with `c = 2α − 1`, `Z = Z_|y|(m)`, `W = W_|y|(m)`:
///
/// ```text
/// E[D]   = c Z
/// E[D²]  = m − 2 c y Z
/// E[D³]  = c (3W + Z + 3y² Z)
/// E[D⁴]  = 3m² − 2m − 4c ((y³ + y) Z + 3y W)
/// ```
///
/// where `Z_z(m) = Σ_{τ<m} P_z(S_τ = 0)` and `W_z(m) = Σ_{τ<m} Z_z(τ)`. These
/// follow from `E[δ | S] = c·1{S=0}` and `δ² = 1` by summing the one-step
/// drift of `S^q`. None of the tables depend on `α`.
pub struct MomentKernel {
    horizon: usize,
    // Row m of each triangular table holds z = 0..=m at offset m(m+1)/2.
    reflected: Vec<f64>,
    occupation: Vec<f64>,
    occupation_cum: Vec<f64>,
}

#[inline]
fn tri(m: usize) -> usize {
    m * (m + 1) / 2
}

impl MomentKernel {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon > MAX_KERNEL_HORIZON {
            return Err(Error::Resource {
                what: "kernel horizon",
                requested: horizon as u64,
                limit: MAX_KERNEL_HORIZON as u64,
            });
        }
        let size = tri(horizon + 1);
        let mut reflected = vec![0.0; size];
        for m in 0..=horizon {
            let law = reflected_pmf(m)?;
            reflected[tri(m)..tri(m) + m + 1].copy_from_slice(law.weights());
        }
        let mut occupation = vec![0.0; size];
        let mut occupation_cum = vec![0.0; size];
        for m in 0..horizon {
            let (row, next) = (tri(m), tri(m + 1));
            for z in 0..=m {
                // P_z(S_m = 0) = P(S_m = z) for the symmetric walk.
                let hit = if z == 0 {
                    reflected[row]
                } else {
                    0.5 * reflected[row + z]
                };
                occupation[next + z] = occupation[row + z] + hit;
                occupation_cum[next + z] = occupation_cum[row + z] + occupation[row + z];
            }
        }
        Ok(MomentKernel {
            horizon,
            reflected,
            occupation,
            occupation_cum,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    fn reflected_at(&self, m: usize, z: usize) -> f64 {
        if z > m {
            0.0
        } else {
            self.reflected[tri(m) + z]
        }
    }

    #[inline]
    fn hit_prob(&self, m: usize, z: usize) -> f64 {
        if z == 0 {
            self.reflected_at(m, 0)
        } else {
            0.5 * self.reflected_at(m, z)
        }
    }

    #[inline]
    fn occ(&self, z: usize, m: usize) -> (f64, f64) {
        if z >= m {
            (0.0, 0.0)
        } else {
            (self.occupation[tri(m) + z], self.occupation_cum[tri(m) + z])
        }
    }

    fn check(&self, k: usize) -> Result<()> {
        if k > self.horizon {
            return Err(Error::Domain(format!(
                "index {k} beyond kernel horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `Σ_{z>0} P(|S_j| = z) ((z³ + z) Z_z(d) + 3z W_z(d))`, the α-free part of
    /// the departure of `E(S_{j+d} − S_j)^4` from `3d² − 2d`.
    pub fn skew_correction(&self, j: usize, d: usize) -> f64 {
        let row = tri(j);
        let zmax = j.min(d.saturating_sub(1));
        let start = if j % 2 == 1 { 1 } else { 2 };
        let (orow, crow) = (tri(d), tri(d));
        let mut acc = 0.0;
        let mut z = start;
        while z <= zmax {
            let zf = z as f64;
            let occ = self.occupation[orow + z];
            let cum = self.occupation_cum[crow + z];
            acc += self.reflected[row + z] * ((zf * zf * zf + zf) * occ + 3.0 * zf * cum);
            z += 2;
        }
        acc
    }

    /// `E(S_k − S_j)^4`.
    pub fn grid_fourth_moment(&self, p: SkewParam, j: usize, k: usize) -> Result<f64> {
        if j >= k {
            return Err(Error::Domain(format!("need j < k, got j={j}, k={k}")));
        }
        self.check(k)?;
        let d = k - j;
        let df = d as f64;
        Ok(3.0 * df * df - 2.0 * df - 4.0 * p.skew() * p.skew() * self.skew_correction(j, d))
    }

    /// Displacement moment `E[(S_m − y)^q | S_0 = y]` for `q ≤ 4`.
    fn displacement_moment(&self, c: f64, y: i64, m: usize, q: usize) -> f64 {
        let (z, w) = self.occ(y.unsigned_abs() as usize, m);
        let yf = y as f64;
        let mf = m as f64;
        match q {
            0 => 1.0,
            1 => c * z,
            2 => mf - 2.0 * c * yf * z,
            3 => c * (3.0 * w + z + 3.0 * yf * yf * z),
            4 => 3.0 * mf * mf - 2.0 * mf - 4.0 * c * ((yf * yf * yf + yf) * z + 3.0 * yf * w),
            _ => unreachable!(),
        }
    }

    /// Exact `E|X_n(t) − X_n(s)|^4` from the closed forms; `O(n·s)` work.
    ///
    /// With `a = [ns]`, `b = [nt]` and fractional parts `u_s`, `u_t`, the
    /// increment is `(1 − u_s) δ_a + (S_b − S_{a+1}) + u_t δ_b`. Condition on
    /// `S_a` and the first step, use the displacement moments for the middle
    /// stretch and `E[δ_b^r | S_b]` for the last cell.
    pub fn interp_fourth_moment(&self, p: SkewParam, n: usize, s: f64, t: f64) -> Result<f64> {
        increment_weights(n, s, t)?;
        let scale = 1.0 / (n as f64).powi(2);
        let (a, us) = scaled_time(n, s);
        let (b, ut) = scaled_time(n, t);
        if a == b {
            return Ok((ut - us).powi(4) * scale);
        }
        self.check(b)?;
        let m = b - a - 1;
        let c = p.skew();
        let head = 1.0 - us;
        let mut total = 0.0;
        let row = tri(a);
        for x in -(a as i64)..=(a as i64) {
            let refl = self.reflected[row + x.unsigned_abs() as usize];
            let px = match x.signum() {
                1 => p.alpha() * refl,
                -1 => (1.0 - p.alpha()) * refl,
                _ => refl,
            };
            if px == 0.0 {
                continue;
            }
            for (eps, pe) in [(1.0, p.up_prob(x)), (-1.0, p.down_prob(x))] {
                let y = x + eps as i64;
                let at_zero = self.hit_prob(m, y.unsigned_abs() as usize);
                let mut acc = 0.0;
                for pa in 0..=4usize {
                    for r in 0..=(4 - pa) {
                        let q = 4 - pa - r;
                        if r > 0 && ut == 0.0 {
                            continue;
                        }
                        let mult = 24.0 / (FACT[pa] * FACT[q] * FACT[r]);
                        let lead = (head * eps).powi(pa as i32) * ut.powi(r as i32);
                        let middle = if r % 2 == 0 {
                            self.displacement_moment(c, y, m, q)
                        } else {
                            c * (-(y as f64)).powi(q as i32) * at_zero
                        };
                        acc += mult * lead * middle;
                    }
                }
                total += px * pe * acc;
            }
        }
        Ok(total * scale)
    }
}

const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Largest ratio found at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub s: f64,
    pub t: f64,
    pub fourth_moment: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub grid_j: usize,
    pub grid_k: usize,
    pub grid: ScanPoint,
    /// Worst of the sampled off-grid pairs, if any were requested.
    pub off_grid: Option<ScanPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub alpha: f64,
    pub horizon: f64,
    pub rows: Vec<ScanRow>,
    /// Largest grid ratio over all scales: the empirical `C_α`.
    pub empirical_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub n_list: Vec<usize>,
    pub horizon: f64,
    pub off_grid_samples: usize,
    pub seed: u64,
}

impl ScanConfig {
    pub fn new(n_list: Vec<usize>, horizon: f64) -> Self {
        ScanConfig {
            n_list,
            horizon,
            off_grid_samples: 1000,
            seed: 0,
        }
    }
}

fn grid_horizon(n: usize, horizon: f64) -> usize {
    (n as f64 * horizon + 1e-9).floor() as usize
}

/// Sup of `E|X_n(t) − X_n(s)|^4 / (t − s)²` over all grid pairs in
/// `[0, horizon]` for each scale, plus a fixed-seed sample of off-grid pairs.
pub fn tightness_scan(p: SkewParam, n_list: &[usize], horizon: f64) -> Result<ScanReport> {
    let cfg = ScanConfig::new(n_list.to_vec(), horizon);
    Ok(tightness_scan_many(&[p], &cfg)?.remove(0))
}

/// [`tightness_scan`] for several skew values sharing one set of tables.
///
/// At a grid pair the ratio equals `E(S_k − S_j)^4 / (k − j)²` and does not
/// depend on `n`, so one pass over all pairs up to the largest horizon serves
/// every scale. The per-`k` maxima are reduced with a total order on
/// `(ratio, −j)`, which makes the result independent of scheduling.
pub fn tightness_scan_many(params: &[SkewParam], cfg: &ScanConfig) -> Result<Vec<ScanReport>> {
    if cfg.n_list.is_empty() || cfg.n_list.contains(&0) {
        return Err(Error::Domain("scales must be positive and nonempty".into()));
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(Error::Domain(format!(
            "horizon must be positive, got {}",
            cfg.horizon
        )));
    }
    let tops: Vec<usize> = cfg
        .n_list
        .iter()
        .map(|&n| grid_horizon(n, cfg.horizon))
        .collect();
    if let Some(pos) = tops.iter().position(|&top| top == 0) {
        return Err(Error::Domain(format!(
            "scale {} has no grid pair below horizon {}",
            cfg.n_list[pos], cfg.horizon
        )));
    }
    let big = *tops.iter().max().expect("nonempty");
    let kernel = MomentKernel::new(big)?;
    let skews: Vec<f64> = params.iter().map(|p| p.skew() * p.skew()).collect();

    // best[a][k] = (ratio, j) maximising over j < k for skew value a.
    type Best = Vec<Vec<(f64, usize)>>;
    let empty = || -> Best { vec![vec![(f64::NEG_INFINITY, usize::MAX); big + 1]; params.len()] };
    let better = |x: (f64, usize), y: (f64, usize)| {
        if x.0 > y.0 || (x.0 == y.0 && x.1 < y.1) {
            x
        } else {
            y
        }
    };
    let best = (0..big)
        .into_par_iter()
        .fold(empty, |mut acc, j| {
            for d in 1..=(big - j) {
                let df = d as f64;
                let base = 3.0 * df * df - 2.0 * df;
                let corr = kernel.skew_correction(j, d);
                for (a, &k2) in skews.iter().enumerate() {
                    let ratio = (base - 4.0 * k2 * corr) / (df * df);
                    let slot = &mut acc[a][j + d];
                    *slot = better((ratio, j), *slot);
                }
            }
            acc
        })
        .reduce(empty, |mut x, y| {
            for (xa, ya) in x.iter_mut().zip(y) {
                for (xs, ys) in xa.iter_mut().zip(ya) {
                    *xs = better(*xs, ys);
                }
            }
            x
        });

    let mut reports = Vec::with_capacity(params.len());
    for (a, &p) in params.iter().enumerate() {
        let mut rows = Vec::with_capacity(cfg.n_list.len());
        for (idx, (&n, &top)) in cfg.n_list.iter().zip(&tops).enumerate() {
            let (mut ratio, mut j, mut k) = (f64::NEG_INFINITY, 0, 0);
            for kk in 1..=top {
                let cand = best[a][kk];
                if cand.0 > ratio {
                    (ratio, j, k) = (cand.0, cand.1, kk);
                }
            }
            let nf = n as f64;
            let gap = (k - j) as f64 / nf;
            let grid = ScanPoint {
                s: j as f64 / nf,
                t: k as f64 / nf,
                fourth_moment: ratio * gap * gap,
                ratio,
            };
            let off_grid = if cfg.off_grid_samples > 0 {
                let stream = RngContract::new(cfg.seed, idx as u64);
                Some(off_grid_sup(
                    &kernel,
                    p,
                    n,
                    top as f64 / nf,
                    cfg.off_grid_samples,
                    stream,
                )?)
            } else {
                None
            };
            rows.push(ScanRow {
                n,
                grid_j: j,
                grid_k: k,
                grid,
                off_grid,
            });
        }
        let empirical_constant = rows.iter().map(|r| r.grid.ratio).fold(0.0, f64::max);
        reports.push(ScanReport {
            alpha: p.alpha(),
            horizon: cfg.horizon,
            rows,
            empirical_constant,
        });
    }
    Ok(reports)
}

/// Draws `count` pairs `s < t` uniformly on `[0, top]` avoiding grid points.
pub fn off_grid_pairs(n: usize, top: f64, count: usize, stream: RngContract) -> Vec<(f64, f64)> {
    let mut rng = stream.rng();
    let nf = n as f64;
    let on_grid = |x: f64| (x * nf - (x * nf).round()).abs() < 1e-9;
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let x: f64 = rng.random::<f64>() * top;
        let y: f64 = rng.random::<f64>() * top;
        if x == y || on_grid(x) || on_grid(y) {
            continue;
        }
        pairs.push((x.min(y), x.max(y)));
    }
    pairs
}

fn off_grid_sup(
    kernel: &MomentKernel,
    p: SkewParam,
    n: usize,
    top: f64,
    count: usize,
    stream: RngContract,
) -> Result<ScanPoint> {
    let pairs = off_grid_pairs(n, top, count, stream);
    let points: Vec<Result<ScanPoint>> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let m4 = kernel.interp_fourth_moment(p, n, s, t)?;
            Ok(ScanPoint {
                s,
                t,
                fourth_moment: m4,
                ratio: m4 / ((t - s) * (t - s)),
            })
        })
        .collect();
    let mut worst: Option<ScanPoint> = None;
    for pt in points {
        let pt = pt?;
        if worst.is_none_or(|w| pt.ratio > w.ratio) {
            worst = Some(pt);
        }
    }
    Ok(worst.expect("count > 0"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::rng::RngContract;
    use crate::simulator::{mc_interp_fourth_moment, PathSample};
    use proptest::prelude::*;

    const ALPHAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

    fn a(x: f64) -> SkewParam {
        SkewParam::new(x).unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs().max(1e-300)
    }

    #[test]
    fn all_routes_match_enumeration() {
        let kernel = MomentKernel::new(16).unwrap();
        for alpha in ALPHAS {
            let truth = oracle::enumerate(alpha, 16);
            for j in 0..16 {
                let sweep = decomposition_sweep(a(alpha), j, 16).unwrap();
                for k in j + 1..=16 {
                    let want = truth.pair_fourth[j][k];
                    let exact = fourth_moment_exact(a(alpha), j, k).unwrap();
                    let split = sweep[k - j - 1].total();
                    let closed = kernel.grid_fourth_moment(a(alpha), j, k).unwrap();
                    for got in [exact, split, closed] {
                        assert!(
                            rel(got, want) < 1e-10,
                            "alpha={alpha} j={j} k={k}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_walk_moment() {
        let kernel = MomentKernel::new(64).unwrap();
        for (j, k) in [(0, 1), (0, 2), (3, 10), (17, 64)] {
            let d = (k - j) as f64;
            let want = 3.0 * d * d - 2.0 * d;
            assert!(rel(fourth_moment_exact(a(0.5), j, k).unwrap(), want) < 1e-12);
            assert!(rel(kernel.grid_fourth_moment(a(0.5), j, k).unwrap(), want) < 1e-12);
        }
    }

    #[test]
    fn start_pair_attains_symmetric_bound() {
        let kernel = MomentKernel::new(40).unwrap();
        for alpha in ALPHAS {
            for d in 1..=40 {
                let df = d as f64;
                let m = kernel.grid_fourth_moment(a(alpha), 0, d).unwrap();
                assert!(rel(m, 3.0 * df * df - 2.0 * df) < 1e-12);
                for j in 1..=(40 - d) {
                    let m = kernel.grid_fourth_moment(a(alpha), j, j + d).unwrap();
                    assert!(m <= 3.0 * df * df - 2.0 * df + 1e-9);
                }
            }
        }
    }

    #[test]
    fn decomposition_with_unit_squares() {
        // δ² = 1 pins the first two groups.
        let terms = decomposition_terms(a(0.8), 5, 17).unwrap();
        let d = 12.0;
        assert!(rel(terms.diagonal, d) < 1e-12);
        assert!(rel(terms.square_square, 3.0 * d * (d - 1.0)) < 1e-12);
    }

    #[test]
    fn reports_are_consistent() {
        let reports = moment_reports(a(0.3), 32, 32).unwrap();
        assert_eq!(reports.len(), 32 * 33 / 2);
        for r in &reports {
            r.check().unwrap();
            let dp = moment_report(a(0.3), r.pair).unwrap();
            assert!(rel(r.fourth_moment, dp.fourth_moment) < 1e-10);
            assert!(rel(r.ratio, dp.ratio) < 1e-10);
        }
        assert_eq!(reports[0].pair, GridPair::new(32, 0, 1).unwrap());
    }

    #[test]
    fn kernel_matches_dp_at_larger_horizon() {
        let kernel = MomentKernel::new(300).unwrap();
        for alpha in [0.15, 0.95] {
            for (j, k) in [(1, 300), (150, 151), (77, 230), (299, 300)] {
                let dp = fourth_moment_exact(a(alpha), j, k).unwrap();
                let closed = kernel.grid_fourth_moment(a(alpha), j, k).unwrap();
                assert!(rel(closed, dp) < 1e-10, "{j} {k}: {closed} vs {dp}");
            }
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(fourth_moment_exact(a(0.5), 3, 3).is_err());
        assert!(GridPair::new(0, 0, 1).is_err());
        assert!(matches!(
            fourth_moment_exact(a(0.5), 0, MAX_DP_HORIZON + 1),
            Err(Error::Resource { .. })
        ));
        assert!(matches!(
            MomentKernel::new(MAX_KERNEL_HORIZON + 1),
            Err(Error::Resource { .. })
        ));
        assert!(MomentKernel::new(8)
            .unwrap()
            .grid_fourth_moment(a(0.5), 0, 9)
            .is_err());
    }

    #[test]
    fn interpolated_path_values() {
        let path = PathSample::from_positions(vec![0, 1, 2]).unwrap();
        assert!((interp_value(&path, 4, 0.375).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(interp_value(&path, 4, 0.5).unwrap(), 1.0);
        assert!(interp_value(&path, 4, 0.6).is_err());
    }

    #[test]
    fn interpolation_within_one_cell() {
        for n in [1, 7, 64] {
            let nf = n as f64;
            let want = 1.0 / (16.0 * nf * nf);
            let dp = fourth_moment_interp(a(0.7), n, 0.0, 1.0 / (2.0 * nf)).unwrap();
            assert!(rel(dp, want) < 1e-12);
            let kernel = MomentKernel::new(n).unwrap();
            let closed = kernel
                .interp_fourth_moment(a(0.7), n, 0.0, 1.0 / (2.0 * nf))
                .unwrap();
            assert!(rel(closed, want) < 1e-12);
        }
    }

    #[test]
    fn interpolation_matches_enumeration() {
        let n = 8;
        let kernel = MomentKernel::new(24).unwrap();
        let pairs = [
            (0.0, 1.0),
            (0.3, 0.8),
            (0.05, 0.1),
            (0.125, 2.5),
            (1.01, 1.99),
            (0.5, 0.55),
        ];
        for alpha in ALPHAS {
            for (s, t) in pairs {
                let want = oracle::interp_fourth_moment(alpha, n, s, t);
                let dp = fourth_moment_interp(a(alpha), n, s, t).unwrap();
                let closed = kernel.interp_fourth_moment(a(alpha), n, s, t).unwrap();
                assert!(rel(dp, want) < 1e-10, "dp alpha={alpha} ({s},{t})");
                assert!(rel(closed, want) < 1e-10, "kernel alpha={alpha} ({s},{t})");
            }
        }
    }

    #[test]
    fn interpolation_on_grid_reduces_to_pairs() {
        let n = 16;
        let m = fourth_moment_interp(a(0.2), n, 0.25, 0.75).unwrap();
        let raw = fourth_moment_exact(a(0.2), 4, 12).unwrap();
        assert!(rel(m, raw / 256.0) < 1e-12);
    }

    #[test]
    fn interpolation_monte_carlo() {
        let exact = fourth_moment_interp(a(0.7), 8, 0.3, 0.8).unwrap();
        let mc =
            mc_interp_fourth_moment(a(0.7), 8, 0.3, 0.8, 400_000, RngContract::new(31, 0)).unwrap();
        assert!(
            (mc.estimate - exact).abs() < 4.0 * mc.stderr,
            "{mc:?} vs {exact}"
        );
    }

    #[test]
    fn scan_structure() {
        let mut cfg = ScanConfig::new(vec![8, 16, 32], 1.0);
        cfg.off_grid_samples = 50;
        let reports = tightness_scan_many(&[a(0.5), a(0.9)], &cfg).unwrap();
        // The sup at the symmetric point is 3 − 2/N, attained from the start.
        for row in &reports[0].rows {
            let top = row.n as f64;
            assert!(rel(row.grid.ratio, 3.0 - 2.0 / top) < 1e-12);
            assert_eq!((row.grid_j, row.grid_k), (0, row.n));
            assert!(row.off_grid.unwrap().ratio <= row.grid.ratio * (1.0 + 1e-12));
        }
        let again = tightness_scan_many(&[a(0.5), a(0.9)], &cfg).unwrap();
        assert_eq!(reports, again);
        let single = tightness_scan(a(0.9), &[8, 16, 32], 1.0).unwrap();
        assert_eq!(single.empirical_constant, reports[1].empirical_constant);
        assert!(tightness_scan(a(0.5), &[], 1.0).is_err());
        assert!(tightness_scan(a(0.5), &[4], 0.1).is_err());
    }

    #[test]
    fn scan_matches_brute_force_sup() {
        let n = 20;
        let report = tightness_scan(a(0.85), &[n], 1.5).unwrap();
        let mut best = 0.0f64;
        for j in 0..30 {
            for k in j + 1..=30 {
                let d = (k - j) as f64;
                best = best.max(fourth_moment_exact(a(0.85), j, k).unwrap() / (d * d));
            }
        }
        assert!(rel(report.empirical_constant, best) < 1e-12);
    }

    #[test]
    fn off_grid_pairs_avoid_grid() {
        let pairs = off_grid_pairs(10, 1.0, 200, RngContract::new(4, 0));
        assert_eq!(pairs.len(), 200);
        for (s, t) in pairs {
            assert!(0.0 <= s && s < t && t <= 1.0);
            assert!((s * 10.0).fract() != 0.0);
        }
    }

    proptest! {
        #[test]
        fn mirror_invariance(alpha in 0.01f64..0.99, j in 0usize..40, d in 1usize..40) {
            let x = fourth_moment_exact(a(alpha), j, j + d).unwrap();
            let y = fourth_moment_exact(a(1.0 - alpha), j, j + d).unwrap();
            prop_assert!(rel(x, y) < 1e-10);
        }

        #[test]
        fn terms_add_up(alpha in 0.01f64..0.99, j in 0usize..30, d in 1usize..30) {
            let terms = decomposition_terms(a(alpha), j, j + d).unwrap();
            let total = fourth_moment_exact(a(alpha), j, j + d).unwrap();
            prop_assert!(rel(terms.total(), total) < 1e-9);
        }

        #[test]
        fn interp_routes_agree(alpha in 0.01f64..0.99, n in 1usize..40, s in 0.0f64..2.0, w in 0.001f64..2.0) {
            let t = s + w;
            let dp = fourth_moment_interp(a(alpha), n, s, t).unwrap();
            let kernel = MomentKernel::new(n * 4 + 2).unwrap();
            let closed = kernel.interp_fourth_moment(a(alpha), n, s, t).unwrap();
            prop_assert!((dp - closed).abs() <= 1e-9 * dp.max(1e-12));
        }
    }
}
