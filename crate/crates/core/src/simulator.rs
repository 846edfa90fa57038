//! Seeded path sampling, Monte Carlo moment estimates and distance to the
//! skew Brownian marginal.
//!
//! Replicated experiments split the work into chunks of [`CHUNK_SIZE`]
//! replicates; chunk `c` draws from `contract.child(c)` and chunk results are
//! combined in chunk order, so output depends on the seed and chunk size only.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::lattice::{factorized_pmf, SkewParam};
use crate::moments::interp_value;
use crate::rng::RngContract;
use crate::stats::CompensatedSum;

pub const CHUNK_SIZE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    /// Step-by-step draws from the transition kernel.
    Direct,
    /// Reflected symmetric walk with an independent sign per excursion.
    Excursion,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Direct => "direct",
            SamplerKind::Excursion => "excursion",
        }
    }
}

/// One realised trajectory `S_0, …, S_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    positions: Vec<i64>,
    alpha: f64,
    rng: RngContract,
    sampler: SamplerKind,
}

impl PathSample {
    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rng(&self) -> RngContract {
        self.rng
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    /// Starts at the origin and moves by exactly one at every step.
    pub fn is_valid(&self) -> bool {
        self.positions.first() == Some(&0)
            && self.positions.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
    }

    /// A hand-built path, for evaluating path functionals on fixed inputs.
    pub fn from_positions(positions: Vec<i64>) -> Result<Self> {
        let path = PathSample {
            positions,
            alpha: f64::NAN,
            rng: RngContract::new(0, 0),
            sampler: SamplerKind::Direct,
        };
        if !path.is_valid() {
            return Err(Error::Domain("path must start at 0 with unit steps".into()));
        }
        Ok(path)
    }
}

/// Fair coin flips served 64 at a time from one RNG word.
struct Coins {
    word: u64,
    left: u32,
}

impl Coins {
    fn new() -> Self {
        Coins { word: 0, left: 0 }
    }

    #[inline]
    fn flip<R: RngCore>(&mut self, rng: &mut R) -> bool {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        bit
    }
}

fn fill_direct<R: RngCore>(p: SkewParam, n: usize, rng: &mut R, out: &mut Vec<i64>) {
    out.clear();
    out.push(0);
    let mut coins = Coins::new();
    let mut pos = 0i64;
    for _ in 0..n {
        let up = if pos == 0 {
            rng.random::<f64>() < p.alpha()
        } else {
            coins.flip(rng)
        };
        pos += if up { 1 } else { -1 };
        out.push(pos);
    }
}

fn fill_excursion<R: RngCore>(p: SkewParam, n: usize, rng: &mut R, out: &mut Vec<i64>) {
    out.clear();
    out.push(0);
    let mut coins = Coins::new();
    let mut level = 0i64;
    let mut sign = 1i64;
    for _ in 0..n {
        if level == 0 {
            // Leaving the origin opens a new excursion with a fresh sign.
            sign = if rng.random::<f64>() < p.alpha() {
                1
            } else {
                -1
            };
            level = 1;
        } else {
            level += if coins.flip(rng) { 1 } else { -1 };
        }
        out.push(sign * level);
    }
}

fn fill<R: RngCore>(kind: SamplerKind, p: SkewParam, n: usize, rng: &mut R, out: &mut Vec<i64>) {
    match kind {
        SamplerKind::Direct => fill_direct(p, n, rng, out),
        SamplerKind::Excursion => fill_excursion(p, n, rng, out),
    }
}

pub fn sample_path(kind: SamplerKind, p: SkewParam, n: usize, rng: RngContract) -> PathSample {
    let mut positions = Vec::with_capacity(n + 1);
    fill(kind, p, n, &mut rng.rng(), &mut positions);
    PathSample {
        positions,
        alpha: p.alpha(),
        rng,
        sampler: kind,
    }
}

/// Path of length `n` drawn step by step from the kernel.
pub fn sample_path_direct(p: SkewParam, n: usize, rng: RngContract) -> PathSample {
    sample_path(SamplerKind::Direct, p, n, rng)
}

/// Path of length `n` built from a reflected walk whose excursions receive
/// independent signs, `+` with probability `α`. The last, possibly
/// unfinished, excursion is signed too.
pub fn sample_path_excursion(p: SkewParam, n: usize, rng: RngContract) -> PathSample {
    sample_path(SamplerKind::Excursion, p, n, rng)
}

/// Runs `replicates` draws in chunks, each chunk on its own derived stream,
/// and returns the per-chunk results in chunk order.
pub fn map_chunks<T, F>(replicates: usize, contract: RngContract, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = replicates.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = CHUNK_SIZE.min(replicates - c * CHUNK_SIZE);
            let mut rng = contract.child(c as u64).rng();
            work(&mut rng, size)
        })
        .collect()
}

/// Histogram of `S_k` over `[-k, k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointCounts {
    pub k: usize,
    /// `counts[i]` counts the point `i − k`.
    pub counts: Vec<u64>,
}

impl EndpointCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, m: i64) -> u64 {
        let i = m + self.k as i64;
        if i < 0 {
            return 0;
        }
        self.counts.get(i as usize).copied().unwrap_or(0)
    }

    /// Histogram of `−S_k`.
    pub fn negated(&self) -> EndpointCounts {
        let mut counts = self.counts.clone();
        counts.reverse();
        EndpointCounts { k: self.k, counts }
    }

    /// Histogram of `|S_k|` over `[0, k]`.
    pub fn folded(&self) -> Vec<u64> {
        let k = self.k as i64;
        (0..=k)
            .map(|z| {
                if z == 0 {
                    self.count(0)
                } else {
                    self.count(z) + self.count(-z)
                }
            })
            .collect()
    }
}

/// Endpoint histogram of `replicates` independent paths.
pub fn endpoint_counts(
    kind: SamplerKind,
    p: SkewParam,
    k: usize,
    replicates: usize,
    contract: RngContract,
) -> EndpointCounts {
    let parts = map_chunks(replicates, contract, |rng, size| {
        let mut counts = vec![0u64; 2 * k + 1];
        let mut buf = Vec::with_capacity(k + 1);
        for _ in 0..size {
            fill(kind, p, k, rng, &mut buf);
            counts[(buf[k] + k as i64) as usize] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; 2 * k + 1];
    for part in parts {
        for (c, x) in counts.iter_mut().zip(part) {
            *c += x;
        }
    }
    EndpointCounts { k, counts }
}

/// Fraction of departures from the origin that went up, with the number of
/// departures, along a single long path.
pub fn origin_up_fraction(path: &PathSample) -> (f64, u64) {
    let mut ups = 0u64;
    let mut visits = 0u64;
    for w in path.positions().windows(2) {
        if w[0] == 0 {
            visits += 1;
            if w[1] == 1 {
                ups += 1;
            }
        }
    }
    (ups as f64 / visits.max(1) as f64, visits)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub replicates: usize,
}

fn summarise(parts: Vec<(CompensatedSum, CompensatedSum)>, replicates: usize) -> McEstimate {
    let mut sum = CompensatedSum::default();
    let mut sq = CompensatedSum::default();
    for (s, q) in &parts {
        sum.merge(s);
        sq.merge(q);
    }
    let n = replicates as f64;
    let mean = sum.value() / n;
    let var = ((sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
    McEstimate {
        estimate: mean,
        stderr: (var / n).sqrt(),
        replicates,
    }
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    Ok(())
}

/// Sample mean and standard error of `|S_k − S_j|^4` over paths of length `n`.
pub fn mc_fourth_moment(
    p: SkewParam,
    n: usize,
    j: usize,
    k: usize,
    replicates: usize,
    contract: RngContract,
) -> Result<McEstimate> {
    check_replicates(replicates)?;
    if j >= k || k > n {
        return Err(Error::Domain(format!(
            "need j < k <= n, got j={j}, k={k}, n={n}"
        )));
    }
    let parts = map_chunks(replicates, contract, |rng, size| {
        let mut sum = CompensatedSum::default();
        let mut sq = CompensatedSum::default();
        let mut buf = Vec::with_capacity(n + 1);
        for _ in 0..size {
            fill_direct(p, n, rng, &mut buf);
            let x = ((buf[k] - buf[j]) as f64).powi(4);
            sum.add(x);
            sq.add(x * x);
        }
        (sum, sq)
    });
    Ok(summarise(parts, replicates))
}

/// Monte Carlo estimate of `E|X_n(t) − X_n(s)|^4`.
pub fn mc_interp_fourth_moment(
    p: SkewParam,
    n: usize,
    s: f64,
    t: f64,
    replicates: usize,
    contract: RngContract,
) -> Result<McEstimate> {
    check_replicates(replicates)?;
    if n == 0 || !(0.0 <= s && s < t && t.is_finite()) {
        return Err(Error::Domain(format!("need 0 <= s < t, got s={s}, t={t}")));
    }
    let len = (n as f64 * t).floor() as usize + 1;
    let parts: Vec<Result<(CompensatedSum, CompensatedSum)>> =
        map_chunks(replicates, contract, |rng, size| {
            let mut sum = CompensatedSum::default();
            let mut sq = CompensatedSum::default();
            let mut path = PathSample {
                positions: Vec::with_capacity(len + 1),
                alpha: p.alpha(),
                rng: contract,
                sampler: SamplerKind::Direct,
            };
            for _ in 0..size {
                fill_direct(p, len, rng, &mut path.positions);
                let diff = interp_value(&path, n, t)? - interp_value(&path, n, s)?;
                let x = diff.powi(4);
                sum.add(x);
                sq.add(x * x);
            }
            Ok((sum, sq))
        });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(summarise(parts, replicates))
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Marginal CDF of skew Brownian motion started at the origin:
/// `2(1−α)Φ(y/√t)` below zero, `(1−α) + α(2Φ(y/√t) − 1)` from zero up.
pub fn skew_bm_cdf(p: SkewParam, t: f64, y: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let a = p.alpha();
    if y == f64::INFINITY {
        return Ok(1.0);
    }
    let phi = std_normal_cdf(y / t.sqrt());
    Ok(if y < 0.0 {
        2.0 * (1.0 - a) * phi
    } else {
        (1.0 - a) + a * (2.0 * phi - 1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KsMode {
    /// Exact law of `X_n(t)`; requires `n·t` to be a positive integer.
    Exact,
    Empirical {
        replicates: usize,
        rng: RngContract,
    },
}

/// Sup distance between a step CDF given by sorted `(point, mass)` atoms and
/// a continuous reference CDF, checked on both sides of every jump.
fn sup_distance(atoms: impl Iterator<Item = (f64, f64)>, reference: impl Fn(f64) -> f64) -> f64 {
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for (x, mass) in atoms {
        let f = reference(x);
        let above = below + mass;
        worst = worst.max((below - f).abs()).max((above - f).abs());
        below = above;
    }
    worst
}

/// Kolmogorov–Smirnov distance between the law of `X_n(t)` and the skew
/// Brownian marginal at time `t`.
pub fn ks_statistic(p: SkewParam, n: usize, t: f64, mode: KsMode) -> Result<f64> {
    if n == 0 || !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "need n > 0 and t > 0, got n={n}, t={t}"
        )));
    }
    let root_n = (n as f64).sqrt();
    let reference = |y: f64| skew_bm_cdf(p, t, y).expect("t > 0");
    match mode {
        KsMode::Exact => {
            let nt = n as f64 * t;
            let k = nt.round();
            if (nt - k).abs() > 1e-9 * k.max(1.0) || k < 1.0 {
                return Err(Error::Domain(format!(
                    "exact mode needs n*t to be a positive integer, got {nt}"
                )));
            }
            let law = factorized_pmf(p, k as usize)?;
            let atoms = law
                .iter()
                .filter(|&(_, w)| w > 0.0)
                .map(|(m, w)| (m as f64 / root_n, w));
            Ok(sup_distance(atoms, reference))
        }
        KsMode::Empirical { replicates, rng } => {
            check_replicates(replicates)?;
            let len = (n as f64 * t).floor() as usize + 1;
            let parts: Vec<Result<Vec<f64>>> = map_chunks(replicates, rng, |r, size| {
                let mut path = PathSample {
                    positions: Vec::with_capacity(len + 1),
                    alpha: p.alpha(),
                    rng,
                    sampler: SamplerKind::Direct,
                };
                let mut out = Vec::with_capacity(size);
                for _ in 0..size {
                    fill_direct(p, len, r, &mut path.positions);
                    out.push(interp_value(&path, n, t)?);
                }
                Ok(out)
            });
            let mut values = Vec::with_capacity(replicates);
            for part in parts {
                values.extend(part?);
            }
            values.sort_by(f64::total_cmp);
            let weight = 1.0 / replicates as f64;
            let mut atoms = Vec::new();
            for v in values {
                match atoms.last_mut() {
                    Some((x, w)) if *x == v => *w += weight,
                    _ => atoms.push((v, weight)),
                }
            }
            Ok(sup_distance(atoms.into_iter(), reference))
        }
    }
}
