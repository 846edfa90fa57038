use rayon::prelude::*;
use skewwalk::asymptotics::{convolve, g_seq, partial_sums, tauberian_ratio, ConvSeq};
use skewwalk::lattice::{exact_pmf, factorized_pmf, MAX_EXACT_STEPS};
use skewwalk::moments::{moment_reports, tightness_scan_many, ScanConfig};
use skewwalk::simulator::{endpoint_counts, ks_statistic, KsMode, SamplerKind};
use skewwalk::stats::{chi_square_gof, chi_square_two_sample};
use skewwalk::{RngContract, SkewParam};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::table::{Cell, Table};

/// Largest `n·horizon` accepted by `moments`, whose output grows like its square.
pub const MAX_MOMENT_GRID: usize = 512;

/// Largest index accepted by `convolution` and `tauberian`.
pub const MAX_SEQUENCE_INDEX: usize = 1 << 18;

const FACTORIZATION_TOL: f64 = 1e-12;

type Run = Result<Vec<Table>, CliError>;

pub fn execute(cfg: &ExperimentConfig) -> Run {
    let params = cfg
        .alpha
        .iter()
        .map(|&a| SkewParam::new(a))
        .collect::<skewwalk::Result<Vec<_>>>()?;
    match cfg.command {
        Command::Pmf => pmf(cfg, &params),
        Command::Convolution => convolution(cfg),
        Command::Tauberian => tauberian(cfg),
        Command::Moments => moments(cfg, &params),
        Command::TightnessScan => tightness(cfg, &params),
        Command::Simulate => simulate(cfg, &params),
        Command::Converge => converge(cfg, &params),
    }
}

fn single_alpha(params: &[SkewParam]) -> Result<SkewParam, CliError> {
    match params {
        [p] => Ok(*p),
        _ => Err(CliError::Usage(
            "--alpha: this command takes a single value".into(),
        )),
    }
}

fn limit(what: &str, requested: usize, max: usize) -> Result<(), CliError> {
    if requested > max {
        return Err(CliError::Resource(format!(
            "{what} {requested} exceeds the limit {max}"
        )));
    }
    Ok(())
}

fn grid_top(n: usize, horizon: f64) -> usize {
    (n as f64 * horizon + 1e-9).floor() as usize
}

fn pmf(cfg: &ExperimentConfig, params: &[SkewParam]) -> Run {
    let p = single_alpha(params)?;
    let mut table = Table::new("pmf", &["k", "m", "prob"]);
    for &k in &cfg.n {
        limit("--n", k, MAX_EXACT_STEPS)?;
        let law = exact_pmf(p, k)?;
        let gap = law.max_abs_diff(&factorized_pmf(p, k)?);
        if gap > FACTORIZATION_TOL {
            return Err(CliError::Assertion(format!(
                "exact and factorized laws differ by {gap:e} at k={k}"
            )));
        }
        for (m, w) in law.iter().filter(|&(_, w)| w > 0.0) {
            table.push(vec![k.into(), m.into(), w.into()]);
        }
    }
    Ok(vec![table])
}

fn sequences(kmax: usize) -> Result<[ConvSeq; 3], CliError> {
    limit("--n", kmax, MAX_SEQUENCE_INDEX)?;
    let g = g_seq(kmax);
    let mu = convolve(&g, &g)?.with_label("mu");
    let nu = convolve(&mu, &mu)?.with_label("nu");
    Ok([g, mu, nu])
}

fn convolution(cfg: &ExperimentConfig) -> Run {
    let kmax = *cfg.n.iter().max().expect("nonempty");
    let seqs = sequences(kmax)?;
    let mut table = Table::new("convolution", &["name", "index", "value", "partial_sum"]);
    for s in &seqs {
        let sums = partial_sums(s);
        for (i, (&v, &c)) in s.values().iter().zip(sums.values()).enumerate() {
            table.push(vec![s.label().into(), i.into(), v.into(), c.into()]);
        }
    }
    Ok(vec![table])
}

fn tauberian(cfg: &ExperimentConfig) -> Run {
    let kmax = *cfg.n.iter().max().expect("nonempty");
    let seqs = sequences(kmax)?;
    let constants = [
        (0.5, std::f64::consts::FRAC_1_SQRT_2),
        (1.0, 0.5),
        (2.0, 0.25),
    ];
    let mut table = Table::new(
        "tauberian",
        &[
            "name",
            "theta",
            "slowly_varying",
            "m",
            "partial_sum",
            "ratio",
        ],
    );
    for (s, (theta, c)) in seqs.iter().zip(constants) {
        let ratios = tauberian_ratio(s, theta, c)?;
        let sums = partial_sums(s);
        for &m in &cfg.n {
            let ratio = ratios.at(m).expect("m >= 1");
            table.push(vec![
                s.label().into(),
                theta.into(),
                c.into(),
                m.into(),
                sums.values()[m].into(),
                ratio.into(),
            ]);
        }
    }
    Ok(vec![table])
}

fn moments(cfg: &ExperimentConfig, params: &[SkewParam]) -> Run {
    let mut jobs = Vec::new();
    for &p in params {
        for &n in &cfg.n {
            let top = grid_top(n, cfg.horizon);
            limit("grid size n*horizon", top, MAX_MOMENT_GRID)?;
            if top == 0 {
                return Err(CliError::Usage(format!(
                    "--horizon: no grid pair below {} at n={n}",
                    cfg.horizon
                )));
            }
            jobs.push((p, n, top));
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(p, n, top)| moment_reports(p, n, top))
        .collect();
    let mut table = Table::new(
        "moments",
        &[
            "alpha",
            "n",
            "j",
            "k",
            "s",
            "t",
            "fourth_moment",
            "ratio",
            "diagonal",
            "square_square",
            "square_cross",
            "full_cross",
        ],
    );
    for reports in results {
        for r in reports? {
            r.check().map_err(CliError::Assertion)?;
            let mut row: Vec<Cell> = vec![
                r.alpha.into(),
                r.pair.n.into(),
                r.pair.j.into(),
                r.pair.k.into(),
                r.pair.s().into(),
                r.pair.t().into(),
                r.fourth_moment.into(),
                r.ratio.into(),
            ];
            row.extend(r.terms.as_array().map(Cell::from));
            table.push(row);
        }
    }
    Ok(vec![table])
}

fn tightness(cfg: &ExperimentConfig, params: &[SkewParam]) -> Run {
    let scan_cfg = ScanConfig {
        n_list: cfg.n.clone(),
        horizon: cfg.horizon,
        off_grid_samples: cfg.replicates,
        seed: cfg.seed,
    };
    let reports = tightness_scan_many(params, &scan_cfg)?;
    let mut grid = Table::new(
        "tightness_scan",
        &["alpha", "n", "j", "k", "fourth_moment", "ratio"],
    );
    let mut off = Table::new(
        "tightness_offgrid",
        &[
            "alpha",
            "n",
            "s",
            "t",
            "fourth_moment",
            "ratio",
            "grid_ratio",
        ],
    );
    for rep in &reports {
        for row in &rep.rows {
            grid.push(vec![
                rep.alpha.into(),
                row.n.into(),
                row.grid_j.into(),
                row.grid_k.into(),
                row.grid.fourth_moment.into(),
                row.grid.ratio.into(),
            ]);
            if let Some(pt) = row.off_grid {
                off.push(vec![
                    rep.alpha.into(),
                    row.n.into(),
                    pt.s.into(),
                    pt.t.into(),
                    pt.fourth_moment.into(),
                    pt.ratio.into(),
                    row.grid.ratio.into(),
                ]);
            }
        }
    }
    Ok(vec![grid, off])
}

fn simulate(cfg: &ExperimentConfig, params: &[SkewParam]) -> Run {
    let mut hist = Table::new(
        "simulate",
        &[
            "alpha",
            "k",
            "m",
            "exact_prob",
            "direct_count",
            "excursion_count",
        ],
    );
    let mut tests = Table::new(
        "simulate_tests",
        &["alpha", "k", "comparison", "statistic", "dof", "p_value"],
    );
    for (ai, &p) in params.iter().enumerate() {
        for (ki, &k) in cfg.n.iter().enumerate() {
            limit("--n", k, MAX_EXACT_STEPS)?;
            let stream = 2 * (ai * cfg.n.len() + ki) as u64;
            let direct = endpoint_counts(
                SamplerKind::Direct,
                p,
                k,
                cfg.replicates,
                RngContract::new(cfg.seed, stream),
            );
            let excursion = endpoint_counts(
                SamplerKind::Excursion,
                p,
                k,
                cfg.replicates,
                RngContract::new(cfg.seed, stream + 1),
            );
            let law = exact_pmf(p, k)?;
            let probs: Vec<f64> = (-(k as i64)..=k as i64).map(|m| law.prob(m)).collect();
            for (i, &q) in probs.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                hist.push(vec![
                    p.alpha().into(),
                    k.into(),
                    (i as i64 - k as i64).into(),
                    q.into(),
                    direct.counts[i].into(),
                    excursion.counts[i].into(),
                ]);
            }
            let checks = [
                ("direct_vs_exact", chi_square_gof(&direct.counts, &probs)),
                (
                    "excursion_vs_exact",
                    chi_square_gof(&excursion.counts, &probs),
                ),
                (
                    "direct_vs_excursion",
                    chi_square_two_sample(&direct.counts, &excursion.counts),
                ),
            ];
            for (name, t) in checks {
                tests.push(vec![
                    p.alpha().into(),
                    k.into(),
                    name.into(),
                    t.statistic.into(),
                    t.dof.into(),
                    t.p_value.into(),
                ]);
            }
        }
    }
    Ok(vec![hist, tests])
}

fn converge(cfg: &ExperimentConfig, params: &[SkewParam]) -> Run {
    let t = cfg.horizon;
    let mut jobs = Vec::new();
    for &p in params {
        for &n in &cfg.n {
            limit("n*horizon", grid_top(n, t), MAX_EXACT_STEPS)?;
            jobs.push((p, n));
        }
    }
    let values: Vec<_> = jobs
        .par_iter()
        .map(|&(p, n)| ks_statistic(p, n, t, KsMode::Exact))
        .collect();
    let mut table = Table::new("converge", &["alpha", "n", "t", "ks_exact"]);
    for ((p, n), ks) in jobs.into_iter().zip(values) {
        table.push(vec![p.alpha().into(), n.into(), t.into(), ks?.into()]);
    }
    Ok(vec![table])
}
