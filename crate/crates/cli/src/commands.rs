use std::path::Path;

use immse_lab::analytics::{
    d_mi_gaussian_interference, incremental_identity_gaussian, mi_gaussian_interference, mmse_gaussian,
};
use immse_lab::estimator::{
    eigen_convergence_experiment, generate_codebook_of_size, independence_trend, verify_immse, Constellation,
    ImmseInput,
};
use immse_lab::kl::{kl_block_independent, kl_gaussian_direct, BlockGaussianPair};
use immse_lab::model::{gamma_prime, incremental_decomposition};
use immse_lab::rates::{
    cascade_boundary, cascade_sum_and_individual_bounds, intermediate_node_limit, mac_mmse_threshold,
    mac_weak_boundary, CascadeParams, MacInterferenceParams,
};
use immse_lab::{ChannelParams, CovMatrix, LabError};
use nalgebra::DMatrix;

use crate::args::*;
use crate::error::CliError;
use crate::output::Table;

/// A rendered table plus whether every check in it passed.
pub struct Outcome {
    pub table: Table,
    pub output: OutputArgs,
    pub failures: usize,
}

/// Parameter validation failures are configuration problems.
fn usage<T>(r: Result<T, LabError>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

fn channel(c: &ChannelArgs) -> Result<ChannelParams, CliError> {
    for (v, name) in [(c.snr1, "--snr1"), (c.snr2, "--snr2"), (c.a, "--a")] {
        if !v.is_finite() {
            return Err(CliError::Usage(format!("{name} must be finite")));
        }
    }
    usage(ChannelParams::new(c.snr1, c.snr2, c.a))
}

pub fn run(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::SweepMi(a) => sweep_mi(a),
        Command::VerifyImmse(a) => verify(a),
        Command::IncrementalCheck(a) => incremental(a),
        Command::CodebookEigs(a) => codebook_eigs(a),
        Command::IndependenceBound(a) => independence(a),
        Command::RateRegion(a) => rate_region(a),
        Command::KlBlock(a) => kl_block(a),
    }
}

fn sweep_mi(a: &SweepMiArgs) -> Result<Outcome, CliError> {
    let params = channel(&a.channel)?;
    let grid = a.grid.grid()?;
    let u = a.output.units.scale();
    let mut t = Table::new(&["gamma", "mi", "d_mi", "mmse", "regime"]);
    for g in grid {
        let slope = d_mi_gaussian_interference(&params, g)?;
        t.push(vec![
            g.into(),
            (u * mi_gaussian_interference(&params, g)?).into(),
            (u * slope.value).into(),
            mmse_gaussian(1.0, gamma_prime(&params, g)?).into(),
            slope.regime.tag().into(),
        ]);
    }
    Ok(Outcome { table: t, output: a.output.clone(), failures: 0 })
}

fn verify(a: &VerifyImmseArgs) -> Result<Outcome, CliError> {
    let grid = a.grid()?;
    if a.samples < immse_lab::estimator::MIN_SAMPLES {
        return Err(CliError::Usage(format!(
            "--samples must be at least {}, got {}",
            immse_lab::estimator::MIN_SAMPLES,
            a.samples
        )));
    }
    let constellation = match a.input {
        InputKind::Bpsk => Some(Constellation::bpsk()),
        InputKind::Pam4 => Some(Constellation::pam4()),
        InputKind::Asym3 => Some(Constellation::asymmetric3()),
        InputKind::Gaussian | InputKind::Codebook => None,
    };
    let codebook = match a.input {
        InputKind::Codebook => Some(usage(generate_codebook_of_size(a.n, a.codewords, a.seed.seed))?),
        _ => None,
    };
    let input = match (&constellation, &codebook) {
        (Some(c), _) => ImmseInput::Constellation { constellation: c, order: a.order },
        (_, Some(cb)) => ImmseInput::Codebook { codebook: cb, samples: a.samples, seed: a.seed.seed },
        _ => ImmseInput::Gaussian { power: a.power },
    };
    let rows = verify_immse(input, &grid, a.h, a.tol).map_err(|e| match e {
        LabError::Domain(msg) => CliError::Usage(msg),
        other => CliError::Numeric(other),
    })?;
    let u = a.output.units.scale();
    let mut t = Table::new(&["gamma", "d_mi", "half_mmse", "abs_error", "tolerance", "std_error", "pass"]);
    let mut failures = 0;
    for r in rows {
        failures += usize::from(!r.pass);
        t.push(vec![
            r.gamma.into(),
            (u * r.d_mi).into(),
            (u * r.half_mmse).into(),
            (u * r.abs_error).into(),
            (u * r.tolerance).into(),
            r.std_error.map(|s| u * s).into(),
            r.pass.into(),
        ]);
    }
    Ok(Outcome { table: t, output: a.output.clone(), failures })
}

fn incremental(a: &IncrementalArgs) -> Result<Outcome, CliError> {
    let params = channel(&a.channel)?;
    let deltas = match a.delta {
        Some(d) => vec![d],
        None => {
            if a.steps == 0 {
                return Err(CliError::Usage("--steps must be at least 1".into()));
            }
            let room = params.admissible_upper() - a.snr;
            (1..=a.steps).map(|k| room * k as f64 / a.steps as f64).collect()
        }
    };
    let u = a.output.units.scale();
    let mut t = Table::new(&[
        "snr",
        "delta",
        "alpha",
        "sigma1_sq",
        "sigma2_sq",
        "var_nhat",
        "var_nhat_error",
        "mi_difference",
        "conditional_mi",
        "identity_error",
        "pass",
    ]);
    let mut failures = 0;
    for delta in deltas {
        let d = incremental_decomposition(&params, a.snr, delta)?;
        let id = incremental_identity_gaussian(&d, 1.0, 1.0)?;
        let var_err = (d.var_nhat - d.var_nhat_identity()).abs();
        let pass = var_err <= 1e-12 && id.abs_error() <= a.tol;
        failures += usize::from(!pass);
        t.push(vec![
            d.snr.into(),
            d.delta.into(),
            d.alpha.into(),
            d.sigma1_sq.into(),
            d.sigma2_sq.into(),
            d.var_nhat.into(),
            var_err.into(),
            (u * id.mi_difference).into(),
            (u * id.conditional_mi).into(),
            (u * id.abs_error()).into(),
            pass.into(),
        ]);
    }
    Ok(Outcome { table: t, output: a.output.clone(), failures })
}

fn codebook_eigs(a: &CodebookEigsArgs) -> Result<Outcome, CliError> {
    let seeds = a.experiment.seed_list()?;
    let rows =
        eigen_convergence_experiment(a.snr1, a.experiment.rate_fraction, &a.experiment.n_list, &seeds)?;
    let mut t = Table::new(&["n", "codewords", "mean_deviation", "min_deviation", "max_deviation", "seeds"]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.codewords.into(),
            r.mean_deviation.into(),
            r.min_deviation.into(),
            r.max_deviation.into(),
            r.seeds.into(),
        ]);
    }
    Ok(Outcome { table: t, output: a.output.clone(), failures: 0 })
}

fn independence(a: &IndependenceArgs) -> Result<Outcome, CliError> {
    let params = channel(&a.channel)?;
    let seeds = a.experiment.seed_list()?;
    let rows = independence_trend(
        &params,
        a.snr,
        a.delta,
        a.experiment.rate_fraction,
        &a.experiment.n_list,
        &seeds,
    )?;
    let u = a.output.units.scale();
    let mut t = Table::new(&["n", "codewords", "mean_surrogate_mi", "mean_deviation", "seeds"]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.codewords.into(),
            (u * r.mean_surrogate_mi).into(),
            r.mean_deviation.into(),
            r.seeds.into(),
        ]);
    }
    Ok(Outcome { table: t, output: a.output.clone(), failures: 0 })
}

fn betas(steps: usize) -> Result<Vec<f64>, CliError> {
    if steps < 2 {
        return Err(CliError::Usage(format!("--beta-steps must be at least 2, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps).map(|k| k as f64 / last).collect())
}

fn rate_region(a: &RateRegionArgs) -> Result<Outcome, CliError> {
    let u = a.output.units.scale();
    let table = match a.family {
        Family::Mac => {
            let p = usage(MacInterferenceParams::new(a.snr1, a.snr2, a.snr_z, a.a))?;
            let mut t = Table::new(&["beta", "r1", "r2", "rz", "r1_plus_r2", "threshold"]);
            for beta in betas(a.beta_steps)? {
                let r = usage(mac_weak_boundary(&p, beta))?;
                t.push(vec![
                    beta.into(),
                    (u * r.r1).into(),
                    (u * r.r2).into(),
                    (u * r.rz).into(),
                    (u * (r.r1 + r.r2)).into(),
                    mac_mmse_threshold(&p).into(),
                ]);
            }
            t
        }
        Family::Cascade => {
            let p = usage(CascadeParams::proportional(a.snr1, a.snr2, a.snr3, a.a))?;
            let b = cascade_sum_and_individual_bounds(&p)?;
            let mut t =
                Table::new(&["beta", "r1", "r2", "r3", "r2_plus_r3", "sum_bound", "r2_bound", "r3_bound"]);
            for beta in betas(a.beta_steps)? {
                let r = cascade_boundary(&p, beta)?;
                t.push(vec![
                    beta.into(),
                    (u * r.r1).into(),
                    (u * r.r2).into(),
                    (u * r.r3).into(),
                    (u * (r.r2 + r.r3)).into(),
                    (u * b.sum).into(),
                    (u * b.r2).into(),
                    (u * b.r3).into(),
                ]);
            }
            t
        }
        Family::Intermediate => {
            let a2 = a.a2.unwrap_or(a.a);
            let a3 = a.a3.unwrap_or(a.a);
            let p = usage(CascadeParams::new(a.snr1, a.snr2, a.snr3, a2, a3))?;
            let mut t = Table::new(&["a2", "a3", "limit", "receiver1_branch", "receiver2_branch"]);
            let first = 0.5 * (a2 * a.snr2 / (1.0 + a.snr1)).ln_1p();
            let second = 0.5 * (a.snr2 / (1.0 + a3 * a.snr3)).ln_1p();
            t.push(vec![
                a2.into(),
                a3.into(),
                (u * intermediate_node_limit(&p)).into(),
                (u * first).into(),
                (u * second).into(),
            ]);
            t
        }
    };
    Ok(Outcome { table, output: a.output.clone(), failures: 0 })
}

type Blocks = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);

/// Reads `n` followed by three n×n blocks A, B, C.
pub fn parse_block_file(text: &str, origin: &Path) -> Result<Blocks, CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", origin.display()));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .ok_or_else(|| bad("empty matrix file".into()))?
        .parse()
        .map_err(|e| bad(format!("first line must be the dimension n: {e}")))?;
    if n == 0 {
        return Err(bad("dimension must be positive".into()));
    }
    let mut rows = Vec::with_capacity(3 * n);
    for (k, line) in lines.enumerate() {
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", k + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != n {
            return Err(bad(format!("row {} has {} entries, expected {n}", k + 1, vals.len())));
        }
        rows.push(vals);
    }
    if rows.len() != 3 * n {
        return Err(bad(format!("expected {} rows (A, B, C), found {}", 3 * n, rows.len())));
    }
    let block = |b: usize| DMatrix::from_fn(n, n, |r, c| rows[b * n + r][c]);
    Ok((block(0), block(1), block(2)))
}

fn kl_block(a: &KlBlockArgs) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&a.matrix)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.matrix.display())))?;
    let (ma, mb, mc) = parse_block_file(&text, &a.matrix)?;
    let pair = BlockGaussianPair::new(CovMatrix::new(ma)?, mb, CovMatrix::new(mc)?)?;
    let block = kl_block_independent(&pair)?;
    let direct = kl_gaussian_direct(&pair.assembled(), &pair.block_diagonal())?;
    let rel = if direct == 0.0 { (block - direct).abs() } else { (block - direct).abs() / direct.abs() };
    let u = a.output.units.scale();
    let mut t = Table::new(&["n", "kl_block", "kl_direct", "rel_error"]);
    t.push(vec![pair.dim().into(), (u * block).into(), (u * direct).into(), rel.into()]);
    Ok(Outcome { table: t, output: a.output.clone(), failures: 0 })
}
