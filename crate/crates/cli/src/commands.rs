//! The five subcommands. Output is buffered and written only after a
//! command has fully succeeded, so a failed invocation leaves no partial
//! CSV behind.

use std::fmt::Write as _;
use std::path::Path;

use eprsim::bounds::{
    binary_entropy, bound_report, ceil_snapped, epsilon_star, floor_snapped, theta,
};
use eprsim::gf2::{generate_pa_matrix_with_budget, BitMatrix, Gf2Error, DEFAULT_GENERATION_BUDGET};
use eprsim::protocol::{run_session, SessionSetup};
use eprsim::seed::{mix, rng_for, tag};

use crate::config::{RunConfig, SourceSpec};
use crate::report::{SessionRow, SweepRow, RUN_HEADER, SWEEP_HEADER};
use crate::{BoundsArgs, CliError, GenmatArgs, RunArgs, SweepArgs, VerifyArgs};

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub const BOUNDS_HEADER: &str =
    "epsilon,theta,s,d_k,q_min,entropy_raw,entropy_clamped,feasible_m_max,pa_feasible,net_gain_margin";

/// Print one bound row per requested error rate, preceded by the
/// break-even rate. Only the bound formulas' own domains apply here, so
/// tau = 0 is allowed and prints theta = 1.
pub fn cmd_bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let mut table = String::new();
    let star = epsilon_star(1e-6).map_err(|e| config_err(e.to_string()))?;
    writeln!(table, "# epsilon_star {star}").unwrap();
    writeln!(table, "{BOUNDS_HEADER}").unwrap();
    for &eps in &args.epsilon {
        let report = bound_report(args.m, eps, args.tau, args.r)
            .map_err(|e| config_err(format!("epsilon {eps}: {e}")))?;
        let h = binary_entropy(eps).map_err(|e| config_err(format!("epsilon {eps}: {e}")))?;
        let s = floor_snapped(args.r as f64 / (1.0 - eps)) as usize;
        let d_k =
            ceil_snapped((2.0 * eps / (1.0 - eps) + args.tau) * args.r as f64) as usize;
        let q_min = ceil_snapped(s as f64 * h) as u64;
        writeln!(
            table,
            "{},{},{},{},{},{},{},{},{},{}",
            eps,
            report.theta,
            s,
            d_k,
            q_min,
            report.entropy_raw,
            report.entropy_clamped,
            report.feasible_m_max,
            args.m <= report.feasible_m_max,
            report.net_gain_margin
        )
        .unwrap();
    }
    print!("{table}");
    Ok(())
}

pub fn cmd_genmat(args: &GenmatArgs) -> Result<(), CliError> {
    let budget = args.budget.unwrap_or(DEFAULT_GENERATION_BUDGET);
    let matrix = generate_pa_matrix_with_budget(
        args.m,
        args.r,
        args.d_k,
        budget,
        &mut rng_for(args.seed, tag::MATRIX),
    )
    .map_err(|e| match e {
        Gf2Error::BudgetExhausted { best_weight, .. } => config_err(format!(
            "no {}x{} matrix of weight {} in {budget} candidates (best found: {best_weight})",
            args.m, args.r, args.d_k
        )),
        other => config_err(other.to_string()),
    })?;
    std::fs::write(&args.out, matrix.to_text())
        .map_err(|e| config_err(format!("writing {}: {e}", args.out.display())))?;
    println!(
        "wrote {}x{} matrix with combination weight >= {} to {}",
        args.m,
        args.r,
        args.d_k,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.matrix)
        .map_err(|e| config_err(format!("reading {}: {e}", args.matrix.display())))?;
    let matrix = BitMatrix::parse_text(&text)
        .map_err(|e| config_err(format!("{}: {e}", args.matrix.display())))?;
    let report = matrix
        .min_combination_weight()
        .map_err(|e| config_err(e.to_string()))?;
    println!(
        "{}x{} matrix: min combination weight {}, full rank {}",
        matrix.rows(),
        matrix.cols(),
        report.min_weight,
        report.full_rank
    );
    if !report.full_rank {
        return Err(CliError::VerifyFailed(
            "matrix rows are linearly dependent".to_string(),
        ));
    }
    if report.min_weight < args.d_k {
        return Err(CliError::VerifyFailed(format!(
            "weakest combination has weight {}, below the required {}",
            report.min_weight, args.d_k
        )));
    }
    Ok(())
}

/// Run every session, then write all output. Faults become exit code 3
/// after the CSV is on disk: a faulted batch is still data.
pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(sessions) = args.sessions {
        cfg.sessions = sessions;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }

    let setup = cfg.build_setup()?;
    let rows = run_batch(&setup, cfg.seed, cfg.sessions, cfg.transcript_dir.as_deref())?;

    let mut csv = String::with_capacity(64 * (rows.len() + 1));
    writeln!(csv, "{RUN_HEADER}").unwrap();
    for row in &rows {
        writeln!(csv, "{}", row.to_line()).unwrap();
    }
    emit(cfg.out.as_deref(), &csv)?;

    let faults = rows.iter().filter(|r| r.fault.is_some()).count();
    if faults > 0 {
        return Err(CliError::Fault(format!(
            "{faults} of {} sessions faulted",
            rows.len()
        )));
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(sessions) = args.sessions {
        cfg.sessions = sessions;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if args.grid.is_empty() {
        return Err(config_err("sweep grid is empty"));
    }

    // build every grid point before running anything, so a bad point
    // fails the whole sweep up front
    let points: Vec<(f64, RunConfig, SessionSetup)> = args
        .grid
        .iter()
        .map(|&value| {
            let point = apply_sweep_value(&cfg, &args.param, value)?;
            let setup = point
                .build_setup()
                .map_err(|e| config_err(format!("{} = {value}: {}", args.param, e.message())))?;
            Ok((value, point, setup))
        })
        .collect::<Result<_, CliError>>()?;

    let mut csv = String::new();
    writeln!(csv, "{SWEEP_HEADER}").unwrap();
    let mut faults = 0u64;
    for (value, point, setup) in &points {
        let rows = run_batch(setup, point.seed, point.sessions, None)?;
        let th = theta(setup.params.r, setup.params.tau)
            .map_err(|e| config_err(e.to_string()))?;
        let agg = SweepRow::aggregate(&args.param, *value, th, &rows);
        faults += agg.faults;
        writeln!(csv, "{}", agg.to_line()).unwrap();
    }
    emit(cfg.out.as_deref(), &csv)?;

    if faults > 0 {
        return Err(CliError::Fault(format!(
            "{faults} sessions faulted across the sweep"
        )));
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
    RunConfig::from_text(&text)
}

/// Substitute one swept value into a copy of the base config.
fn apply_sweep_value(base: &RunConfig, param: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut point = base.clone();
    match param {
        "epsilon" => point.epsilon = value,
        "tau" => point.tau = value,
        "r" => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(config_err(format!("r grid value {value} is not a size")));
            }
            point.r = value as usize;
        }
        "intercept_prob" => {
            if !matches!(point.source, SourceSpec::Intercept(_)) {
                return Err(config_err(
                    "sweeping intercept_prob requires source = intercept",
                ));
            }
            point.source = SourceSpec::Intercept(value);
        }
        "delta" => {
            if !matches!(point.source, SourceSpec::BellDiagonal(_)) {
                return Err(config_err(
                    "sweeping delta requires source = bell_diagonal",
                ));
            }
            point.source =
                SourceSpec::BellDiagonal([1.0 - 3.0 * value, value, value, value]);
        }
        other => {
            return Err(config_err(format!(
                "unknown sweep parameter {other:?} (epsilon, tau, r, intercept_prob, delta)"
            )))
        }
    }
    Ok(point)
}

/// Execute `sessions` sessions off the master seed; optionally log each
/// session's channel transcript into a directory.
fn run_batch(
    setup: &SessionSetup,
    master: u64,
    sessions: u64,
    transcript_dir: Option<&Path>,
) -> Result<Vec<SessionRow>, CliError> {
    if let Some(dir) = transcript_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| config_err(format!("creating {}: {e}", dir.display())))?;
    }
    let mut rows = Vec::with_capacity(sessions as usize);
    for i in 0..sessions {
        let session_seed = mix(mix(master, tag::SESSION), i);
        let outcome = run_session(setup, session_seed)
            .map_err(|e| config_err(format!("session {i}: {e}")))?;
        if let Some(dir) = transcript_dir {
            let path = dir.join(format!("session_{i:05}.log"));
            std::fs::write(&path, outcome.transcript.channel_log.render())
                .map_err(|e| config_err(format!("writing {}: {e}", path.display())))?;
        }
        rows.push(SessionRow::from_outcome(session_seed, &setup.params, &outcome));
    }
    Ok(rows)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| config_err(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_substitution_respects_the_source_kind() {
        let base = RunConfig::from_text(
            "m = 8\nepsilon = 0.1\ntau = 0.2\ntau_s = 0.15\nr = 200\nseed = 1\n",
        )
        .unwrap();
        assert!(apply_sweep_value(&base, "epsilon", 0.05).is_ok());
        assert!(apply_sweep_value(&base, "r", 100.0).is_ok());
        assert!(apply_sweep_value(&base, "r", 99.5).is_err());
        assert!(apply_sweep_value(&base, "intercept_prob", 0.5).is_err());
        assert!(apply_sweep_value(&base, "delta", 0.01).is_err());
        assert!(apply_sweep_value(&base, "qber", 0.1).is_err());

        let eq = |text: &str| RunConfig::from_text(text).unwrap();
        let intercept = eq(
            "m = 8\nepsilon = 0.1\ntau = 0.2\ntau_s = 0.15\nr = 200\nseed = 1\nsource = intercept\nintercept_prob = 1\n",
        );
        let swapped = apply_sweep_value(&intercept, "intercept_prob", 0.25).unwrap();
        assert_eq!(swapped.source, SourceSpec::Intercept(0.25));
    }

    #[test]
    fn derive_params_is_the_sweep_gatekeeper() {
        let base = RunConfig::from_text(
            "m = 8\nepsilon = 0.1\ntau = 0.2\ntau_s = 0.15\nr = 200\nseed = 1\n",
        )
        .unwrap();
        // epsilon 0.3 passes substitution and fails at setup time
        let point = apply_sweep_value(&base, "epsilon", 0.3).unwrap();
        assert!(point.build_setup().is_err());
    }
}
