//! Flat key = value config files: strict parsing (unknown or duplicate
//! keys are errors) and conversion into a runnable session setup.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use eprsim::bounds::derive_params;
use eprsim::gf2::{generate_pa_matrix_with_budget, BitMatrix, DEFAULT_GENERATION_BUDGET};
use eprsim::protocol::{default_pad_budget, SessionSetup};
use eprsim::quantum::{BellState, SourceModel};
use eprsim::seed::{rng_for, tag};

use crate::CliError;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// The source model as configured, before it is sized to a session.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Ideal,
    BellDiagonal([f64; 4]),
    Intercept(f64),
    /// Named states, tiled cyclically out to the transmission length.
    Scripted(Vec<BellState>),
}

/// Everything a `run` or `sweep` invocation needs, parsed and typed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub m: usize,
    pub epsilon: f64,
    pub tau: f64,
    pub tau_s: f64,
    pub r: usize,
    pub seed: u64,
    pub sessions: u64,
    pub source: SourceSpec,
    pub pass_count: Option<usize>,
    pub block_sizes: Option<Vec<usize>>,
    pub estimation_fraction: Option<f64>,
    pub final_confirmation: Option<bool>,
    pub pad_budget: Option<u64>,
    pub matrix_file: Option<PathBuf>,
    pub matrix_budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub transcript_dir: Option<PathBuf>,
}

fn parse_typed<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(format!("key {key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(|part| parse_typed(key, part))
        .collect()
}

impl RunConfig {
    /// Parse a config file body. Every line is blank, a `#` comment, or
    /// `key = value`; keys may not repeat and must all be known.
    pub fn from_text(text: &str) -> Result<RunConfig, CliError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(config_err(format!("duplicate key {key}")));
            }
        }
        Self::from_entries(entries)
    }

    fn from_entries(mut entries: BTreeMap<String, String>) -> Result<RunConfig, CliError> {
        fn require(
            entries: &mut BTreeMap<String, String>,
            key: &str,
        ) -> Result<String, CliError> {
            entries
                .remove(key)
                .ok_or_else(|| config_err(format!("missing required key {key}")))
        }

        let m = parse_typed("m", &require(&mut entries, "m")?)?;
        let epsilon = parse_typed("epsilon", &require(&mut entries, "epsilon")?)?;
        let tau = parse_typed("tau", &require(&mut entries, "tau")?)?;
        let tau_s = parse_typed("tau_s", &require(&mut entries, "tau_s")?)?;
        let r = parse_typed("r", &require(&mut entries, "r")?)?;
        let seed = parse_typed("seed", &require(&mut entries, "seed")?)?;

        let sessions = match entries.remove("sessions") {
            Some(v) => parse_typed("sessions", &v)?,
            None => 1,
        };

        let source_kind = entries
            .remove("source")
            .unwrap_or_else(|| "ideal".to_string());
        let delta = entries.remove("delta");
        let probs: Vec<Option<String>> = ["p0", "p1", "p2", "p3"]
            .iter()
            .map(|k| entries.remove(*k))
            .collect();
        let intercept_prob = entries.remove("intercept_prob");
        let script = entries.remove("script");
        let source = build_source(&source_kind, delta, probs, intercept_prob, script)?;

        let pass_count = entries
            .remove("pass_count")
            .map(|v| parse_typed("pass_count", &v))
            .transpose()?;
        let block_sizes = entries
            .remove("block_sizes")
            .map(|v| parse_list("block_sizes", &v))
            .transpose()?;
        let estimation_fraction = entries
            .remove("estimation_fraction")
            .map(|v| parse_typed("estimation_fraction", &v))
            .transpose()?;
        let final_confirmation = entries
            .remove("final_confirmation")
            .map(|v| parse_typed("final_confirmation", &v))
            .transpose()?;
        let pad_budget = entries
            .remove("pad_budget")
            .map(|v| parse_typed("pad_budget", &v))
            .transpose()?;
        let matrix_file = entries.remove("matrix_file").map(PathBuf::from);
        let matrix_budget = entries
            .remove("matrix_budget")
            .map(|v| parse_typed("matrix_budget", &v))
            .transpose()?;
        let out = entries.remove("out").map(PathBuf::from);
        let transcript_dir = entries.remove("transcript_dir").map(PathBuf::from);

        if let Some(unknown) = entries.keys().next() {
            return Err(config_err(format!("unknown key {unknown}")));
        }

        Ok(RunConfig {
            m,
            epsilon,
            tau,
            tau_s,
            r,
            seed,
            sessions,
            source,
            pass_count,
            block_sizes,
            estimation_fraction,
            final_confirmation,
            pad_budget,
            matrix_file,
            matrix_budget,
            out,
            transcript_dir,
        })
    }

    /// Build the session setup this config describes: derive parameters,
    /// load or search for the matrix, size the source, apply overrides.
    pub fn build_setup(&self) -> Result<SessionSetup, CliError> {
        let params = derive_params(self.m, self.epsilon, self.tau, self.tau_s, self.r)
            .map_err(|e| config_err(format!("invalid parameters: {e}")))?;

        let matrix = match &self.matrix_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("matrix file {}: {e}", path.display())))?;
                BitMatrix::parse_text(&text)
                    .map_err(|e| config_err(format!("matrix file {}: {e}", path.display())))?
            }
            None => {
                let budget = self.matrix_budget.unwrap_or(DEFAULT_GENERATION_BUDGET);
                generate_pa_matrix_with_budget(
                    params.m,
                    params.r,
                    params.d_k,
                    budget,
                    &mut rng_for(self.seed, tag::MATRIX),
                )
                .map_err(|e| config_err(format!("matrix search failed: {e}")))?
            }
        };

        let source = match &self.source {
            SourceSpec::Ideal => SourceModel::Ideal,
            SourceSpec::BellDiagonal(probs) => SourceModel::IidBellDiagonal { probs: *probs },
            SourceSpec::Intercept(p) => SourceModel::InterceptResend { intercept_prob: *p },
            SourceSpec::Scripted(states) => {
                let tiled: Vec<BellState> =
                    states.iter().copied().cycle().take(params.n).collect();
                SourceModel::Scripted { states: tiled }
            }
        };

        let mut setup = SessionSetup::new(params, matrix, source)
            .map_err(|e| config_err(format!("invalid setup: {e}")))?;
        if let Some(n) = self.pass_count {
            setup.reconcile.pass_count = n;
        }
        if let Some(sizes) = &self.block_sizes {
            setup.reconcile.block_sizes = Some(sizes.clone());
        }
        if let Some(f) = self.estimation_fraction {
            setup.reconcile.estimation_fraction = f;
            setup.pad_budget = default_pad_budget(&setup.params, f)
                .map_err(|e| config_err(format!("invalid estimation_fraction: {e}")))?;
        }
        if let Some(c) = self.final_confirmation {
            setup.reconcile.final_confirmation = c;
        }
        if let Some(b) = self.pad_budget {
            setup.pad_budget = b;
        }
        setup
            .validate()
            .map_err(|e| config_err(format!("invalid setup: {e}")))?;
        Ok(setup)
    }
}

fn build_source(
    kind: &str,
    delta: Option<String>,
    probs: Vec<Option<String>>,
    intercept_prob: Option<String>,
    script: Option<String>,
) -> Result<SourceSpec, CliError> {
    let reject = |key: &str, given: bool, wanted: &str| {
        if given {
            Err(config_err(format!("key {key} requires source = {wanted}")))
        } else {
            Ok(())
        }
    };
    let any_prob = probs.iter().any(Option::is_some);
    match kind {
        "ideal" => {
            reject("delta", delta.is_some(), "bell_diagonal")?;
            reject("p0..p3", any_prob, "bell_diagonal")?;
            reject("intercept_prob", intercept_prob.is_some(), "intercept")?;
            reject("script", script.is_some(), "scripted")?;
            Ok(SourceSpec::Ideal)
        }
        "bell_diagonal" => {
            reject("intercept_prob", intercept_prob.is_some(), "intercept")?;
            reject("script", script.is_some(), "scripted")?;
            match (delta, any_prob) {
                (Some(d), false) => {
                    let d: f64 = parse_typed("delta", &d)?;
                    Ok(SourceSpec::BellDiagonal([1.0 - 3.0 * d, d, d, d]))
                }
                (None, true) => {
                    let mut out = [0.0f64; 4];
                    for (i, v) in probs.into_iter().enumerate() {
                        let v = v.ok_or_else(|| {
                            config_err(format!("bell_diagonal needs all of p0..p3, missing p{i}"))
                        })?;
                        out[i] = parse_typed(&format!("p{i}"), &v)?;
                    }
                    Ok(SourceSpec::BellDiagonal(out))
                }
                (Some(_), true) => Err(config_err("give either delta or p0..p3, not both")),
                (None, false) => Err(config_err("bell_diagonal needs delta or p0..p3")),
            }
        }
        "intercept" => {
            reject("delta", delta.is_some(), "bell_diagonal")?;
            reject("p0..p3", any_prob, "bell_diagonal")?;
            reject("script", script.is_some(), "scripted")?;
            let p = intercept_prob
                .ok_or_else(|| config_err("source = intercept needs intercept_prob"))?;
            Ok(SourceSpec::Intercept(parse_typed("intercept_prob", &p)?))
        }
        "scripted" => {
            reject("delta", delta.is_some(), "bell_diagonal")?;
            reject("p0..p3", any_prob, "bell_diagonal")?;
            reject("intercept_prob", intercept_prob.is_some(), "intercept")?;
            let script =
                script.ok_or_else(|| config_err("source = scripted needs script"))?;
            let states: Vec<BellState> = script
                .split(',')
                .map(|name| {
                    name.trim()
                        .parse()
                        .map_err(|_| config_err(format!("unknown state {name:?} in script")))
                })
                .collect::<Result<_, _>>()?;
            if states.is_empty() {
                return Err(config_err("script must name at least one state"));
            }
            Ok(SourceSpec::Scripted(states))
        }
        other => Err(config_err(format!(
            "unknown source {other:?} (ideal, bell_diagonal, intercept, scripted)"
        ))),
    }
}
