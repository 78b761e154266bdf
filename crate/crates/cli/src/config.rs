use std::fmt;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QfiState,
    QfiChannel,
    Bound,
    Protected,
    TwirlCheck,
    Estimate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::QfiState => "qfi-state",
            Experiment::QfiChannel => "qfi-channel",
            Experiment::Bound => "bound",
            Experiment::Protected => "protected",
            Experiment::TwirlCheck => "twirl-check",
            Experiment::Estimate => "estimate",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self != Experiment::QfiState
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thetas {
    One(f64),
    Many(Vec<f64>),
}

/// The document as written; every field is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub parameters: RawParameters,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParameters {
    pub theta: Option<Thetas>,
    pub d: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub generator: Option<[f64; 4]>,
    pub bloch: Option<[f64; 3]>,
    pub mixing: Option<f64>,
    pub dephasing: Option<f64>,
    pub starts: Option<usize>,
    pub samples: Option<usize>,
    pub inputs: Option<usize>,
    pub phases: Option<usize>,
    pub combs: Option<usize>,
    pub sensors: Option<usize>,
    pub memory_dim: Option<usize>,
    pub ancilla_dim: Option<usize>,
    pub teleport_trials: Option<usize>,
    pub observable: Option<[f64; 4]>,
    pub nu: Option<u64>,
    pub trials: Option<usize>,
    pub grid_points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<String>,
    pub format: Option<Format>,
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub parameters: Parameters,
    #[serde(skip)]
    pub output: OutputTarget,
}

#[derive(Clone, Debug, Serialize)]
pub struct Parameters {
    pub theta: Vec<f64>,
    /// Pauli coefficients `(I, X, Y, Z)` of the generator.
    pub generator: [f64; 4],
    pub dims: Vec<usize>,
    pub bloch: [f64; 3],
    pub mixing: f64,
    pub dephasing: f64,
    pub starts: usize,
    pub samples: usize,
    pub inputs: usize,
    pub phases: usize,
    pub combs: usize,
    pub sensors: usize,
    pub memory_dim: usize,
    pub ancilla_dim: usize,
    pub teleport_trials: usize,
    pub observable: [f64; 4],
    pub nu: u64,
    pub trials: usize,
    pub grid_points: usize,
}

#[derive(Clone, Debug, Default)]
pub struct OutputTarget {
    pub path: Option<String>,
    pub format: Format,
}

/// Values given on the command line; they take precedence over the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.0 {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a TOML document for `experiment`.
pub fn parse_config(
    text: &str,
    experiment: Experiment,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| ConfigError(vec![e.to_string().trim().to_string()]))?;
    resolve(raw, experiment, overrides)
}

fn resolve(
    raw: RawConfig,
    experiment: Experiment,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let mut errs = Vec::new();
    if let Some(named) = raw.experiment {
        if named != experiment {
            errs.push(format!(
                "config is for `{named}` but `{experiment}` was requested"
            ));
        }
    }
    let seed = overrides.seed.or(raw.seed);
    if experiment.is_stochastic() && seed.is_none() {
        errs.push(format!("`{experiment}` is stochastic and needs a seed"));
    }
    let p = raw.parameters;
    let theta = match p.theta {
        None => vec![0.3],
        Some(Thetas::One(t)) => vec![t],
        Some(Thetas::Many(ts)) => ts,
    };
    if theta.is_empty() {
        errs.push("theta list is empty".into());
    }
    if theta.iter().any(|t| !t.is_finite()) {
        errs.push("theta values must be finite".into());
    }

    let dims = match (p.d, p.dims) {
        (Some(_), Some(_)) => {
            errs.push("give either `d` or `dims`, not both".into());
            vec![]
        }
        (Some(d), None) => default_layout(d),
        (None, Some(dims)) => dims,
        (None, None) => vec![2],
    };
    if dims.is_empty() || dims.contains(&0) {
        errs.push("dimensions must be positive".into());
    }

    let generator = p.generator.unwrap_or([0.0, 0.0, 0.0, 0.5]);
    if generator.iter().any(|x| !x.is_finite()) {
        errs.push("generator coefficients must be finite".into());
    }
    let bloch = p.bloch.unwrap_or(match experiment {
        Experiment::Estimate => [0.0, 1.0, 0.0],
        _ => [1.0, 0.0, 0.0],
    });
    let norm = bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm <= 1.0 + 1e-12) {
        errs.push(format!("bloch vector has length {norm}, must be at most 1"));
    }
    let mixing = p.mixing.unwrap_or(0.0);
    let dephasing = p.dephasing.unwrap_or(0.0);
    for (name, x) in [("mixing", mixing), ("dephasing", dephasing)] {
        if !(0.0..=1.0).contains(&x) {
            errs.push(format!("`{name}` must lie in [0, 1], got {x}"));
        }
    }
    let observable = p.observable.unwrap_or([0.0, 1.0, 0.0, 0.0]);

    let params = Parameters {
        theta,
        generator,
        dims,
        bloch,
        mixing,
        dephasing,
        starts: p.starts.unwrap_or(match experiment {
            Experiment::Bound => 64,
            _ => 32,
        }),
        samples: p.samples.unwrap_or(match experiment {
            Experiment::TwirlCheck => 10_000,
            _ => 0,
        }),
        inputs: p.inputs.unwrap_or(5),
        phases: p.phases.unwrap_or(2),
        combs: p.combs.unwrap_or(10),
        sensors: p.sensors.unwrap_or(20),
        memory_dim: p.memory_dim.unwrap_or(2),
        ancilla_dim: p.ancilla_dim.unwrap_or(2),
        teleport_trials: p.teleport_trials.unwrap_or(0),
        observable,
        nu: p.nu.unwrap_or(10_000),
        trials: p.trials.unwrap_or(100),
        grid_points: p.grid_points.unwrap_or(2001),
    };
    experiment_checks(experiment, &params, &mut errs);

    let output = OutputTarget {
        path: overrides.out.clone().or(raw.output.path),
        format: overrides.format.or(raw.output.format).unwrap_or_default(),
    };
    if !errs.is_empty() {
        return Err(ConfigError(errs));
    }
    Ok(ExperimentConfig {
        experiment,
        seed,
        parameters: params,
        output,
    })
}

/// `[2; log₂ d]` for powers of two, `[d]` otherwise.
fn default_layout(d: usize) -> Vec<usize> {
    if d >= 2 && d.is_power_of_two() {
        vec![2; d.trailing_zeros() as usize]
    } else {
        vec![d]
    }
}

fn experiment_checks(experiment: Experiment, p: &Parameters, errs: &mut Vec<String>) {
    let total: usize = p.dims.iter().product();
    match experiment {
        Experiment::QfiState => {}
        Experiment::QfiChannel => {
            if p.starts == 0 {
                errs.push("`starts` must be at least 1".into());
            }
        }
        Experiment::Bound => {
            if !(1..=3).contains(&p.phases) {
                errs.push(format!("`phases` must be 1, 2 or 3, got {}", p.phases));
            }
            if p.combs == 0 || p.sensors == 0 {
                errs.push("`combs` and `sensors` must be at least 1".into());
            }
            if p.memory_dim == 0 || p.ancilla_dim == 0 {
                errs.push("`memory_dim` and `ancilla_dim` must be positive".into());
            }
        }
        Experiment::Protected => {
            if !total.is_multiple_of(2) {
                errs.push(format!("protected comb needs D even, got D = {total}"));
            }
            if total > 8 {
                errs.push(format!("protected comb supports D ≤ 8, got D = {total}"));
            }
            if p.starts == 0 {
                errs.push("`starts` must be at least 1".into());
            }
        }
        Experiment::TwirlCheck => {
            if !(2..=4).contains(&total) {
                errs.push(format!("twirl check supports 2 ≤ D ≤ 4, got D = {total}"));
            }
            if p.samples == 0 {
                errs.push("`samples` must be at least 1".into());
            }
        }
        Experiment::Estimate => {
            if p.nu == 0 || p.trials == 0 {
                errs.push("`nu` and `trials` must be at least 1".into());
            }
            if p.grid_points < 2 {
                errs.push("`grid_points` must be at least 2".into());
            }
        }
    }
}
