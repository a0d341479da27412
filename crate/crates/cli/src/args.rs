use std::{collections::BTreeMap, fs, path::PathBuf};

use argwin_core::{
    analytics::StructureHint,
    degree::DegreeModel,
    semantics::WinningRule,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "argwin", version, about = "Winning arguments in signed reply trees")]
pub struct Cli {
    /// Worker threads for ensemble work; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON file of flag values (kebab-case keys); explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Winning states of a single tree.
    Solve(SolveArgs),
    /// Per-level statistics of a generated ensemble.
    Simulate(SimulateArgs),
    /// Analytic level profiles.
    Recurrence(RecurrenceArgs),
    /// Clean, bin and summarise a corpus of tree documents.
    Analyze(AnalyzeArgs),
    /// Fit a power law to in-degrees.
    FitPowerlaw(FitArgs),
    /// Level reading order for a profile.
    Recommend(RecommendArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Recurrence(_) => "recurrence",
            Command::Analyze(_) => "analyze",
            Command::FitPowerlaw(_) => "fit-powerlaw",
            Command::Recommend(_) => "recommend",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Grounded,
    LeavesException,
    Majority,
    GenMajority,
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RuleArgs {
    #[arg(long, value_enum, default_value = "grounded")]
    pub rule: RuleName,
    /// Weight exponent for gen-majority.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

impl RuleArgs {
    pub fn rule(&self) -> CliResult<WinningRule> {
        let r = match self.rule {
            RuleName::Grounded => WinningRule::Grounded,
            RuleName::LeavesException => WinningRule::LeavesOnlyException,
            RuleName::Majority => WinningRule::Majority,
            RuleName::GenMajority => WinningRule::GeneralizedMajority { beta: self.beta },
        };
        r.validate()?;
        Ok(r)
    }
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelParams {
    /// Poisson rate.
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Power-law exponent.
    #[arg(long, default_value_t = 2.5)]
    pub alpha: f64,
    /// Power-law lower cutoff.
    #[arg(long, default_value_t = 1)]
    pub k_min: u64,
    /// Empirical child-count distribution: `k:p,k:p,...` or a JSON file
    /// mapping counts to probabilities.
    #[arg(long)]
    pub histogram: Option<String>,
}

impl ModelParams {
    pub fn poisson(&self) -> CliResult<DegreeModel> {
        Ok(DegreeModel::poisson(self.lambda)?)
    }

    pub fn power_law(&self) -> CliResult<DegreeModel> {
        Ok(DegreeModel::power_law(self.alpha, self.k_min)?)
    }

    pub fn empirical(&self) -> CliResult<DegreeModel> {
        let spec = self
            .histogram
            .as_deref()
            .ok_or_else(|| CliError::Usage("the empirical model needs --histogram".into()))?;
        let path = PathBuf::from(spec);
        let pairs: BTreeMap<usize, f64> = if path.is_file() {
            let text = fs::read_to_string(&path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            let raw: BTreeMap<String, f64> = serde_json::from_str(&text)?;
            raw.into_iter()
                .map(|(k, p)| Ok((parse_count(&k)?, p)))
                .collect::<CliResult<_>>()?
        } else {
            spec.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|pair| {
                    let (k, p) = pair
                        .split_once(':')
                        .ok_or_else(|| CliError::Usage(format!("histogram entry `{pair}` is not k:p")))?;
                    let p: f64 = p.trim().parse().map_err(|_| CliError::Usage(format!("bad probability `{p}`")))?;
                    Ok((parse_count(k)?, p))
                })
                .collect::<CliResult<_>>()?
        };
        Ok(DegreeModel::empirical(pairs)?)
    }
}

fn parse_count(k: &str) -> CliResult<usize> {
    k.trim().parse().map_err(|_| CliError::Usage(format!("bad child count `{k}`")))
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "argwin-out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SolveArgs {
    /// Tree document (JSON).
    #[arg(long)]
    pub tree: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorName {
    Poisson,
    Powerlaw,
    Empirical,
    /// Preferential attachment.
    Pa,
}

#[derive(Clone, Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long = "gen", value_enum, default_value = "poisson")]
    #[serde(rename = "gen")]
    pub generator: GeneratorName,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelParams,
    /// Depth of homogeneous trees.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Size of preferential-attachment trees.
    #[arg(long, default_value_t = 50)]
    pub nodes: usize,
    /// Probability that a reply supports its parent.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1000)]
    pub trees: usize,
    #[arg(long, env = "ARGWIN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Redraw homogeneous trees until they reach full depth.
    #[arg(long)]
    pub require_full_depth: bool,
    /// Report only keys reached by at least this many trees.
    #[arg(long, default_value_t = 10)]
    pub min_trees: usize,
    /// Append the signed-mean diagnostic column to the CSV.
    #[arg(long)]
    pub signed_mean: bool,
    /// Also write every generated tree as a JSON document here.
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Poisson,
    Powerlaw,
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    NoLeaves,
    Bounds,
}

#[derive(Clone, Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct RecurrenceArgs {
    #[arg(long, value_enum, default_value = "poisson")]
    pub model: ModelName,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ModelParams,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, value_enum, default_value = "full")]
    pub variant: Variant,
    /// Leaf probability for the bounds; defaults to the model's p(0).
    #[arg(long)]
    pub p0: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureName {
    Auto,
    Homogeneous,
    ScaleFree,
}

impl StructureName {
    pub fn hint(self) -> Option<StructureHint> {
        match self {
            StructureName::Auto => None,
            StructureName::Homogeneous => Some(StructureHint::Homogeneous),
            StructureName::ScaleFree => Some(StructureHint::ScaleFree),
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CorpusArgs {
    /// Directory of tree documents, or a single document.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub min_size: usize,
    /// Prune deleted or empty nodes instead of dropping their trees.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long, default_value_t = 10)]
    pub min_trees: usize,
    /// Tree structure assumed for recommendations; `auto` infers it from
    /// the leaf-fraction profile.
    #[arg(long, value_enum, default_value = "auto")]
    pub structure: StructureName,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct FitArgs {
    /// Directory of tree documents whose in-degrees are fitted.
    #[arg(long, conflicts_with = "degrees", required_unless_present = "degrees")]
    pub corpus: Option<PathBuf>,
    /// File of non-negative integers (JSON array or whitespace/comma separated).
    #[arg(long)]
    pub degrees: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub min_size: usize,
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct RecommendArgs {
    /// `profile.json` from `recurrence`, `stats.json` from `simulate`, or a
    /// single profile object. Without it the order follows from `q` alone.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Depth used when no profile is given.
    #[arg(long, required_unless_present = "profile")]
    pub depth: Option<usize>,
    /// Support fraction.
    #[arg(long)]
    pub q_hat: f64,
    #[arg(long, value_enum, default_value = "homogeneous")]
    pub structure: StructureName,
    /// Regime tolerance around one half.
    #[arg(long, conflicts_with = "edges")]
    pub epsilon: Option<f64>,
    /// Edge count behind `--q-hat`; sets the tolerance from sampling noise.
    #[arg(long)]
    pub edges: Option<usize>,
    /// Use leaf-removed winner fractions from a `stats.json`.
    #[arg(long)]
    pub leaf_removed: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}
