use std::{fs, path::Path, time::Instant};

use argwin_core::{
    analytics::{
        approx_no_leaves, bound_profiles, classify_regime, estimated_regime_tolerance, recommend_sampling,
        solve_recurrence, solve_recurrence_no_leaves, LeafStructure, LevelProbabilityProfile, RegimeReport,
        StructureHint, ANALYTIC_REGIME_TOLERANCE, PROFILE_CSV_HEADER,
    },
    degree::DegreeModel,
    estimators::{aggregate, simulate, EnsembleStats, TreeObservables},
    generators::{EnsembleSpec, GeneratorKind},
    ingest::{bin_by_support, fit_power_law, load_corpus, CorpusTree, LoadOptions, SupportClass},
    semantics::propagate_states,
    ReplyTree,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{
    args::{
        AnalyzeArgs, Cli, Command, FitArgs, GeneratorName, ModelName, RecommendArgs, RecurrenceArgs, SimulateArgs,
        SolveArgs, Variant,
    },
    output::OutputDir,
    CliError, CliResult,
};

/// Spread of the leaf fraction over keys `d ≥ 1` up to which a corpus is
/// treated as homogeneous.
const HOMOGENEOUS_LEAF_SPREAD: f64 = 0.2;

pub fn execute(cli: &Cli, started: Instant) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => solve_cmd(a, started),
        Command::Simulate(a) => simulate_cmd(a, started),
        Command::Recurrence(a) => recurrence_cmd(a, started),
        Command::Analyze(a) => analyze_cmd(a, started),
        Command::FitPowerlaw(a) => fit_cmd(a, started),
        Command::Recommend(a) => recommend_cmd(a, started),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn solve_cmd(a: &SolveArgs, started: Instant) -> CliResult<()> {
    let rule = a.rule.rule()?;
    let tree = ReplyTree::from_json(&read(&a.tree)?)?;
    let states = propagate_states(&tree, rule)?;
    let winners = states.winners(&tree);
    let mut out = OutputDir::create(&a.out.out)?;
    out.write_json("states.json", &states.to_document(&tree))?;
    out.write_json("winners.json", &winners)?;
    out.finish("solve", a, None, started)?;
    println!("{}", serde_json::to_string(&winners)?);
    Ok(())
}

fn ensemble_spec(a: &SimulateArgs) -> CliResult<EnsembleSpec> {
    let homogeneous = |model: DegreeModel| GeneratorKind::Homogeneous { depth: a.depth, model };
    let generator = match a.generator {
        GeneratorName::Poisson => homogeneous(a.model.poisson()?),
        GeneratorName::Powerlaw => homogeneous(a.model.power_law()?),
        GeneratorName::Empirical => homogeneous(a.model.empirical()?),
        GeneratorName::Pa => GeneratorKind::PreferentialAttachment { nodes: a.nodes },
    };
    let spec = EnsembleSpec { generator, trees: a.trees, q: a.q, seed: a.seed, require_full_depth: a.require_full_depth };
    spec.validate()?;
    Ok(spec)
}

fn simulate_cmd(a: &SimulateArgs, started: Instant) -> CliResult<()> {
    let rule = a.rule.rule()?;
    let spec = ensemble_spec(a)?;
    let stats = simulate(&spec, rule, a.min_trees)?;
    if stats.levels.is_empty() {
        return Err(CliError::Empty(format!("no alignment key is reached by {} trees", a.min_trees)));
    }
    let mut out = OutputDir::create(&a.out.out)?;
    out.write("stats.csv", stats.to_csv(a.signed_mean))?;
    out.write_json("stats.json", &stats)?;
    if let Some(dir) = &a.export_dir {
        export_trees(&spec, dir)?;
    }
    out.finish("simulate", a, Some(a.seed), started)
}

fn export_trees(spec: &EnsembleSpec, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
    let width = (spec.trees.max(2) - 1).to_string().len();
    (0..spec.trees).into_par_iter().try_for_each(|t| {
        let g = spec.tree(t)?;
        let path = dir.join(format!("tree_{t:0width$}.json"));
        fs::write(&path, g.tree.to_document().to_json()?).map_err(|source| CliError::Write { path, source })
    })
}

fn degree_model(a: &RecurrenceArgs) -> CliResult<DegreeModel> {
    match a.model {
        ModelName::Poisson => a.params.poisson(),
        ModelName::Powerlaw => a.params.power_law(),
        ModelName::Empirical => a.params.empirical(),
    }
}

fn profiles_csv(profiles: &[&LevelProbabilityProfile]) -> String {
    let mut s = format!("{PROFILE_CSV_HEADER}\n");
    for p in profiles {
        s.push_str(&p.csv_rows());
    }
    s
}

fn recurrence_cmd(a: &RecurrenceArgs, started: Instant) -> CliResult<()> {
    let mut out = OutputDir::create(&a.out.out)?;
    match a.variant {
        Variant::Full => {
            let full = solve_recurrence(&degree_model(a)?, a.depth, a.q)?;
            let regime = classify_regime(a.q, ANALYTIC_REGIME_TOLERANCE, a.depth)?;
            out.write("profile.csv", profiles_csv(&[&full]))?;
            out.write_json("profile.json", &json!({ "profiles": [full], "regime": regime }))?;
        }
        Variant::NoLeaves => {
            let model = degree_model(a)?;
            let full = solve_recurrence(&model, a.depth, a.q)?;
            let nl = solve_recurrence_no_leaves(LeafStructure::Homogeneous { model: &model, depth: a.depth }, a.q)?;
            out.write("profile.csv", profiles_csv(&[&full, &nl]))?;
            out.write_json("profile.json", &json!({ "profiles": [full, nl] }))?;
        }
        Variant::Bounds => {
            let (p0, full) = match a.p0 {
                Some(p0) => (p0, None),
                None => {
                    let model = degree_model(a)?;
                    (model.leaf_probability(), Some(solve_recurrence(&model, a.depth, a.q)?))
                }
            };
            let b = bound_profiles(p0, a.depth, a.q)?;
            let mut all = vec![&b.upper, &b.lower];
            all.extend(full.as_ref());
            out.write("profile.csv", profiles_csv(&all))?;
            out.write("cobweb.csv", b.trace.to_csv())?;
            let mut profiles = vec![&b.upper, &b.lower];
            profiles.extend(full.as_ref());
            out.write_json("profile.json", &json!({ "profiles": profiles, "cobweb": b.trace, "staircase": b.trace.staircase() }))?;
        }
    }
    out.finish("recurrence", a, None, started)
}

fn load(corpus: &Path, min_size: usize, lenient: bool) -> CliResult<(Vec<CorpusTree>, argwin_core::ingest::CleaningReport)> {
    Ok(load_corpus(corpus, &LoadOptions { min_size, strict: !lenient })?)
}

fn in_degrees(trees: &[CorpusTree]) -> Vec<u64> {
    trees.iter().flat_map(|t| t.tree.nodes().iter().map(|n| n.in_degree() as u64)).collect()
}

fn fit_json(degrees: &[u64]) -> Value {
    match fit_power_law(degrees) {
        Ok(fit) => serde_json::to_value(fit).expect("fit serialises"),
        Err(e) => json!({
            "alpha": null, "k_min": null, "ks_distance": null, "n_tail": null,
            "error": e.kind(), "message": e.to_string(),
        }),
    }
}

/// Leaf fractions over `d ≥ 1` that stay within a narrow band suggest
/// homogeneous branching; otherwise the tree is treated as scale-free.
fn infer_structure(stats: &EnsembleStats) -> StructureHint {
    let fractions: Vec<f64> = stats.levels.iter().filter(|l| l.distance_from_max >= 1).map(|l| l.p_leaf).collect();
    let max = fractions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    if fractions.is_empty() || max - min <= HOMOGENEOUS_LEAF_SPREAD {
        StructureHint::Homogeneous
    } else {
        StructureHint::ScaleFree
    }
}

#[derive(Serialize)]
struct ClassRecommendation {
    class: SupportClass,
    trees: usize,
    edges: usize,
    q_hat_mean: Option<f64>,
    epsilon: Option<f64>,
    structure: Option<StructureHint>,
    structure_inferred: bool,
    report: Option<RegimeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn analyze_cmd(a: &AnalyzeArgs, started: Instant) -> CliResult<()> {
    let rule = a.rule.rule()?;
    let (trees, report) = load(&a.corpus.corpus, a.corpus.min_size, a.corpus.lenient)?;
    let mut out = OutputDir::create(&a.out.out)?;
    out.write_json("cleaning_report.json", &report)?;
    if trees.is_empty() {
        out.finish("analyze", a, None, started)?;
        return Err(CliError::Empty("no trees survived cleaning".into()));
    }
    let bins = bin_by_support(&trees);
    out.write_json("bins.json", &bins)?;
    out.write_json("powerlaw_fit.json", &fit_json(&in_degrees(&trees)))?;

    for (&class, names) in &bins.members {
        let members: Vec<&CorpusTree> = trees.iter().filter(|t| names.contains(&t.name)).collect();
        let dir = class.name();
        let edges: usize = members.iter().map(|t| t.tree.edge_count()).sum();
        let mut rec = ClassRecommendation {
            class,
            trees: members.len(),
            edges,
            q_hat_mean: None,
            epsilon: None,
            structure: None,
            structure_inferred: false,
            report: None,
            note: None,
        };
        if members.is_empty() {
            out.write(&format!("{dir}/stats.csv"), format!("{}\n", argwin_core::estimators::CSV_HEADER))?;
            rec.note = Some("no trees in this class".into());
            out.write_json(&format!("{dir}/recommendation.json"), &rec)?;
            continue;
        }
        let source = json!({ "corpus": a.corpus.corpus, "class": class });
        let stats = aggregate(members.iter().map(|t| &t.tree), rule, a.min_trees, source)?;
        out.write(&format!("{dir}/stats.csv"), stats.to_csv(false))?;
        out.write_json(&format!("{dir}/stats.json"), &stats)?;

        let q_hats: Vec<f64> = members.iter().filter_map(|t| t.tree.estimate_q().ok()).collect();
        let q_bar = q_hats.iter().sum::<f64>() / q_hats.len() as f64;
        let eps = estimated_regime_tolerance(q_bar, edges);
        rec.q_hat_mean = Some(q_bar);
        rec.epsilon = Some(eps);
        if stats.levels.is_empty() {
            rec.note = Some(format!("no alignment key is reached by {} trees", a.min_trees));
            out.write_json(&format!("{dir}/recommendation.json"), &rec)?;
            continue;
        }
        let (hint, inferred) = match a.structure.hint() {
            Some(h) => (h, false),
            None => (infer_structure(&stats), true),
        };
        rec.structure = Some(hint);
        rec.structure_inferred = inferred;
        let profile = LevelProbabilityProfile::from_ensemble(&stats, false);
        let profile_nl = LevelProbabilityProfile::from_ensemble(&stats, true);
        rec.report = Some(recommend_sampling(&profile, q_bar, hint, eps)?);
        out.write_json(&format!("{dir}/recommendation.json"), &rec)?;

        // Observed and approximated leaf-removed profiles side by side.
        let observables = members
            .iter()
            .map(|t| Ok(TreeObservables::new(&t.tree, t.tree.depth(), &propagate_states(&t.tree, rule)?)?))
            .collect::<CliResult<Vec<_>>>()?;
        let mut profiles = vec![profile, profile_nl];
        if let Ok(approx) = approx_no_leaves(&observables, None, a.min_trees) {
            profiles.push(approx);
        }
        out.write(&format!("{dir}/profiles.csv"), profiles_csv(&profiles.iter().collect::<Vec<_>>()))?;
    }
    out.finish("analyze", a, None, started)
}

fn parse_degrees(text: &str) -> CliResult<Vec<u64>> {
    if let Ok(v) = serde_json::from_str::<Vec<u64>>(text) {
        return Ok(v);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("`{s}` is not a non-negative integer"))))
        .collect()
}

fn fit_cmd(a: &FitArgs, started: Instant) -> CliResult<()> {
    let degrees = match (&a.corpus, &a.degrees) {
        (Some(c), _) => in_degrees(&load(c, a.min_size, a.lenient)?.0),
        (None, Some(d)) => parse_degrees(&read(d)?)?,
        (None, None) => return Err(CliError::Usage("give --corpus or --degrees".into())),
    };
    let fit = fit_power_law(&degrees)?;
    let mut out = OutputDir::create(&a.out.out)?;
    out.write_json("powerlaw_fit.json", &fit)?;
    out.finish("fit-powerlaw", a, None, started)?;
    println!("{}", serde_json::to_string(&fit)?);
    Ok(())
}

/// Accepts a profile, `{"profiles": [...]}` (first entry used) or ensemble stats.
fn read_profile(path: &Path, leaf_removed: bool) -> CliResult<LevelProbabilityProfile> {
    let value: Value = serde_json::from_str(&read(path)?)?;
    if let Some(first) = value.get("profiles").and_then(|p| p.get(0)) {
        return Ok(serde_json::from_value(first.clone())?);
    }
    if value.get("levels").is_some() {
        let stats: EnsembleStats = serde_json::from_value(value)?;
        return Ok(LevelProbabilityProfile::from_ensemble(&stats, leaf_removed));
    }
    Ok(serde_json::from_value(value)?)
}

fn recommend_cmd(a: &RecommendArgs, started: Instant) -> CliResult<()> {
    let eps = match (a.epsilon, a.edges) {
        (Some(e), _) => e,
        (None, Some(edges)) => estimated_regime_tolerance(a.q_hat, edges),
        (None, None) => ANALYTIC_REGIME_TOLERANCE,
    };
    let report = match (&a.profile, a.depth) {
        (Some(p), _) => {
            let profile = read_profile(p, a.leaf_removed)?;
            if profile.points.is_empty() {
                return Err(CliError::Empty("profile has no levels".into()));
            }
            let hint = a.structure.hint().unwrap_or(StructureHint::Homogeneous);
            recommend_sampling(&profile, a.q_hat, hint, eps)?
        }
        (None, Some(depth)) => classify_regime(a.q_hat, eps, depth)?,
        (None, None) => return Err(CliError::Usage("give --profile or --depth".into())),
    };
    let mut out = OutputDir::create(&a.out.out)?;
    out.write_json("recommendation.json", &report)?;
    out.finish("recommend", a, None, started)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
