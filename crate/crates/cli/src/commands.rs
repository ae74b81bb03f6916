use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use scmkit::env::{Action, EnvConfig, ScmEnvironment};
use scmkit::generate::{create_from_graph, create_random, FunctionClass, ScmGenConfig};
use scmkit::graph::{default_max_retries, generate_unique_graph_set, GraphGenConfig};
use scmkit::io::{self, ScmDocument};
use scmkit::metrics::compare_structures;
use scmkit::usecase::{render_table, run_usecase, Algorithm, UseCaseConfig};
use scmkit::{Distribution, Intervention, RngState};

use crate::error::CliError;
use crate::output::{emit, read, write_atomic, Manifest};
use crate::{
    EnvRunArgs, EvalArgs, GenGraphsArgs, GenScmsArgs, GraphShape, Policy, SampleArgs, UsecaseArgs,
};

fn graph_config(shape: &GraphShape) -> GraphGenConfig {
    GraphGenConfig {
        n_endo: shape.n_endo,
        n_exo: shape.n_exo,
        allow_exo_confounders: shape.confounders,
        edge_prob: shape.edge_prob,
        confounder_child_prob: shape.confounder_child_prob,
    }
}

fn graph_config_json(c: &GraphGenConfig) -> Value {
    json!({
        "n_endo": c.n_endo,
        "n_exo": c.n_exo,
        "allow_exo_confounders": c.allow_exo_confounders,
        "edge_prob": c.edge_prob,
        "confounder_child_prob": c.confounder_child_prob,
    })
}

pub fn gen_graphs(args: GenGraphsArgs) -> Result<(), CliError> {
    if args.count < 1 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let config = graph_config(&args.shape);
    let retries = args
        .max_retries
        .unwrap_or_else(|| default_max_retries(args.count));
    let graphs =
        generate_unique_graph_set(&config, args.count, &mut RngState::new(args.seed), retries)?;

    let mut manifest = Manifest::new(
        "gen-graphs",
        json!({ "graph": graph_config_json(&config), "count": args.count, "max_retries": retries }),
        args.seed,
    );
    for (i, g) in graphs.iter().enumerate() {
        manifest.write_file(
            &args.out,
            &format!("graph_{i:03}.graph.json"),
            &io::write_graph(g),
        )?;
    }
    manifest.finish(&args.out)?;
    eprintln!("wrote {} graphs to {}", graphs.len(), args.out.display());
    Ok(())
}

/// `kind:p1,p2` as in `gauss:0,1` or `uniform_int:3,8`.
pub fn parse_exo_dist(arg: &str) -> Result<Distribution, CliError> {
    let (kind, params) = arg
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--exo-dist `{arg}`: expected kind:p1,p2")))?;
    let values = params
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("--exo-dist `{arg}`: {e}")))?;
    Distribution::from_positional(kind.trim(), &values)
        .map_err(|e| CliError::Usage(format!("--exo-dist: {e}")))
}

fn parse_function_classes(
    list: &str,
    weights: &str,
    bias: f64,
) -> Result<Vec<FunctionClass>, CliError> {
    let (low, high) = weights
        .split_once(',')
        .and_then(|(l, h)| Some((l.trim().parse::<f64>().ok()?, h.trim().parse::<f64>().ok()?)))
        .ok_or_else(|| CliError::Usage(format!("--weight-range `{weights}`: expected low,high")))?;
    list.split(',')
        .map(|name| match name.trim() {
            "linear" => Ok(FunctionClass::Linear {
                weight_low: low,
                weight_high: high,
                bias,
            }),
            other => FunctionClass::from_name(other)
                .ok_or_else(|| CliError::Usage(format!("unknown function class `{other}`"))),
        })
        .collect()
}

fn function_classes_json(classes: &[FunctionClass]) -> Value {
    Value::Array(
        classes
            .iter()
            .map(|c| match *c {
                FunctionClass::Linear {
                    weight_low,
                    weight_high,
                    bias,
                } => json!({ "kind": "linear", "weight_low": weight_low, "weight_high": weight_high, "bias": bias }),
                FunctionClass::Interaction => json!({ "kind": "interaction" }),
            })
            .collect(),
    )
}

fn graph_files(dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        if let Some(stem) = name.strip_suffix(".graph.json") {
            files.push((stem.to_string(), path));
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no .graph.json files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn gen_scms(args: GenScmsArgs) -> Result<(), CliError> {
    let config = ScmGenConfig {
        graph: graph_config(&args.shape),
        function_classes: parse_function_classes(&args.functions, &args.weight_range, args.bias)?,
        exo_distribution: parse_exo_dist(&args.exo_dist)?,
        unique_graphs: args.unique,
    };
    config.validate()?;
    let mut rng = RngState::new(args.seed);

    let mut generator = Map::new();
    generator.insert(
        "functions".into(),
        function_classes_json(&config.function_classes),
    );
    generator.insert(
        "exo_dist".into(),
        io::distribution_to_json(&config.exo_distribution),
    );

    let named: Vec<(String, scmkit::ScmModel)> = match &args.from_graphs {
        Some(dir) => {
            generator.insert("from_graphs".into(), json!(dir.display().to_string()));
            let mut out = Vec::new();
            for (stem, path) in graph_files(dir)? {
                let graph =
                    io::read_graph(&read(&path)?).map_err(|e| CliError::in_file(&path, e))?;
                out.push((stem, create_from_graph(&graph, &config, &mut rng)?));
            }
            out
        }
        None => {
            generator.insert("graph".into(), graph_config_json(&config.graph));
            generator.insert("count".into(), json!(args.count));
            generator.insert("unique".into(), json!(args.unique));
            create_random(args.count, &config, &mut rng)?
                .into_iter()
                .enumerate()
                .map(|(i, m)| (format!("scm_{i:03}"), m))
                .collect()
        }
    };

    let mut manifest = Manifest::new("gen-scms", Value::Object(generator.clone()), args.seed);
    for (index, (stem, model)) in named.iter().enumerate() {
        let mut meta = Map::new();
        meta.insert("seed".into(), json!(args.seed));
        meta.insert("index".into(), json!(index));
        meta.insert("generator".into(), Value::Object(generator.clone()));
        let doc = ScmDocument {
            model: model.clone(),
            metadata: Some(meta),
        };
        manifest.write_file(
            &args.out,
            &format!("{stem}.scm.json"),
            &io::write_scm_document(&doc),
        )?;
    }
    manifest.finish(&args.out)?;
    eprintln!("wrote {} SCMs to {}", named.len(), args.out.display());
    Ok(())
}

/// `Name=EXPR`, split at the first `=`.
pub fn parse_do(arg: &str) -> Result<Intervention, CliError> {
    let (target, expr) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--do `{arg}`: expected Var=EXPR")))?;
    Intervention::parse(target.trim(), expr)
        .map_err(|e| CliError::Validation(format!("--do `{arg}`: {e}")))
}

pub fn sample(args: SampleArgs) -> Result<(), CliError> {
    let mut model = io::read_scm(&read(&args.scm)?).map_err(|e| CliError::in_file(&args.scm, e))?;
    let interventions = args
        .interventions
        .iter()
        .map(|s| parse_do(s))
        .collect::<Result<Vec<_>, _>>()?;
    model
        .do_interventions(&interventions)
        .map_err(|e| CliError::Validation(format!("--do: {e}")))?;
    let samples = model
        .sample_n(args.n, &mut RngState::new(args.seed))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let csv = io::write_samples_csv(&model, &samples)?;
    emit(args.out.as_deref(), &csv)
}

/// Uniform over subsets with distinct targets: for each target pick one of
/// its interventions or none.
fn random_action(interventions: &[Intervention], rng: &mut RngState) -> Action {
    let mut by_target: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, iv) in interventions.iter().enumerate() {
        by_target.entry(&iv.target).or_default().push(i);
    }
    Action::new(by_target.values().filter_map(|idx| {
        let pick = rng.index(idx.len() + 1);
        idx.get(pick).copied()
    }))
}

pub fn env_run(args: EnvRunArgs) -> Result<(), CliError> {
    let model = io::read_scm(&read(&args.scm)?).map_err(|e| CliError::in_file(&args.scm, e))?;
    let interventions = io::read_interventions(&read(&args.interventions)?)
        .map_err(|e| CliError::in_file(&args.interventions, e))?;
    if args.horizon < 1 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let root = RngState::new(args.seed);
    let mut policy_rng = root.fork("policy");
    let mut env = ScmEnvironment::new(EnvConfig {
        model,
        possible_interventions: interventions,
        horizon: Some(args.horizon),
        seed: root.fork("env").next_u64(),
    })
    .map_err(|e| CliError::Validation(e.to_string()))?;

    let mut log = String::new();
    for episode in 0..args.episodes {
        env.reset()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        for t in 0.. {
            let action = match args.policy {
                Policy::Random => random_action(env.possible_interventions(), &mut policy_rng),
                Policy::None => Action::none(),
            };
            let result = env
                .step(&action)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            log.push_str(&io::episode_record(episode, t, &action, &result));
            if result.terminated || result.truncated {
                break;
            }
        }
    }
    emit(args.out.as_deref(), log.as_bytes())
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let pred =
        io::read_adjacency(&read(&args.pred)?).map_err(|e| CliError::in_file(&args.pred, e))?;
    let truth =
        io::read_adjacency(&read(&args.truth)?).map_err(|e| CliError::in_file(&args.truth, e))?;
    let metrics =
        compare_structures(&pred, &truth).map_err(|e| CliError::Validation(e.to_string()))?;
    emit(
        args.out.as_deref(),
        &io::canonical_json(&io::metrics_to_json(&metrics)),
    )
}

pub fn usecase_config(args: &UsecaseArgs) -> Result<UseCaseConfig, CliError> {
    let algorithms = args
        .algorithms
        .split(',')
        .map(|a| match a.trim() {
            "corr_threshold" => Ok(Algorithm::CorrThreshold {
                threshold: args.threshold,
            }),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(CliError::Usage(format!("unknown algorithm `{other}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(CliError::Usage(format!(
            "--threshold must lie in (0, 1), got {}",
            args.threshold
        )));
    }
    Ok(UseCaseConfig {
        n_endo: args.n_endo,
        n_exo: args.n_exo,
        scm_count: args.scm_count,
        samples_per_scm: args.samples,
        function_classes: parse_function_classes(&args.functions, "0.5,2", 0.0)?,
        algorithms,
        ..UseCaseConfig::default()
    })
}

pub fn usecase(args: UsecaseArgs) -> Result<(), CliError> {
    let config = usecase_config(&args)?;
    let report = run_usecase(&config, &RngState::new(args.seed))?;
    let json = io::canonical_json(&io::metrics_rows_to_json(&report.rows));
    match &args.out {
        Some(path) => {
            write_atomic(path, &json)?;
            print!("{}", render_table(&report.rows));
            Ok(())
        }
        None => emit(None, &json),
    }
}
