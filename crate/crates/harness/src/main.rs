//! `iso3d`: command-line front end for the occlusion-robustness toolkit.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use iso3d_attack::{
    brute_force_min_occlusion, exhaustive_verify, iso, write_attack_log, AttackMode, AttackResult,
    Goal, GoalKind,
};
use iso3d_harness::{
    compare, critical_cardinality_survey, curve_table_text, default_time_budget_secs, evaluate,
    parse_checkpoints, parse_goal, write_curve_csv, write_histogram_csv, write_inputs_csv,
    write_manifest, write_report_csv, Method, RunConfig, DEFAULT_CHECKPOINTS, DEFAULT_SAMPLE_SIZE,
};
use iso3d_nn::{
    accuracy, dataset_inputs, load_model, save_model, train, Model, ModelInput, ModelSpec,
    TrainConfig,
};
use iso3d_salience::{critical_set_whitebox, saliency_scores, write_salience_csv};
use iso3d_shapes::{load_dataset, save_cloud, save_dataset, synth_dataset, Dataset};

#[derive(Parser)]
#[command(name = "iso3d", version, about = "Occlusion robustness of 3D shape classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic five-class shape dataset.
    GenData(GenDataArgs),
    /// Train a classifier on a generated dataset.
    Train(TrainArgs),
    /// Run the occlusion attack on a single test input.
    Attack(AttackArgs),
    /// Measure an accuracy-versus-occlusion curve over a test sample.
    Eval(EvalArgs),
    /// Run two methods on the same sample and report the paired gap.
    Compare(CompareArgs),
    /// Survey critical-set cardinalities over a test sample.
    Survey(SurveyArgs),
    /// Exhaustively certify, or brute-force minimize, occlusion of one input.
    Verify(VerifyArgs),
    /// Export per-element saliency of one input as CSV.
    ExportSalience(ExportSalienceArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Output directory for the dataset.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    per_class_train: usize,
    #[arg(long, default_value_t = 20)]
    per_class_test: usize,
    /// Points per cloud.
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// Gaussian jitter applied to each surface point.
    #[arg(long, default_value_t = 0.02)]
    noise: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Family {
    Point,
    Volumetric,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory produced by gen-data.
    #[arg(long)]
    data: PathBuf,
    /// Output path for the trained model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "point")]
    family: Family,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Whitebox,
    Blackbox,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Index into the test split.
    #[arg(long)]
    index: usize,
    /// Output directory for the attack log and survivor.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "whitebox")]
    mode: Mode,
    /// untargeted | targeted:CLASS | drop:FRACTION
    #[arg(long, default_value = "untargeted")]
    goal: String,
    /// Wall-clock budget in seconds. Defaults by model size when neither
    /// budget flag is given.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Forward-pass budget.
    #[arg(long)]
    query_budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Flags shared by every curve-producing run (eval and compare).
#[derive(Args)]
struct EvalCommonArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output directory for curve.csv, inputs.csv, manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// untargeted | targeted:CLASS | drop:FRACTION
    #[arg(long, default_value = "untargeted")]
    goal: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
    sample: usize,
    /// Comma-separated occlusion percentages.
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    query_budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: EvalCommonArgs,
    /// iso | iso-blackbox | random
    #[arg(long, default_value = "iso")]
    method: String,
    /// csv | table | both
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: EvalCommonArgs,
    #[arg(long, default_value = "iso")]
    method_a: String,
    #[arg(long, default_value = "random")]
    method_b: String,
}

#[derive(Args)]
struct SurveyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output directory for histogram.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
    sample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum VerifyMode {
    Exhaustive,
    Brute,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Index into the test split.
    #[arg(long)]
    index: usize,
    /// Output directory for the witness log and manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: VerifyMode,
    /// Goal for exhaustive mode; brute mode is always untargeted.
    #[arg(long, default_value = "untargeted")]
    goal: String,
    #[arg(long)]
    query_budget: Option<usize>,
}

#[derive(Args)]
struct ExportSalienceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Index into the test split.
    #[arg(long)]
    index: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Survey(a) => cmd_survey(a),
        Command::Verify(a) => cmd_verify(a),
        Command::ExportSalience(a) => cmd_export_salience(a),
    }
}

fn cmd_gen_data(a: GenDataArgs) -> Result<()> {
    let ds = synth_dataset(a.per_class_train, a.per_class_test, a.points, a.noise, a.seed)?;
    save_dataset(&ds, &a.out)?;
    write_manifest(
        &a.out.join("manifest.json"),
        "gen-data",
        serde_json::json!({
            "per_class_train": a.per_class_train,
            "per_class_test": a.per_class_test,
            "points": a.points,
            "noise": a.noise,
            "seed": a.seed,
        }),
    )?;
    println!(
        "wrote {} train / {} test examples across {} classes to {}",
        ds.train.len(),
        ds.test.len(),
        ds.classes.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let spec = match a.family {
        Family::Point => ModelSpec::desk_point(ds.classes.len()),
        Family::Volumetric => ModelSpec::desk_volumetric(ds.classes.len()),
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        seed: a.seed,
    };
    let (model, log) = train(&spec, &ds, &cfg)?;
    let test_inputs = dataset_inputs(model.spec(), &ds.test)?;
    let test_acc = accuracy(&model, &test_inputs)?;
    save_model(&model, &a.out)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        write_manifest(
            &parent.join("manifest.json"),
            "train",
            serde_json::json!({
                "data": a.data.display().to_string(),
                "family": model.spec().family_name(),
                "epochs": a.epochs,
                "batch": a.batch,
                "lr": a.lr,
                "seed": a.seed,
            }),
        )?;
    }
    if let Some(last) = log.epochs.last() {
        println!(
            "epoch {}: train loss {:.4}, train acc {:.3}, test acc {:.3}",
            last.epoch, last.train_loss, last.train_accuracy, last.test_accuracy
        );
    }
    println!("saved {} model ({:.3} test accuracy) to {}", model.spec().family_name(), test_acc, a.out.display());
    Ok(())
}

/// Loads the model and the indexed test example as a model input.
fn load_case(
    model_path: &Path,
    data_path: &Path,
    index: usize,
) -> Result<(Model, Dataset, ModelInput, usize)> {
    let model = load_model(model_path)?;
    let ds = load_dataset(data_path)?;
    if model.classes().len() != ds.classes.len() {
        bail!(
            "model has {} classes but dataset has {}",
            model.classes().len(),
            ds.classes.len()
        );
    }
    if index >= ds.test.len() {
        bail!("index {index} out of range; test split has {} examples", ds.test.len());
    }
    let example = ds.test[index].clone();
    let mut inputs = dataset_inputs(model.spec(), &[example])?;
    let (input, label) = inputs.pop().expect("one example in, one input out");
    Ok((model, ds, input, label))
}

fn build_goal(
    kind: GoalKind,
    classes: usize,
    time_budget: Option<f64>,
    query_budget: Option<usize>,
) -> Goal {
    let time = match (time_budget, query_budget) {
        (Some(s), _) => Some(Duration::from_secs_f64(s)),
        (None, Some(_)) => None,
        (None, None) => Some(Duration::from_secs_f64(default_time_budget_secs(classes))),
    };
    Goal {
        kind,
        time_budget: time,
        query_budget,
        exhaustive: false,
    }
}

fn save_survivor(out_dir: &Path, result: &AttackResult) -> Result<PathBuf> {
    match &result.survivor {
        ModelInput::Points(cloud) => {
            let path = out_dir.join("survivor.pc3d");
            save_cloud(cloud, &path)?;
            Ok(path)
        }
        ModelInput::Voxels(grid) => {
            let path = out_dir.join("survivor_voxels.csv");
            let mut text = String::from("x,y,z\n");
            for flat in grid.occupied() {
                let (x, y, z) = grid.coords(flat);
                text.push_str(&format!("{x},{y},{z}\n"));
            }
            fs::write(&path, text)?;
            Ok(path)
        }
    }
}

fn print_attack_summary(result: &AttackResult, classes: &[String]) {
    let verdict = if result.goal_met { "goal met" } else { "goal not met" };
    println!(
        "{verdict}: {} -> {} after removing {} of {} elements ({} queries, {:.3}s)",
        classes[result.predicted_before.class],
        classes[result.predicted_after.class],
        result.occlusion_size,
        result.survivor.element_count() + result.occlusion_size,
        result.queries,
        result.elapsed.as_secs_f64()
    );
    if !result.removed.is_empty() {
        println!("removed element ids: {:?}", result.removed);
    }
}

fn cmd_attack(a: AttackArgs) -> Result<()> {
    let (model, ds, input, label) = load_case(&a.model, &a.data, a.index)?;
    let kind = parse_goal(&a.goal)?;
    let goal = build_goal(kind, ds.classes.len(), a.time_budget, a.query_budget);
    let mode = match a.mode {
        Mode::Whitebox => AttackMode::WhiteBox,
        Mode::Blackbox => AttackMode::BlackBox,
    };
    let result = iso(&model, &input, &goal, mode, a.seed)?;

    fs::create_dir_all(&a.out)?;
    let log_path = a.out.join("attack_log.csv");
    write_attack_log(BufWriter::new(File::create(&log_path)?), &result.log)?;
    let survivor_path = save_survivor(&a.out, &result)?;
    write_manifest(
        &a.out.join("manifest.json"),
        "attack",
        serde_json::json!({
            "model": a.model.display().to_string(),
            "data": a.data.display().to_string(),
            "index": a.index,
            "label": ds.classes[label],
            "mode": match a.mode { Mode::Whitebox => "whitebox", Mode::Blackbox => "blackbox" },
            "goal": a.goal,
            "time_budget": a.time_budget,
            "query_budget": a.query_budget,
            "seed": a.seed,
        }),
    )?;
    print_attack_summary(&result, &ds.classes);
    println!("wrote {} and {}", log_path.display(), survivor_path.display());
    Ok(())
}

fn eval_config(a: &EvalCommonArgs, method: Method) -> Result<RunConfig> {
    let goal = parse_goal(&a.goal)?;
    let checkpoints = match &a.checkpoints {
        Some(text) => parse_checkpoints(text)?,
        None => DEFAULT_CHECKPOINTS.to_vec(),
    };
    Ok(RunConfig {
        model: a.model.clone(),
        dataset: a.data.clone(),
        sample_size: a.sample,
        method,
        goal,
        checkpoints,
        time_budget_secs: a.time_budget,
        query_budget: a.query_budget,
        seed: a.seed,
        out_dir: a.out.clone(),
    })
}

fn run_eval(model: &Model, ds: &Dataset, cfg: &RunConfig) -> Result<iso3d_harness::RobustnessCurve> {
    // Budget default mirrors single-attack behavior: a wall clock scaled to
    // the model size unless the caller pinned either budget explicitly.
    let mut cfg = cfg.clone();
    if cfg.time_budget_secs.is_none() && cfg.query_budget.is_none() && cfg.method != Method::Random
    {
        cfg.time_budget_secs = Some(default_time_budget_secs(model.classes().len()));
    }
    Ok(evaluate(model, ds, &cfg)?)
}

fn manifest_config(cfg: &RunConfig) -> serde_json::Value {
    serde_json::json!({
        "model": cfg.model.display().to_string(),
        "dataset": cfg.dataset.display().to_string(),
        "method": cfg.method.name(),
        "goal": format!("{:?}", cfg.goal),
        "sample_size": cfg.sample_size,
        "checkpoints": cfg.checkpoints,
        "time_budget_secs": cfg.time_budget_secs,
        "query_budget": cfg.query_budget,
        "seed": cfg.seed,
    })
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.common.model)?;
    let ds = load_dataset(&a.common.data)?;
    let method = Method::parse(&a.method)?;
    let cfg = eval_config(&a.common, method)?;
    let curve = run_eval(&model, &ds, &cfg)?;

    let out = &a.common.out;
    fs::create_dir_all(out)?;
    match a.format.as_str() {
        "csv" | "table" | "both" => {}
        other => bail!("unknown format {other:?}; expected csv, table, or both"),
    }
    if a.format != "table" {
        write_curve_csv(BufWriter::new(File::create(out.join("curve.csv"))?), &curve)?;
        write_inputs_csv(BufWriter::new(File::create(out.join("inputs.csv"))?), &curve)?;
    }
    write_manifest(&out.join("manifest.json"), "eval", manifest_config(&cfg))?;
    if a.format != "csv" {
        print!("{}", curve_table_text(std::slice::from_ref(&curve))?);
    } else {
        let errors: usize = curve.checkpoints.first().map_or(0, |c| c.n_errors);
        println!(
            "evaluated {} inputs ({} errors) with {}; wrote {}",
            curve.per_input.len(),
            errors,
            cfg.method.name(),
            out.join("curve.csv").display()
        );
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let model = load_model(&a.common.model)?;
    let ds = load_dataset(&a.common.data)?;
    let method_a = Method::parse(&a.method_a)?;
    let method_b = Method::parse(&a.method_b)?;
    let cfg_a = eval_config(&a.common, method_a)?;
    let cfg_b = RunConfig { method: method_b, ..cfg_a.clone() };
    let curve_a = run_eval(&model, &ds, &cfg_a)?;
    let curve_b = run_eval(&model, &ds, &cfg_b)?;
    let report = compare(&curve_a, &curve_b)?;

    let out = &a.common.out;
    fs::create_dir_all(out)?;
    write_report_csv(BufWriter::new(File::create(out.join("report.csv"))?), &report)?;
    write_manifest(
        &out.join("manifest.json"),
        "compare",
        serde_json::json!({
            "a": manifest_config(&cfg_a),
            "b": manifest_config(&cfg_b),
        }),
    )?;
    print!("{}", curve_table_text(&[curve_a, curve_b])?);
    println!(
        "mean accuracy gap ({} minus {}): {:+.4} over {} paired inputs",
        report.method_a, report.method_b, report.mean_gap, report.paired.len()
    );
    Ok(())
}

fn cmd_survey(a: SurveyArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_dataset(&a.data)?;
    let survey = critical_cardinality_survey(&model, &ds, a.sample, a.seed)?;

    fs::create_dir_all(&a.out)?;
    write_histogram_csv(BufWriter::new(File::create(a.out.join("histogram.csv"))?), &survey)?;
    write_manifest(
        &a.out.join("manifest.json"),
        "survey",
        serde_json::json!({
            "model": a.model.display().to_string(),
            "dataset": a.data.display().to_string(),
            "sample_size": a.sample,
            "seed": a.seed,
        }),
    )?;
    println!(
        "critical-set cardinality over {} inputs: mean {:.2}, quartiles {} / {} / {}",
        survey.records.len(),
        survey.mean,
        survey.q1,
        survey.median,
        survey.q3
    );
    println!("wrote {}", a.out.join("histogram.csv").display());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let (model, ds, input, _) = load_case(&a.model, &a.data, a.index)?;
    fs::create_dir_all(&a.out)?;
    write_manifest(
        &a.out.join("manifest.json"),
        "verify",
        serde_json::json!({
            "model": a.model.display().to_string(),
            "data": a.data.display().to_string(),
            "index": a.index,
            "mode": match a.mode { VerifyMode::Exhaustive => "exhaustive", VerifyMode::Brute => "brute" },
            "goal": a.goal,
            "query_budget": a.query_budget,
        }),
    )?;
    match a.mode {
        VerifyMode::Exhaustive => {
            let kind = parse_goal(&a.goal)?;
            let mut goal = Goal::exhaustive(kind);
            if let Some(q) = a.query_budget {
                goal = goal.with_query_budget(q);
            }
            let cert = exhaustive_verify(&model, &input, &goal)?;
            println!(
                "goal {}: explored {} states covering {} removal orderings in {} queries",
                if cert.goal_reachable { "REACHABLE" } else { "UNREACHABLE" },
                cert.states_explored,
                cert.permutations_checked,
                cert.queries
            );
            if let Some(witness) = &cert.witness {
                let log_path = a.out.join("witness_log.csv");
                write_attack_log(BufWriter::new(File::create(&log_path)?), &witness.log)?;
                print_attack_summary(witness, &ds.classes);
                println!("wrote {}", log_path.display());
            }
        }
        VerifyMode::Brute => {
            let outcome = brute_force_min_occlusion(&model, &input)?;
            match &outcome.minimal_removal {
                Some(ids) => println!(
                    "minimal flip-inducing removal has {} elements: {:?} ({} queries)",
                    ids.len(),
                    ids,
                    outcome.queries
                ),
                None => println!(
                    "no proper removal flips the prediction ({} queries)",
                    outcome.queries
                ),
            }
        }
    }
    Ok(())
}

fn cmd_export_salience(a: ExportSalienceArgs) -> Result<()> {
    let (model, _, input, _) = load_case(&a.model, &a.data, a.index)?;
    let trace = model.forward(&input)?;
    let scores = saliency_scores(&trace, &input)?;
    let cs = critical_set_whitebox(&trace, &input)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_salience_csv(BufWriter::new(File::create(&a.out)?), &input, &scores, &cs)
        .context("writing salience csv")?;
    println!("wrote saliency for {} elements ({} critical) to {}", scores.len(), cs.len(), a.out.display());
    Ok(())
}
