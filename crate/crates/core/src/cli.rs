//! Command-line surface. Exit codes: 0 success, 1 operational failure,
//! 2 usage error. Machine output goes to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bundle::read_bundle;
use crate::clients::{
    Automatic1111, ChatBackend, FixtureMode, FixtureStore, Fixtured, ImageBackend, Offline, OpenAiChat,
};
use crate::domain::{validate_bundle_at, StoryPrompt};
use crate::eval::{
    aggregate_composite, csi_table, load_dataset, rating_table, refbased_table, tables, DatasetError, Penalty,
    ZeroMethod,
};
use crate::par::Execution;
use crate::pipeline::{bundle_dir, run_pipeline, PipelineConfig, PipelineError};
use crate::report::render_report;
use crate::SCHEMA_VERSION;

/// Environment variable holding the chat API key unless the config names another.
pub const API_KEY_ENV: &str = "STORYFORGE_API_KEY";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "storyforge", version, about = "Visual story generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the pipeline against live backends or a fixture set.
    Generate(GenerateArgs),
    /// Run the pipeline from a fixture set only; never touches the network.
    Replay(GenerateArgs),
    /// Check a bundle directory; prints OK or the violated rules.
    Validate { dir: PathBuf },
    /// Compute evaluation tables from an annotation dataset.
    Eval(EvalArgs),
    /// Render a bundle as one self-contained HTML file.
    Report {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, conflicts_with = "prompt_file", required_unless_present = "prompt_file")]
    prompt: Option<String>,
    #[arg(long)]
    prompt_file: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Fixture directory; replayed unless --record is given.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Call the live backends and write every exchange into --fixtures.
    #[arg(long, requires = "fixtures")]
    record: bool,
    /// Include sampling parameters in fixture digests.
    #[arg(long)]
    strict_fixtures: bool,
    #[arg(long)]
    text_only: bool,
    #[arg(long)]
    parallel_scenes: bool,
    /// Refine with a separate img2img pass.
    #[arg(long)]
    two_pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Composite,
    Refbased,
    Csi,
    Wilcoxon,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PenaltyArg {
    Intended,
    Literal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ZeroArg {
    Wilcox,
    Pratt,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    metric: Metric,
    /// Directory for `{metric}.csv` files and `summary.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "intended")]
    penalty: PenaltyArg,
    #[arg(long, value_enum, default_value = "wilcox")]
    zero_method: ZeroArg,
    #[arg(long, default_value = "ours")]
    tool_a: String,
    #[arg(long, default_value = "chatgpt")]
    tool_b: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    #[serde(default)]
    pipeline: PipelineConfig,
    #[serde(default)]
    llm_endpoint: Option<LlmEndpoint>,
    #[serde(default)]
    image_endpoint: Option<ImageEndpoint>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LlmEndpoint {
    base_url: String,
    #[serde(default)]
    api_key_env: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageEndpoint {
    base_url: String,
}

/// A failure with its exit code.
struct Exit(i32, String);

impl Exit {
    fn usage(msg: impl Into<String>) -> Self {
        Exit(EXIT_USAGE, msg.into())
    }
    fn failure(msg: impl Into<String>) -> Self {
        Exit(EXIT_FAILURE, msg.into())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a, false, out, err),
        Command::Replay(a) => cmd_generate(&a, true, out, err),
        Command::Validate { dir } => cmd_validate(&dir, out),
        Command::Eval(a) => cmd_eval(&a, out, err),
        Command::Report { dir, out: path } => cmd_report(&dir, &path, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load_config(path: &Path) -> Result<ConfigFile, Exit> {
    let text = fs::read_to_string(path).map_err(|e| Exit::usage(format!("config {}: {e}", path.display())))?;
    let cfg: ConfigFile =
        serde_json::from_str(&text).map_err(|e| Exit::usage(format!("config {}: {e}", path.display())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Exit::usage(format!("config schema_version {} unsupported", cfg.schema_version)));
    }
    cfg.pipeline.validate().map_err(|e| Exit::usage(format!("config: {e}")))?;
    Ok(cfg)
}

fn read_prompt(a: &GenerateArgs) -> Result<StoryPrompt, Exit> {
    let text = match (&a.prompt, &a.prompt_file) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => {
            fs::read_to_string(p).map_err(|e| Exit::failure(format!("prompt file {}: {e}", p.display())))?
        }
        (None, None) => return Err(Exit::usage("one of --prompt or --prompt-file is required")),
    };
    StoryPrompt::new(text.trim()).map_err(|e| Exit::usage(e.to_string()))
}

fn cmd_generate(a: &GenerateArgs, replay_only: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    if replay_only && (a.fixtures.is_none() || a.record) {
        return Err(Exit::usage("replay needs --fixtures and does not record"));
    }
    if a.config.is_none() && (a.fixtures.is_none() || a.record) {
        return Err(Exit::usage("missing config: pass --config, or --fixtures to replay a fixture set"));
    }
    let file = a.config.as_deref().map(load_config).transpose()?;
    let prompt = read_prompt(a)?;
    let mut cfg = file.as_ref().map(|f| f.pipeline.clone()).unwrap_or_default();
    cfg.parallel_scenes |= a.parallel_scenes;
    cfg.two_pass |= a.two_pass;

    let live = a.fixtures.is_none() || a.record;
    let (chat_live, image_live): (Box<dyn ChatBackend>, Option<Box<dyn ImageBackend>>) = if live {
        let file = file.as_ref().expect("live runs always have a config");
        let llm = file.llm_endpoint.as_ref().ok_or_else(|| Exit::usage("config has no llm_endpoint"))?;
        let key_env = llm.api_key_env.as_deref().unwrap_or(API_KEY_ENV);
        let key = std::env::var(key_env).ok().filter(|k| !k.is_empty());
        let chat: Box<dyn ChatBackend> = Box::new(OpenAiChat::new(llm.base_url.clone(), key));
        let image: Option<Box<dyn ImageBackend>> = match (&file.image_endpoint, a.text_only) {
            (_, true) => None,
            (Some(ep), false) => Some(Box::new(Automatic1111::new(ep.base_url.clone()))),
            (None, false) => return Err(Exit::usage("config has no image_endpoint; pass --text-only")),
        };
        (chat, image)
    } else {
        (Box::new(Offline), if a.text_only { None } else { Some(Box::new(Offline)) })
    };

    let (chat, image): (Box<dyn ChatBackend>, Option<Box<dyn ImageBackend>>) = match &a.fixtures {
        None => (chat_live, image_live),
        Some(dir) => {
            let mode = if a.record { FixtureMode::Record } else { FixtureMode::Replay };
            let store = FixtureStore::new(dir, mode).strict(a.strict_fixtures);
            (
                Box::new(Fixtured::new(chat_live, store.clone())),
                image_live.map(|b| Box::new(Fixtured::new(b, store)) as Box<dyn ImageBackend>),
            )
        }
    };

    let result = run_pipeline(&prompt, &cfg, chat.as_ref(), image.as_deref(), &a.out);
    match result {
        Ok(run) => {
            let _ = writeln!(out, "{}", run.dir.display());
            for (stage, took) in &run.timings {
                let _ = writeln!(err, "{stage:<22} {:>10.1} ms", took.as_secs_f64() * 1e3);
            }
            Ok(EXIT_OK)
        }
        Err(e) => {
            if matches!(e, PipelineError::StageFailed { .. } | PipelineError::Io(_)) {
                let _ = writeln!(err, "partial bundle: {}", bundle_dir(&a.out, &prompt).display());
            }
            let code = if matches!(e, PipelineError::Config(_)) { EXIT_USAGE } else { EXIT_FAILURE };
            Err(Exit(code, e.to_string()))
        }
    }
}

fn cmd_validate(dir: &Path, out: &mut dyn Write) -> Result<i32, Exit> {
    let bundle = read_bundle(dir).map_err(|e| Exit::failure(e.to_string()))?;
    let violations = validate_bundle_at(&bundle, dir);
    if violations.is_empty() {
        let _ = writeln!(out, "OK");
        return Ok(EXIT_OK);
    }
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    Ok(EXIT_FAILURE)
}

fn cmd_report(dir: &Path, path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let bundle = read_bundle(dir).map_err(|e| Exit::failure(e.to_string()))?;
    let violations = validate_bundle_at(&bundle, dir);
    if !violations.is_empty() {
        for v in &violations {
            let _ = writeln!(err, "{v}");
        }
        return Err(Exit::failure("bundle is invalid; no report written"));
    }
    let html = render_report(&bundle, dir).map_err(|e| Exit::failure(e.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Exit::failure(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, html).map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
    let _ = writeln!(out, "{}", path.display());
    Ok(EXIT_OK)
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let dataset = match load_dataset(&a.dataset) {
        Ok(d) => d,
        Err(DatasetError::Schema(v)) => {
            for line in v.iter().take(10) {
                let _ = writeln!(err, "{line}");
            }
            if v.len() > 10 {
                let _ = writeln!(err, "... and {} more", v.len() - 10);
            }
            return Err(Exit::failure(format!("dataset {} fails the schema", a.dataset.display())));
        }
        Err(e) => return Err(Exit::failure(e.to_string())),
    };
    let penalty = match a.penalty {
        PenaltyArg::Intended => Penalty::Intended,
        PenaltyArg::Literal => Penalty::Literal,
    };
    let zero = match a.zero_method {
        ZeroArg::Wilcox => ZeroMethod::Wilcox,
        ZeroArg::Pratt => ZeroMethod::Pratt,
    };
    let wanted = |m: Metric| a.metric == m || a.metric == Metric::All;
    let fail = |e: crate::eval::EvalError| Exit::failure(e.to_string());

    let mut outputs: Vec<(&str, String, &str)> = Vec::new();
    if wanted(Metric::Composite) {
        let rows = aggregate_composite(&dataset.records).map_err(fail)?;
        outputs.push(("composite", tables::composite_csv(&rows), "Composite score per story and tool"));
    }
    if wanted(Metric::Refbased) {
        let (rows, skipped) = refbased_table(&dataset, penalty).map_err(fail)?;
        for s in skipped {
            let _ = writeln!(err, "warning: {s}");
        }
        outputs.push(("refbased", tables::refbased_csv(&rows), "Reference-based highlight score"));
    }
    if wanted(Metric::Csi) {
        let rows = csi_table(&dataset).map_err(fail)?;
        outputs.push(("csi", tables::csi_csv(&rows), "Reference-free severity score"));
    }
    if wanted(Metric::Wilcoxon) {
        let table = rating_table(&dataset, &a.tool_a, &a.tool_b, zero, Execution::default());
        for u in &table.unpaired {
            let _ = writeln!(err, "warning: unpaired record {u} excluded");
        }
        if table.pairs == 0 {
            return Err(Exit::failure(format!("no records pair {} with {}", a.tool_a, a.tool_b)));
        }
        outputs.push(("wilcoxon", tables::wilcoxon_csv(&table), "Wilcoxon signed-rank test per rating"));
    }

    let mut summary = String::new();
    for (name, csv, title) in &outputs {
        summary.push_str(&format!("{title} ({name})\n\n{}\n", tables::text_table(csv)));
    }

    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Exit::failure(format!("{}: {e}", dir.display())))?;
            let mut index = csv::Writer::from_writer(Vec::new());
            let _ = index.write_record(["table", "path"]);
            for (name, csv, _) in &outputs {
                let path = dir.join(format!("{name}.csv"));
                fs::write(&path, csv).map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
                let _ = index.write_record([name.to_string(), path.display().to_string()]);
            }
            let path = dir.join("summary.txt");
            fs::write(&path, &summary).map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
            let _ = out.write_all(&index.into_inner().unwrap_or_default());
        }
        None if outputs.len() == 1 => {
            let _ = write!(out, "{}", outputs[0].1);
            let _ = write!(err, "{summary}");
        }
        None => {
            let _ = out.write_all(long_form(&outputs).as_bytes());
            let _ = write!(err, "{summary}");
        }
    }
    Ok(EXIT_OK)
}

/// Several tables in one CSV: `table,row,column,value`.
fn long_form(outputs: &[(&str, String, &str)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["table", "row", "column", "value"]);
    for (name, text, _) in outputs {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().map(|h| h.iter().map(str::to_string).collect()).unwrap_or_default();
        for (i, rec) in r.records().filter_map(Result::ok).enumerate() {
            for (col, value) in header.iter().zip(rec.iter()) {
                let _ = w.write_record([*name, &(i + 1).to_string(), col, value]);
            }
        }
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}
