use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nmf_fr_core::pipeline::{run_nmf_fr, PipelineConfig};

use nmf_fr::bench::{run_bench, write_bench_report, BenchmarkSpec, Method};
use nmf_fr::clock::SystemClock;
use nmf_fr::io::load_corpus;
use nmf_fr::project::{project_run, write_projection_csv};
use nmf_fr::report::{
    build_run_result, write_dense_csv, write_features_csv, write_json, write_objective_csv,
    write_top_terms_text, write_triplet_csv,
};
use nmf_fr::settings::Settings;

#[derive(Parser)]
#[command(
    name = "nmf-fr",
    about = "Text clustering via NMF term grouping, feature agglomeration, and graph-seeded spherical K-Means",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster one corpus and write a JSON run result.
    Cluster(ClusterArgs),
    /// Compare NMF-FR against seeded baselines on labeled corpora.
    Bench(BenchArgs),
    /// Project a saved feature space to 2-D principal coordinates.
    Project(ProjectArgs),
}

/// Pipeline parameters shared by `cluster` and `bench`.
#[derive(Args)]
struct PipelineArgs {
    /// Number of clusters (K).
    #[arg(long)]
    clusters: Option<usize>,
    /// NMF components / term groups (p); defaults to 3*K.
    #[arg(long)]
    components: Option<usize>,
    /// LSA components (q); 1 skips the LSA step.
    #[arg(long)]
    lsa: Option<usize>,
    /// Neighbors (r) for the seeding graph.
    #[arg(long)]
    neighbors: Option<usize>,
    /// Minimum document frequency for vocabulary terms.
    #[arg(long)]
    min_df: Option<usize>,
    /// key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl PipelineArgs {
    fn build(&self) -> Result<PipelineConfig, CmdError> {
        let settings = match &self.config {
            Some(path) => Settings::load(path).map_err(CmdError::Runtime)?,
            None => Settings::default(),
        };
        let clusters = match self
            .clusters
            .or(settings
                .get("clusters")
                .map(|v| v.parse())
                .transpose()
                .map_err(|_| CmdError::Usage("config key clusters: not a number".into()))?)
        {
            Some(k) if k >= 1 => k,
            Some(_) => return Err(CmdError::Usage("--clusters must be at least 1".into())),
            None => {
                return Err(CmdError::Usage(
                    "missing required option --clusters (or a `clusters` config entry)".into(),
                ))
            }
        };
        let mut cfg = PipelineConfig::for_clusters(clusters);
        let resolve = |flag: Option<usize>, key: &str, default: usize| {
            settings
                .resolve(flag, key, default)
                .map_err(CmdError::Runtime)
        };
        cfg.p = resolve(self.components, "components", cfg.p)?;
        cfg.q = resolve(self.lsa, "lsa", cfg.q)?;
        cfg.r = resolve(self.neighbors, "neighbors", cfg.r)?;
        cfg.min_df = resolve(self.min_df, "min_df", cfg.min_df)?;
        cfg.nmf_max_sweeps = resolve(None, "nmf_max_sweeps", cfg.nmf_max_sweeps)?;
        cfg.kmeans_max_iter = resolve(None, "kmeans_max_iter", cfg.kmeans_max_iter)?;
        cfg.nmf_tol = settings
            .resolve(None, "nmf_tol", cfg.nmf_tol)
            .map_err(CmdError::Runtime)?;
        if cfg.p == 0 {
            return Err(CmdError::Usage("--components must be at least 1".into()));
        }
        if cfg.q != 1 && (cfg.q < 2 || cfg.q > cfg.p) {
            return Err(CmdError::Usage(format!(
                "--lsa must be 1 or between 2 and --components ({})",
                cfg.p
            )));
        }
        if cfg.r == 0 {
            return Err(CmdError::Usage("--neighbors must be at least 1".into()));
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ClusterArgs {
    /// Corpus: JSONL file or directory-per-label tree.
    #[arg(long)]
    input: PathBuf,
    /// Output JSON run result.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Also write the document-by-feature matrix as CSV (input to `project`).
    #[arg(long)]
    dump_features: Option<PathBuf>,
    /// Also write the weighted term-document matrix as row,col,value triplets.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
    /// Also write W, H, and the objective trace as <PREFIX>.w.csv,
    /// <PREFIX>.h.csv, <PREFIX>.objective.csv.
    #[arg(long)]
    dump_factors: Option<PathBuf>,
    /// Also write the top-terms report as plain text.
    #[arg(long)]
    top_terms: Option<PathBuf>,
    /// Print stage timings to stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Labeled corpora; repeat for multiple datasets.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Output prefix: writes <PREFIX>.json, <PREFIX>.trials.csv,
    /// <PREFIX>.aggregate.csv, and <PREFIX>.wilcoxon.csv.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of KM,SKM,LSAKM,NMF-FR.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Trials per stochastic method.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial i uses seed+i.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent trial workers.
    #[arg(long)]
    jobs: Option<usize>,
    /// Rerun NMF-FR N extra times and fail unless all runs are identical.
    #[arg(long, default_value_t = 0)]
    verify_determinism: usize,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ProjectArgs {
    /// JSON run result from `cluster`.
    #[arg(long)]
    run: PathBuf,
    /// Feature-space CSV from `cluster --dump-features`.
    #[arg(long)]
    features: PathBuf,
    /// Output CSV: doc_id,pc1,pc2,cluster,label.
    #[arg(long)]
    out: PathBuf,
}

enum CmdError {
    Usage(String),
    Runtime(nmf_fr::AppError),
}

impl From<nmf_fr::AppError> for CmdError {
    fn from(e: nmf_fr::AppError) -> Self {
        CmdError::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Project(args) => cmd_project(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("Run `nmf-fr --help` for usage.");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), CmdError> {
    let cfg = args.pipeline.build()?;
    let docs = load_corpus(&args.input)?;
    let clock = SystemClock::new();
    let output = run_nmf_fr(&docs, &cfg, &clock).map_err(nmf_fr::AppError::from)?;

    for warning in &output.diagnostics.warnings {
        eprintln!("warning: {warning}");
    }
    if args.verbose {
        for (stage, ms) in &output.diagnostics.stage_timings {
            eprintln!("timing: {stage}: {ms:.3} ms");
        }
    }

    let run = build_run_result(&docs, &cfg, &output)?;
    write_json(&args.out, &run)?;
    if let Some(path) = &args.dump_features {
        let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
        write_features_csv(path, &ids, &output.features)?;
    }
    if let Some(path) = &args.dump_matrix {
        write_triplet_csv(path, &output.term_document)?;
    }
    if let Some(prefix) = &args.dump_factors {
        let with = |suffix: &str| {
            let mut s = prefix.as_os_str().to_os_string();
            s.push(suffix);
            PathBuf::from(s)
        };
        // W and H are not stored in PipelineOutput; refit deterministically.
        let refit = refit_factors(&output, &cfg);
        write_dense_csv(&with(".w.csv"), &refit.0)?;
        write_dense_csv(&with(".h.csv"), &refit.1)?;
        write_objective_csv(&with(".objective.csv"), &output.diagnostics.objective_trace)?;
    }
    if let Some(path) = &args.top_terms {
        write_top_terms_text(path, &run.groups)?;
    }
    Ok(())
}

/// Recomputes the NMF factors for dumping. The pipeline is deterministic,
/// so this reproduces exactly the factors the run used.
fn refit_factors(
    output: &nmf_fr_core::pipeline::PipelineOutput,
    cfg: &PipelineConfig,
) -> (nmf_fr_core::matrix::DenseMatrix, nmf_fr_core::matrix::DenseMatrix) {
    let x = output.term_document.matrix();
    let (w0, h0) = nmf_fr_core::factorization::nndsvd_init(x, cfg.p)
        .expect("factorization already succeeded once");
    let fit = nmf_fr_core::factorization::nmf_fit(x, &w0, &h0, cfg.nmf_max_sweeps, cfg.nmf_tol);
    (fit.w, fit.h)
}

fn cmd_bench(args: BenchArgs) -> Result<(), CmdError> {
    let cfg = args.pipeline.build()?;
    let settings = match &args.pipeline.config {
        Some(path) => Settings::load(path).map_err(CmdError::Runtime)?,
        None => Settings::default(),
    };

    let methods: Vec<Method> = if args.methods.is_empty() {
        match settings.get("methods") {
            Some(raw) => parse_methods(raw.split(','))?,
            None => Method::ALL.to_vec(),
        }
    } else {
        parse_methods(args.methods.iter().map(|s| s.as_str()))?
    };

    let trials = settings
        .resolve(args.trials, "trials", 10)
        .map_err(CmdError::Runtime)?;
    let seed = settings
        .resolve(args.seed, "seed", 0)
        .map_err(CmdError::Runtime)?;
    let jobs = settings
        .resolve(args.jobs, "jobs", 1)
        .map_err(CmdError::Runtime)?;
    if trials == 0 {
        return Err(CmdError::Usage("--trials must be at least 1".into()));
    }

    let mut corpora = Vec::new();
    for path in &args.input {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        corpora.push((name, load_corpus(path)?));
    }

    let spec = BenchmarkSpec {
        corpora,
        methods,
        trials,
        base_seed: seed,
        config: cfg,
        jobs,
        verify_determinism: args.verify_determinism,
    };
    let clock = SystemClock::new();
    let report = run_bench(&spec, &clock)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    write_bench_report(&args.out, &report)?;
    Ok(())
}

fn parse_methods<'a>(raw: impl Iterator<Item = &'a str>) -> Result<Vec<Method>, CmdError> {
    let mut methods = Vec::new();
    for item in raw {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let m: Method = item.parse().map_err(CmdError::Usage)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CmdError::Usage("at least one method is required".into()));
    }
    Ok(methods)
}

fn cmd_project(args: ProjectArgs) -> Result<(), CmdError> {
    let rows = project_run(&args.run, &args.features)?;
    write_projection_csv(&args.out, &rows)?;
    Ok(())
}
