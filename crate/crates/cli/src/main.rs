//! `svtnet`: generate networks, extract scale-variant diagrams, build Gram
//! matrices and run the learning tasks on them.
//!
//! Exit codes: 0 on success, 1 on user error (bad flags, inputs or
//! configuration), 2 on internal failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svtnet::baselines::{
    common_measures, graphlet_gram, random_walk_gram, shortest_path_gram, wl_gram, RandomWalk, MEASURE_NAMES,
    WL_DEFAULT_ITERATIONS,
};
use svtnet::experiment::{diagrams_for, BaTauMax, GnTransition, ModelId, PipelineConfig, Preset, ReportDir, TauGrid};
use svtnet::generators::{configuration_model, generate, realization_seed, GeneratorSpec, Model, WS_DEFAULT_K};
use svtnet::graph::{load_edge_list, save_edge_list, WeightedGraph};
use svtnet::kernel::{bandwidth_heuristic, gram_matrix_with_ids, normalize_kernel, GramMatrix};
use svtnet::learn::{cross_validate, kernel_pca, kfdr_series, LabelSet};
use svtnet::metrics::bottleneck_3d;
use svtnet::persistence::Diagram3D;
use svtnet::Error;

#[derive(Parser)]
#[command(name = "svtnet", version, about = "Scale-variant topological features of networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML pipeline configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic networks as edge-list files plus a manifest.
    Generate(GenerateArgs),
    /// Compute 3D persistence diagrams of edge-list graphs.
    Diagram(DiagramArgs),
    /// Bottleneck distance between two diagram files.
    Bottleneck(BottleneckArgs),
    /// Scale-variant kernel Gram matrix of a directory of diagrams.
    Gram(GramArgs),
    /// Cross-validated SVM accuracy from a Gram matrix and labels.
    Classify(ClassifyArgs),
    /// KFDR series and change point of an ordered Gram matrix.
    Changepoint(ChangepointArgs),
    /// Kernel principal components of a Gram matrix.
    Kpca(KpcaArgs),
    /// Baseline features or graph-kernel Gram matrices.
    Baseline(BaselineArgs),
    /// Run an experiment preset into a report directory.
    Experiment(ExperimentArgs),
    /// Check a configuration file and print "ok".
    Validate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gn,
    Er,
    Ws,
    Ba,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// r (gn), p_link (er), beta (ws) or m0 (ba).
    #[arg(long)]
    param: f64,
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Neighbour count of the ws ring lattice.
    #[arg(long, default_value_t = WS_DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the configuration network of every realization.
    #[arg(long)]
    configuration: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    tau_start: Option<f64>,
    #[arg(long)]
    tau_step: Option<f64>,
    #[arg(long)]
    tau_count: Option<usize>,
    /// Explicit comma-separated grid; overrides start/step/count.
    #[arg(long, value_delimiter = ',')]
    tau_list: Option<Vec<f64>>,
}

impl GridArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(list) = &self.tau_list {
            cfg.tau = TauGrid::List(list.clone());
            return;
        }
        if self.tau_start.is_none() && self.tau_step.is_none() && self.tau_count.is_none() {
            return;
        }
        let (mut start, mut step, mut count) = (1.0, 1.0, 100);
        if let TauGrid::Range { start: s, step: d, count: c } = cfg.tau {
            (start, step, count) = (s, d, c);
        }
        cfg.tau = TauGrid::range(
            self.tau_start.unwrap_or(start),
            self.tau_step.unwrap_or(step),
            self.tau_count.unwrap_or(count),
        );
    }
}

#[derive(Args)]
struct DiagramArgs {
    /// An edge-list file or a directory of them.
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Hole dimensions, e.g. `--dim 0,1`.
    #[arg(long, value_delimiter = ',')]
    dim: Option<Vec<usize>>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct BottleneckArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Weight of the timescale coordinate.
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
}

#[derive(Args)]
struct GramArgs {
    /// Directory of diagram files written by `diagram`.
    #[arg(long)]
    diagrams: PathBuf,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Normalize to unit diagonal (the default unless `--raw`).
    #[arg(long, conflicts_with = "raw")]
    normalized: bool,
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    gram: PathBuf,
    /// CSV of `id,label` rows.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ChangepointArgs {
    #[arg(long)]
    gram: PathBuf,
    #[arg(long)]
    eta: Option<f64>,
    /// Use the Gram matrix as given even if it is not normalized.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct KpcaArgs {
    #[arg(long)]
    gram: PathBuf,
    #[arg(long, default_value_t = 3)]
    components: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Common,
    Kstep,
    Geometric,
    Exponential,
    Sp,
    Graphlet,
    Wl,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Weisfeiler–Lehman iterations.
    #[arg(long, default_value_t = WL_DEFAULT_ITERATIONS)]
    iterations: usize,
    /// Graphlet size, 3 or 4 (default: 4 for graphs of at most 64 nodes).
    #[arg(long)]
    graphlet_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    GnTransition,
    ModelId,
    BaTaumax,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    preset: PresetArg,
    #[arg(long)]
    out: PathBuf,
    /// Approximate the published scale instead of the desk-scale default.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> svtnet::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidParameter {
                name: "threads",
                msg: "must be at least 1".into(),
            });
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &cfg),
        Command::Diagram(a) => cmd_diagram(a, cfg),
        Command::Bottleneck(a) => cmd_bottleneck(a),
        Command::Gram(a) => cmd_gram(a, cfg),
        Command::Classify(a) => cmd_classify(a, &cfg),
        Command::Changepoint(a) => cmd_changepoint(a, &cfg),
        Command::Kpca(a) => cmd_kpca(a),
        Command::Baseline(a) => cmd_baseline(a, &cfg),
        Command::Experiment(a) => cmd_experiment(a, &cfg),
        Command::Validate => {
            cfg.validate()?;
            println!("ok");
            Ok(())
        }
    }
}

fn user_error(name: &'static str, msg: impl Into<String>) -> Error {
    Error::InvalidParameter { name, msg: msg.into() }
}

fn write_file(path: &Path, text: &str) -> svtnet::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> svtnet::Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Files of `dir` (or `dir` itself if it is a file) with one of the given
/// extensions, sorted by name.
fn list_files(dir: &Path, extensions: &[&str]) -> svtnet::Result<Vec<PathBuf>> {
    if dir.is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let io = |e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && extensions.contains(&ext) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!("no {} files in {}", extensions.join("/"), dir.display())));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn load_graphs(dir: &Path) -> svtnet::Result<(Vec<String>, Vec<WeightedGraph>)> {
    let files = list_files(dir, &["txt", "edges"])?;
    let graphs = files.iter().map(|f| load_edge_list(f, None)).collect::<svtnet::Result<Vec<_>>>()?;
    Ok((files.iter().map(|f| stem(f)).collect(), graphs))
}

fn cmd_generate(a: GenerateArgs, cfg: &PipelineConfig) -> svtnet::Result<()> {
    let model = match a.model {
        ModelArg::Gn => Model::GirvanNewman { r: a.param, p_in: None },
        ModelArg::Er => Model::ErdosRenyi { p_link: a.param },
        ModelArg::Ws => Model::WattsStrogatz { k: a.k, beta: a.param },
        ModelArg::Ba => {
            if a.param.fract() != 0.0 || a.param < 1.0 {
                return Err(user_error("param", format!("m0 must be a positive integer, got {}", a.param)));
            }
            Model::BarabasiAlbert { m0: a.param as usize }
        }
    };
    let seed = a.seed.unwrap_or(cfg.seed);
    GeneratorSpec::new(model, a.n, seed).validate()?;
    create_dir(&a.out)?;
    let mut manifest = String::from("model,param,n,seed,path\n");
    for rep in 0..a.reps {
        let s = realization_seed(seed, rep as u64);
        let g = generate(&GeneratorSpec::new(model, a.n, s))?;
        let name = format!("{}_{}_{rep:03}.txt", model.tag(), a.param);
        save_edge_list(&g, a.out.join(&name))?;
        let _ = writeln!(manifest, "{},{},{},{s},{name}", model.tag(), a.param, a.n);
        if a.configuration {
            let c = configuration_model(&g, realization_seed(s, 1))?;
            let name = format!("{}-conf_{}_{rep:03}.txt", model.tag(), a.param);
            save_edge_list(&c, a.out.join(&name))?;
            let _ = writeln!(manifest, "{}-conf,{},{},{s},{name}", model.tag(), a.param, a.n);
        }
    }
    write_file(&a.out.join("manifest.csv"), &manifest)
}

fn cmd_diagram(a: DiagramArgs, mut cfg: PipelineConfig) -> svtnet::Result<()> {
    a.grid.apply(&mut cfg);
    if let Some(d) = a.dim {
        cfg.dims = d;
    }
    let grid = cfg.validate()?;
    let (names, graphs) = load_graphs(&a.graphs)?;
    create_dir(&a.out)?;
    for &dim in &cfg.dims {
        let diagrams = diagrams_for(&graphs, &grid, dim)?;
        for (name, d) in names.iter().zip(&diagrams) {
            d.save_csv(a.out.join(format!("{name}_h{dim}.csv")))?;
        }
    }
    eprintln!("{} graph(s), {} timescale(s), dims {:?}", graphs.len(), grid.len(), cfg.dims);
    Ok(())
}

fn cmd_bottleneck(a: BottleneckArgs) -> svtnet::Result<()> {
    let e = Diagram3D::load_csv(&a.a)?;
    let f = Diagram3D::load_csv(&a.b)?;
    println!("{:?}", bottleneck_3d(&e, &f, a.xi)?);
    Ok(())
}

fn cmd_gram(a: GramArgs, mut cfg: PipelineConfig) -> svtnet::Result<()> {
    if a.raw {
        cfg.normalized = false;
    } else if a.normalized {
        cfg.normalized = true;
    }
    cfg.sigma = a.sigma.or(cfg.sigma);
    cfg.xi = a.xi.or(cfg.xi);
    cfg.dims = vec![a.dim];
    cfg.validate()?;
    let suffix = format!("_h{}", a.dim);
    let files: Vec<PathBuf> = list_files(&a.diagrams, &["csv"])?
        .into_iter()
        .filter(|f| stem(f).ends_with(&suffix))
        .collect();
    if files.is_empty() {
        return Err(Error::Empty(format!("no *{suffix}.csv diagrams in {}", a.diagrams.display())));
    }
    let diagrams = files.iter().map(Diagram3D::load_csv).collect::<svtnet::Result<Vec<_>>>()?;
    let ids: Vec<String> = files.iter().map(|f| stem(f).trim_end_matches(&suffix).to_string()).collect();
    if let Some((id, _)) = ids.iter().zip(&diagrams).find(|(_, d)| d.points.iter().any(|p| !p.death.is_finite())) {
        return Err(user_error("diagrams", format!("`{id}` has infinite deaths; the kernel needs finite 3D diagrams")));
    }
    let params = match cfg.kernel_params()? {
        Some(p) => p,
        None => bandwidth_heuristic(&diagrams)?,
    };
    eprintln!("sigma = {:?}, xi = {:?}", params.sigma(), params.xi());
    let gram = gram_matrix_with_ids(&diagrams, ids, params, cfg.normalized)?;
    write_file(&a.out, &gram.to_csv())
}

fn cmd_classify(a: ClassifyArgs, cfg: &PipelineConfig) -> svtnet::Result<()> {
    let gram = GramMatrix::load_csv(&a.gram)?;
    let text = fs::read_to_string(&a.labels).map_err(|e| Error::Io {
        path: a.labels.clone(),
        source: e,
    })?;
    let labels = LabelSet::from_csv(&text, &a.labels.display().to_string(), &gram.ids)?;
    let r = cross_validate(&gram, &labels.labels, a.folds, a.repeats, a.seed.unwrap_or(cfg.seed))?;
    println!("repeat,accuracy");
    for (i, acc) in r.accuracies.iter().enumerate() {
        println!("{i},{acc:?}");
    }
    println!("# mean={:?} sd={:?} classes={}", r.mean, r.sd, labels.class_count());
    Ok(())
}

fn cmd_changepoint(a: ChangepointArgs, cfg: &PipelineConfig) -> svtnet::Result<()> {
    let mut gram = GramMatrix::load_csv(&a.gram)?;
    if !gram.normalized && !a.raw {
        gram = normalize_kernel(&gram)?;
    }
    let series = kfdr_series(&gram, a.eta.unwrap_or(cfg.eta))?;
    print!("{}", series.to_csv());
    println!("# argmax s={}", series.argmax);
    Ok(())
}

fn cmd_kpca(a: KpcaArgs) -> svtnet::Result<()> {
    let gram = GramMatrix::load_csv(&a.gram)?;
    let coords = kernel_pca(&gram, a.components)?;
    let mut out = String::from("id");
    for c in 1..=a.components {
        let _ = write!(out, ",pc{c}");
    }
    out.push('\n');
    for (i, id) in gram.ids.iter().enumerate() {
        out.push_str(id);
        for c in 0..a.components {
            let _ = write!(out, ",{:?}", coords[(i, c)]);
        }
        out.push('\n');
    }
    write_file(&a.out, &out)
}

fn cmd_baseline(a: BaselineArgs, cfg: &PipelineConfig) -> svtnet::Result<()> {
    let (ids, graphs) = load_graphs(&a.graphs)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let gram = match a.method {
        Method::Common => {
            let mut out = format!("id,{}\n", MEASURE_NAMES.join(","));
            for (id, g) in ids.iter().zip(&graphs) {
                let m = common_measures(g, seed)?;
                let row: Vec<String> = m.0.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(out, "{id},{}", row.join(","));
            }
            return write_file(&a.out, &out);
        }
        Method::Kstep => random_walk_gram(&graphs, &RandomWalk::kstep_default())?,
        Method::Geometric => random_walk_gram(&graphs, &RandomWalk::geometric_default())?,
        Method::Exponential => random_walk_gram(&graphs, &RandomWalk::exponential_default())?,
        Method::Sp => shortest_path_gram(&graphs)?,
        Method::Graphlet => graphlet_gram(&graphs, a.graphlet_size)?,
        Method::Wl => wl_gram(&graphs, a.iterations)?,
    };
    let gram = GramMatrix::new(gram.matrix, ids, gram.normalized)?;
    write_file(&a.out, &gram.to_csv())
}

fn cmd_experiment(a: ExperimentArgs, cfg: &PipelineConfig) -> svtnet::Result<()> {
    let seed = a.seed.unwrap_or(cfg.seed);
    let dir = ReportDir::create(&a.out)?;
    dir.write("pipeline.toml", &cfg.to_toml())?;
    let preset = match a.preset {
        PresetArg::GnTransition => Preset::GnTransition,
        PresetArg::ModelId => Preset::ModelId,
        PresetArg::BaTaumax => Preset::BaTauMax,
    };
    eprintln!("running {} ({} scale) into {}", preset.name(), if a.full { "full" } else { "desk" }, a.out.display());
    match preset {
        Preset::GnTransition => {
            let mut s = if a.full { GnTransition::full() } else { GnTransition::desk() };
            s.seed = seed;
            s.eta = cfg.eta;
            let r = s.run(Some(&dir))?;
            println!("r* = {:?} (s = {})", r.r_star, r.kappa.argmax);
        }
        Preset::ModelId => {
            let mut s = if a.full { ModelId::full() } else { ModelId::desk() };
            s.seed = seed;
            let r = s.run(Some(&dir))?;
            println!("accuracy = {:?} +/- {:?}", r.accuracy.mean, r.accuracy.sd);
            if let Some((x, y)) = r.configuration {
                println!("configuration classes: scale-variant {:?}, common measures {:?}", x.mean, y.mean);
            }
        }
        Preset::BaTauMax => {
            let mut s = if a.full { BaTauMax::full() } else { BaTauMax::desk() };
            s.seed = seed;
            let r = s.run(Some(&dir))?;
            for (t, acc) in &r.accuracy {
                println!("tau_max = {t}: {:?} +/- {:?}", acc.mean, acc.sd);
            }
        }
    }
    Ok(())
}
