//! `hategraph` command-line entry point.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hategraph::config::overlay_json;
use hategraph::dataset::{load_edges, load_post_scores, write_post_scores, Dataset};
use hategraph::diffusion::{diffusion_cv, seed_beliefs, DeGroot, DiffusionConfig};
use hategraph::embed::{embed_and_classify, embed_graph, WalkConfig};
use hategraph::features::{write_feature_csv, FeatureContext, FeatureMode, FeatureParams};
use hategraph::graph::{ego_network, graph_stats, DegreeCutoff, UserGraph};
use hategraph::synth::{SynthConfig, SynthData};
use hategraph::train::{evaluate_mode, CvConfig, EvalReport, FittedPipeline, Learner, LogRegConfig};
use hategraph::{Embeddings, Lexicon};

#[derive(Parser)]
#[command(name = "hategraph", version, about = "User-level hate-monger classification over follower graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 selects the deterministic reference path.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    knobs: Knobs,
}

/// Flags overriding [`Settings`]; unset flags leave the config value alone.
#[derive(Args, Default)]
struct Knobs {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Feature mode(s): F, R, Db, Dq, DbDq, FULL, a comma list, or `all`.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    tau_t: Option<f64>,
    #[arg(long, global = true)]
    tau_u: Option<f64>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true)]
    l2: Option<f64>,
    #[arg(long, global = true)]
    seed_fraction: Option<f64>,
    #[arg(long, global = true)]
    prior: Option<f64>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    walk_length: Option<usize>,
    #[arg(long, global = true)]
    walks_per_node: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    negatives: Option<usize>,
    /// Fixed minimum degree for the power-law fit (default: KS-optimal).
    #[arg(long, global = true)]
    d_min: Option<usize>,
}

#[derive(Args, Default)]
struct DataArgs {
    /// Directory holding edges.csv, posts.jsonl and labels.csv.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Largest-component statistics of an edge list.
    Stats {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Per-user feature table.
    Features {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Cross-validated evaluation of one or more feature modes.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Generate a synthetic dataset; `--config` is read as a generator config.
    Synth {
        #[arg(long)]
        n_users: Option<usize>,
        #[arg(long)]
        attach_m: Option<usize>,
        #[arg(long)]
        hate_fraction: Option<f64>,
        #[arg(long)]
        homophily: Option<f64>,
    },
    /// DeGroot diffusion: cross-validated report plus final beliefs.
    Diffuse {
        #[command(flatten)]
        data: DataArgs,
    },
    /// node2vec embeddings, cross-validated when labels are given.
    Embed {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Ego network of one user as DOT and JSON.
    Ego {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        user: String,
    },
    /// Score post texts with a lexicon.
    Score {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Stats { .. } => "stats",
            Command::Features { .. } => "features",
            Command::Evaluate { .. } => "evaluate",
            Command::Synth { .. } => "synth",
            Command::Diffuse { .. } => "diffuse",
            Command::Embed { .. } => "embed",
            Command::Ego { .. } => "ego",
            Command::Score { .. } => "score",
        }
    }
}

/// Resolved run configuration, echoed into every manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    seed: u64,
    mode: String,
    tau_t: f64,
    tau_u: f64,
    bins: usize,
    folds: usize,
    l2: f64,
    seed_fraction: f64,
    prior: f64,
    iterations: usize,
    threshold: f64,
    dim: usize,
    epochs: usize,
    walk_length: usize,
    walks_per_node: usize,
    window: usize,
    p: f64,
    q: f64,
    negatives: usize,
    d_min: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        let f = FeatureParams::default();
        let d = DiffusionConfig::default();
        let w = WalkConfig::default();
        Settings {
            seed: 0,
            mode: "FULL".into(),
            tau_t: f.tau_t,
            tau_u: f.tau_u,
            bins: f.bins,
            folds: CvConfig::default().folds,
            l2: LogRegConfig::default().l2,
            seed_fraction: d.seed_fraction,
            prior: d.prior,
            iterations: d.iterations,
            threshold: d.threshold,
            dim: w.dim,
            epochs: w.epochs,
            walk_length: w.walk_length,
            walks_per_node: w.walks_per_node,
            window: w.window,
            p: w.p,
            q: w.q,
            negatives: w.negatives,
            d_min: None,
        }
    }
}

macro_rules! apply {
    ($settings:expr, $knobs:expr, $($field:ident),*) => {
        $(if let Some(v) = $knobs.$field.clone() { $settings.$field = v; })*
    };
}

impl Settings {
    fn resolve(config: Option<&Path>, knobs: &Knobs) -> anyhow::Result<Self> {
        let mut s = match config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                overlay_json(&Settings::default(), &text)?
            }
            None => Settings::default(),
        };
        apply!(
            s, knobs, seed, mode, tau_t, tau_u, bins, folds, l2, seed_fraction, prior, iterations, threshold, dim,
            epochs, walk_length, walks_per_node, window, p, q, negatives
        );
        if knobs.d_min.is_some() {
            s.d_min = knobs.d_min;
        }
        Ok(s)
    }

    fn modes(&self) -> anyhow::Result<Vec<FeatureMode>> {
        if self.mode.eq_ignore_ascii_case("all") {
            return Ok(FeatureMode::ALL.to_vec());
        }
        Ok(self
            .mode
            .split(',')
            .map(|m| m.trim().parse::<FeatureMode>())
            .collect::<Result<_, _>>()?)
    }

    fn features(&self) -> FeatureParams {
        FeatureParams {
            tau_t: self.tau_t,
            tau_u: self.tau_u,
            bins: self.bins,
        }
    }

    fn logreg(&self) -> LogRegConfig {
        LogRegConfig {
            l2: self.l2,
            seed: self.seed,
            ..LogRegConfig::default()
        }
    }

    fn cv(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            seed: self.seed,
            learner: Learner::LogisticRegression(self.logreg()),
        }
    }

    fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig {
            seed_fraction: self.seed_fraction,
            prior: self.prior,
            iterations: self.iterations,
            threshold: self.threshold,
            seed: self.seed,
        }
    }

    fn walk(&self) -> WalkConfig {
        WalkConfig {
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            p: self.p,
            q: self.q,
            window: self.window,
            dim: self.dim,
            epochs: self.epochs,
            negatives: self.negatives,
            seed: self.seed,
            ..WalkConfig::default()
        }
    }

    fn cutoff(&self) -> DegreeCutoff {
        self.d_min.map_or_else(DegreeCutoff::default, DegreeCutoff::Fixed)
    }
}

impl DataArgs {
    fn path(&self, explicit: &Option<PathBuf>, file: &str) -> Option<PathBuf> {
        explicit
            .clone()
            .or_else(|| self.data_dir.as_ref().map(|d| d.join(file)))
    }

    fn edges_path(&self) -> anyhow::Result<PathBuf> {
        self.path(&self.edges, "edges.csv")
            .ok_or_else(|| anyhow!(hategraph::Error::InvalidValue("pass --edges or --data-dir".into())))
    }

    fn has_labels(&self) -> bool {
        self.path(&self.labels, "labels.csv").is_some_and(|p| p.exists())
    }

    fn graph(&self) -> anyhow::Result<UserGraph> {
        Ok(UserGraph::from_edges(load_edges(self.edges_path()?)?)?)
    }

    fn dataset(&self) -> anyhow::Result<Dataset> {
        let missing = |what: &str| anyhow!(hategraph::Error::InvalidValue(format!("pass --{what} or --data-dir")));
        let edges = self.edges_path()?;
        let posts = self.path(&self.posts, "posts.jsonl").ok_or_else(|| missing("posts"))?;
        let labels = self.path(&self.labels, "labels.csv").ok_or_else(|| missing("labels"))?;
        Ok(Dataset::load(edges, posts, labels)?)
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "edges": self.path(&self.edges, "edges.csv"),
            "posts": self.path(&self.posts, "posts.jsonl"),
            "labels": self.path(&self.labels, "labels.csv"),
        })
    }
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    /// Nothing touches the disk until the first file is created, so a run
    /// that fails on its inputs leaves no directory behind.
    fn new(dir: &Path) -> Self {
        Output {
            dir: dir.to_owned(),
            written: Vec::new(),
        }
    }

    fn create(&mut self, name: &str) -> anyhow::Result<BufWriter<fs::File>> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        self.written.push(name.to_owned());
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        w.write_all(contents.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn reports(&mut self, reports: &[EvalReport]) -> anyhow::Result<()> {
        let json = serde_json::to_string_pretty(reports)?;
        self.write("report.json", &(json + "\n"))?;
        let mut w = self.create("report.csv")?;
        EvalReport::write_csv(reports, &mut w)?;
        w.flush()?;
        Ok(())
    }

    /// The only file that may differ between identical runs.
    fn manifest(mut self, command: &str, config: serde_json::Value, inputs: serde_json::Value) -> anyhow::Result<()> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let outputs = std::mem::take(&mut self.written);
        let manifest = json!({
            "toolkit_version": hategraph::VERSION,
            "command": command,
            "config": config,
            "inputs": inputs,
            "outputs": outputs,
            "threads": rayon::current_num_threads(),
            "created_unix": created,
        });
        self.write("manifest.json", &(serde_json::to_string_pretty(&manifest)? + "\n"))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let command = cli.command.name();
    if let Command::Synth {
        n_users,
        attach_m,
        hate_fraction,
        homophily,
    } = cli.command
    {
        let mut cfg = match &cli.config {
            Some(path) => SynthConfig::load(path)?,
            None => SynthConfig::default(),
        };
        apply!(cfg, cli.knobs, seed);
        let overrides = Synth {
            n_users,
            attach_m,
            hate_fraction,
            homophily,
        };
        apply!(cfg, overrides, n_users, attach_m, hate_fraction, homophily);
        cfg.validate()?;
        let data = SynthData::generate(&cfg)?;
        let mut out = Output::new(&cli.output_dir);
        data.to_dataset()?.write_to_dir(&out.dir)?;
        out.written.extend(["edges.csv", "posts.jsonl", "labels.csv"].map(String::from));
        let summary = data.manifest();
        println!(
            "generated {} users, {} edges, {} posts",
            summary["users"], summary["edges"], summary["posts"]
        );
        return out.manifest(command, serde_json::to_value(&cfg)?, summary);
    }

    let settings = Settings::resolve(cli.config.as_deref(), &cli.knobs)?;
    let mut out = Output::new(&cli.output_dir);
    let inputs = match &cli.command {
        Command::Stats { data } => {
            let g = data.graph()?.largest_weakly_connected_component()?;
            let stats = graph_stats(&g, settings.cutoff())?;
            println!("nodes: {}", stats.node_count);
            println!("edges: {}", stats.edge_count);
            println!("clustering coefficient: {:.4}", stats.clustering_coefficient);
            match stats.powerlaw_gamma {
                Some(gamma) => println!(
                    "power-law gamma: {gamma:.4} (d_min {}, tail {})",
                    stats.powerlaw_d_min, stats.powerlaw_tail_size
                ),
                None => println!("power-law gamma: undefined (degree tail too small or uniform)"),
            }
            out.write("stats.json", &(serde_json::to_string_pretty(&stats)? + "\n"))?;
            data.describe()
        }
        Command::Features { data } => {
            let ds = data.dataset()?;
            let scores = ds.score_table();
            let ctx = FeatureContext::<f64>::new(&ds.graph, &scores, settings.features())?;
            let nodes: Vec<usize> = (0..ds.graph.node_count()).collect();
            let rows = ctx.users(&nodes, FeatureMode::Full);
            let mut w = out.create("features.csv")?;
            write_feature_csv(&mut w, &rows, settings.bins)?;
            w.flush()?;
            data.describe()
        }
        Command::Evaluate { data } => {
            let ds = data.dataset()?;
            let modes = settings.modes()?;
            let reports = modes
                .iter()
                .map(|&m| evaluate_mode(&ds, m, settings.features(), &settings.cv()))
                .collect::<hategraph::Result<Vec<_>>>()?;
            for r in &reports {
                println!("{}", r.csv_row());
            }
            out.reports(&reports)?;
            data.describe()
        }
        Command::Diffuse { data } => {
            let ds = data.dataset()?;
            let cfg = settings.diffusion();
            let report = diffusion_cv(&ds, &cfg, &settings.cv())?;
            println!("{}", report.csv_row());
            out.reports(std::slice::from_ref(&report))?;
            let lcc = ds.largest_component()?;
            let s0 = seed_beliefs(&lcc.graph, lcc.labels(), cfg.seed_fraction, cfg.seed, cfg.prior)?;
            let (beliefs, preds) = DeGroot::new(&lcc.graph).run(&s0, cfg.iterations, cfg.threshold)?;
            let mut w = out.create("beliefs.csv")?;
            writeln!(w, "user_id,belief,label_pred")?;
            for (u, (b, p)) in beliefs.iter().zip(&preds).enumerate() {
                writeln!(w, "{},{},{}", lcc.graph.id(u), b, u8::from(*p))?;
            }
            w.flush()?;
            data.describe()
        }
        Command::Embed { data } => {
            let walk = settings.walk();
            if data.has_labels() {
                let ds = data.dataset()?;
                let report = embed_and_classify(&ds, &walk, &settings.cv())?;
                println!("{}", report.csv_row());
                out.reports(std::slice::from_ref(&report))?;
            }
            let g = data.graph()?.largest_weakly_connected_component()?;
            let table: Embeddings = embed_graph(&g, &walk)?;
            let w = out.create("embeddings.csv")?;
            table.write_csv(&g, w)?;
            data.describe()
        }
        Command::Ego { data, user } => {
            let mut probs = HashMap::new();
            let g = if data.has_labels() {
                let ds = data.dataset()?;
                let mode = settings.modes()?[0];
                let pipeline = FittedPipeline::fit(&ds, mode, settings.features(), &settings.logreg())?;
                for (u, p) in pipeline.predict_all(&ds)?.into_iter().enumerate() {
                    probs.insert(ds.graph.id(u).to_owned(), p);
                }
                ds.graph
            } else {
                data.graph()?
            };
            let ego = ego_network(&g, user, &probs)?;
            out.write("ego.dot", &ego.to_dot())?;
            out.write("ego.json", &(ego.to_json() + "\n"))?;
            println!("ego network of {user}: {} nodes, {} edges", ego.nodes.len(), ego.edges.len());
            let mut inputs = data.describe();
            inputs["user"] = json!(user);
            inputs
        }
        Command::Score { posts, lexicon } => {
            let scorer = Lexicon::load(lexicon)?;
            let mut records = load_post_scores(posts)?;
            let mut hateful = 0;
            for r in &mut records {
                if let Some(text) = &r.text {
                    r.score = scorer.score(text);
                }
                hateful += usize::from(r.score >= settings.tau_t);
            }
            println!("{} posts, {hateful} at or above tau_t = {}", records.len(), settings.tau_t);
            let mut w = out.create("posts.jsonl")?;
            write_post_scores(&mut w, &records)?;
            w.flush()?;
            json!({ "posts": posts, "lexicon": lexicon })
        }
        Command::Synth { .. } => unreachable!("handled above"),
    };
    out.manifest(command, serde_json::to_value(&settings)?, inputs)
}

/// Generator overrides gathered for [`apply!`].
struct Synth {
    n_users: Option<usize>,
    attach_m: Option<usize>,
    hate_fraction: Option<f64>,
    homophily: Option<f64>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hategraph::Error>() {
            return if e.is_degenerate() { 3 } else { 2 };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
