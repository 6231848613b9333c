//! Command-line pipeline: generate benchmark data, cluster histogram
//! datasets, score assignments and render maps.

pub mod error;
pub mod formats;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use dhsom::som::half_diagonal;
use dhsom::{generate, metrics, pipeline, DatasetSpec, DissimilarityKind, GridTopology, SomConfig};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::formats::{Assignment, DatasetFile, Edge, MapFile, NeuronRecord, ObsId};

#[derive(Debug, Parser)]
#[command(name = "dhsom", version, about = "Density-based SOM clustering of histogram data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one of the six synthetic benchmark datasets.
    Gen(GenArgs),
    /// Train a map, enrich it and cluster the prototypes.
    Cluster(ClusterArgs),
    /// Score an assignment file against ground truth.
    Eval(EvalArgs),
    /// Render a map file as SVG (or re-export it as JSON or CSV).
    ExportMap(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Svg,
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    /// Benchmark preset, 1 to 6.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub db: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub n_per_cluster: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Raw draws per histogram.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ClusterArgs {
    /// Dataset JSON, or raw samples as CSV with columns id,variable,value.
    pub input: PathBuf,
    /// Directory receiving assignments.csv, map.json and map.svg.
    #[arg(short, long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub tmax: Option<usize>,
    #[arg(long)]
    pub lambda_i: Option<f64>,
    #[arg(long)]
    pub lambda_f: Option<f64>,
    /// Density bandwidth; defaults to the mean nearest-prototype distance.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value = "dW")]
    pub dissimilarity: DissimilarityKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bins per histogram when binning raw CSV samples.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// `svg` also writes map.svg; the CSV and JSON outputs are always written.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Assignment CSV written by `cluster`.
    pub assignments: PathBuf,
    /// Dataset JSON with labels, or CSV with columns id,label.
    pub truth: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ExportArgs {
    /// Map JSON written by `cluster`.
    pub map: PathBuf,
    #[arg(long, value_enum, default_value = "svg")]
    pub format: Format,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Add one panel per variable with prototype histograms.
    #[arg(long)]
    pub panels: bool,
    /// Overlay observation counts as black hexagons.
    #[arg(long)]
    pub counts: bool,
    /// Comma-separated observation ids to join with a polyline.
    #[arg(long, value_delimiter = ',')]
    pub trajectory: Vec<String>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Cluster(a) => cmd_cluster(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::ExportMap(a) => cmd_export_map(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Invariant(e.to_string()))
}

fn emit_or_write(out: &mut dyn Write, path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => formats::write_text(p, text),
        None => emit(out, text),
    }
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut spec = DatasetSpec::preset(a.db, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(n) = a.n_per_cluster {
        spec.n_per_cluster = n;
    }
    if let Some(b) = a.bins {
        spec.bins = b;
    }
    if let Some(s) = a.samples {
        spec.samples_per_histogram = s;
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let data = generate(&spec)?;
    let text = formats::to_json(&DatasetFile::from_generated(&data))?;
    emit_or_write(out, a.output.as_deref(), &text)?;
    if a.output.is_some() {
        let summary = json!({
            "n": data.observations.len(),
            "d": spec.dimension,
            "k": spec.n_clusters,
            "varying": spec.varying,
        });
        emit(out, &format!("{summary}\n"))?;
    }
    Ok(())
}

/// Map configuration from the defaults for `n` observations and the flags.
pub fn som_config(a: &ClusterArgs, n: usize) -> CliResult<SomConfig> {
    let mut cfg = SomConfig::default_for(n, a.dissimilarity, a.seed);
    if a.rows.is_some() || a.cols.is_some() {
        let rows = a.rows.or(a.cols).unwrap_or(cfg.topology.rows());
        let cols = a.cols.or(a.rows).unwrap_or(cfg.topology.cols());
        cfg.topology = GridTopology::new(rows, cols).map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.lambda_initial = half_diagonal(&cfg.topology);
    }
    if let Some(t) = a.tmax {
        cfg.t_max = t;
    }
    if let Some(l) = a.lambda_i {
        cfg.lambda_initial = l;
    }
    if let Some(l) = a.lambda_f {
        cfg.lambda_final = l;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(s) = a.sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!("--sigma must be positive, got {s}")));
        }
    }
    Ok(cfg)
}

/// Outputs of one clustering run.
pub struct ClusterOutput {
    pub map: MapFile,
    pub assignments_csv: String,
    pub map_json: String,
    pub ari: Option<f64>,
}

pub fn cluster_dataset(dataset: &DatasetFile, a: &ClusterArgs) -> CliResult<ClusterOutput> {
    let data = dataset.observation_vectors()?;
    let cfg = som_config(a, data.len())?;
    let result = pipeline::run(&data, &cfg, a.sigma)?;
    let e = &result.enriched;
    let c = &result.clusters;
    let topo = cfg.topology;
    let hits = e.map.hit_counts();
    let neurons = (0..topo.len())
        .map(|i| {
            let (row, col) = topo.coords(i);
            NeuronRecord {
                index: i,
                row,
                col,
                count: hits[i],
                density: e.densities[i],
                micro_label: c.micro.label_of[i],
                cluster: c.neuron_label[i],
                prototype: e.map.prototypes()[i].histograms().to_vec(),
            }
        })
        .collect();
    let assignments: Vec<Assignment> = dataset
        .ids()
        .into_iter()
        .zip(e.map.bmu_of())
        .zip(&c.data_label)
        .map(|((id, &bmu), &cluster)| Assignment { id, bmu, cluster })
        .collect();
    let map = MapFile {
        rows: topo.rows(),
        cols: topo.cols(),
        config: cfg,
        bandwidth: e.bandwidth,
        n_clusters: c.n_clusters,
        neurons,
        connectivity: e.connectivity.pairs().map(|(i, j, count)| Edge { i, j, count }).collect(),
        assignments,
    };
    let ari = match dataset.labels() {
        Some(truth) if truth.len() >= 2 => Some(metrics::adjusted_rand(&c.data_label, &truth)?),
        _ => None,
    };
    Ok(ClusterOutput {
        assignments_csv: formats::assignments_csv(&map.assignments)?,
        map_json: formats::to_json(&map)?,
        map,
        ari,
    })
}

pub fn cmd_cluster(a: &ClusterArgs, out: &mut dyn Write) -> CliResult<()> {
    let dataset = formats::read_dataset(&a.input, a.bins)?;
    let res = cluster_dataset(&dataset, a)?;
    formats::write_text(&a.output_dir.join("assignments.csv"), &res.assignments_csv)?;
    formats::write_text(&a.output_dir.join("map.json"), &res.map_json)?;
    if a.format == Some(Format::Svg) {
        let svg = svg::render(&res.map, &svg::SvgOptions::default())
            .map_err(|id| CliError::Invariant(format!("unknown id {id}")))?;
        formats::write_text(&a.output_dir.join("map.svg"), &svg)?;
    }
    let mut summary = json!({
        "n": dataset.observations.len(),
        "d": dataset.dimension,
        "rows": res.map.rows,
        "cols": res.map.cols,
        "dissimilarity": a.dissimilarity,
        "bandwidth": res.map.bandwidth,
        "n_clusters": res.map.n_clusters,
    });
    if let Some(ari) = res.ari {
        summary["ari"] = json!(ari);
    }
    emit(out, &format!("{summary}\n"))
}

/// Aligns predicted clusters with truth labels by id.
pub fn align(assignments: &[Assignment], truth: &[(ObsId, usize)]) -> CliResult<(Vec<usize>, Vec<usize>)> {
    let lookup: std::collections::BTreeMap<&ObsId, usize> = truth.iter().map(|(id, l)| (id, *l)).collect();
    if lookup.len() != truth.len() {
        return Err(CliError::Input("truth file repeats an id".into()));
    }
    if assignments.len() != truth.len() {
        return Err(CliError::Input(format!(
            "{} assignments but {} truth labels",
            assignments.len(),
            truth.len()
        )));
    }
    let mut pred = Vec::with_capacity(assignments.len());
    let mut gold = Vec::with_capacity(assignments.len());
    for a in assignments {
        let label = lookup
            .get(&a.id)
            .ok_or_else(|| CliError::Input(format!("id {} missing from truth file", a.id)))?;
        pred.push(a.cluster);
        gold.push(*label);
    }
    Ok((pred, gold))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = formats::read_text(&a.assignments)?;
    let assignments = formats::parse_assignments_csv(&text, &a.assignments.display().to_string())?;
    let truth = formats::read_truth(&a.truth)?;
    let (pred, gold) = align(&assignments, &truth)?;
    if pred.len() < 2 {
        return Err(CliError::Input("need at least two observations to score".into()));
    }
    let s = metrics::score(&pred, &gold)?;
    let line = json!({ "n": pred.len(), "ari": s.ari, "nmi": s.nmi, "v_measure": s.v_measure });
    emit(
        out,
        &format!(
            "{line}\nindex      value\nARI        {:.4}\nNMI        {:.4}\nV-measure  {:.4}\n",
            s.ari, s.nmi, s.v_measure
        ),
    )
}

fn neurons_csv(map: &MapFile) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Invariant(e.to_string());
    w.write_record(["neuron", "row", "col", "count", "density", "micro_label", "cluster"]).map_err(fail)?;
    for n in &map.neurons {
        w.write_record([
            n.index.to_string(),
            n.row.to_string(),
            n.col.to_string(),
            n.count.to_string(),
            n.density.to_string(),
            n.micro_label.to_string(),
            n.cluster.map(|c| c.to_string()).unwrap_or_default(),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invariant(e.to_string()))
}

pub fn cmd_export_map(a: &ExportArgs, out: &mut dyn Write) -> CliResult<()> {
    let map = formats::read_map(&a.map)?;
    let text = match a.format {
        Format::Svg => {
            let opts = svg::SvgOptions {
                panels: a.panels,
                counts: a.counts,
                trajectory: a.trajectory.iter().map(|s| ObsId::parse(s)).collect(),
            };
            svg::render(&map, &opts).map_err(|id| CliError::Input(format!("trajectory id {id} not in map")))?
        }
        Format::Json => formats::to_json(&map)?,
        Format::Csv => neurons_csv(&map)?,
    };
    emit_or_write(out, a.output.as_deref(), &text)
}
