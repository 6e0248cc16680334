//! Subcommand front-end: reproduces the numerical experiments as CSV/JSON
//! artifacts and drives the glued-trees search.

use crate::band::{Band, Host};
use crate::error::{Error, Result};
use crate::glued_trees::{run_algorithm, GluedRunConfig};
use crate::graph;
use crate::grid::MomentumGrid;
use crate::line_dynamics;
use crate::report::{self, Artifacts};
use crate::scattering;
use crate::tree_column::{self, WavePacketSpec};
use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "SNAKE_WALK_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "snake-walk",
    version,
    about = "Continuous-time quantum snake walk: spectra, wave packets, scattering, glued trees"
)]
pub struct Cli {
    /// Key=value config file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $SNAKE_WALK_OUT or ./out).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Additionally render a simple SVG plot of the primary series.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// All reduced-matrix eigenvalue bands on the line and their
    /// derivatives over one momentum period.
    Spectra(SpectraArgs),
    /// The localized state: per-column probabilities, start-position
    /// table, and locality tails across snake lengths.
    Eta(EtaArgs),
    /// Evolve the localized line state and emit the wavefront profile.
    EvolveLine(EvolveLineArgs),
    /// The median tree band and its first two derivatives.
    TreeSpectra(TreeSpectraArgs),
    /// Propagate a directed packet on the infinite tree.
    Packet(PacketArgs),
    /// Expected span length of the band vector per momentum.
    Span(SpanArgs),
    /// Closed-form transmission probability and effective length.
    Scatter(ScatterArgs),
    /// Span-class probabilities of the scattering eigenvector.
    MuSpan(MuSpanArgs),
    /// Run the glued-trees search end to end.
    GluedRun(GluedRunArgs),
}

#[derive(Args, Debug)]
pub struct SpectraArgs {
    /// Snake length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Momentum grid size.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EtaArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvolveLineArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Evolution time.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TreeSpectraArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PacketArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Carrier momentum in radians, inside (pi, 2pi).
    #[arg(long)]
    pub k0: Option<f64>,
    /// Momentum-space width.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SpanArgs {
    /// Largest (even) snake length to include.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScatterArgs {
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MuSpanArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Momentum of the scattering eigenvector.
    #[arg(long)]
    pub k: Option<f64>,
    /// Extra window columns on each side of the glued part.
    #[arg(long)]
    pub guard: Option<i64>,
}

#[derive(Args, Debug)]
pub struct GluedRunArgs {
    /// Base glued-trees height.
    #[arg(long = "N")]
    pub base_height: Option<usize>,
    /// Expanded height.
    #[arg(long = "M")]
    pub total_height: Option<usize>,
    /// Snake length (at least 2N+1).
    #[arg(long = "n")]
    pub snake_len: Option<usize>,
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Packet center column (default: middle of the entry tree).
    #[arg(long)]
    pub x0: Option<i64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

/// Parsed key=value configuration file. Lines starting with `#` and blank
/// lines are ignored.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "config line {}: expected key=value, got {line:?}",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    fn get<T: std::str::FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Parse(format!("config key {key}: cannot parse {raw:?}"))),
            None => Ok(default),
        }
    }
}

/// Execute a parsed command line; returns the artifact files written.
pub fn run(cli: Cli) -> Result<Artifacts> {
    let settings = Settings {
        map: match &cli.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => HashMap::new(),
        },
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| settings.map.get("out_dir").map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)?;

    let mut artifacts = Artifacts::default();
    match &cli.command {
        Command::Spectra(args) => spectra(args, &settings, &out_dir, cli.svg, &mut artifacts)?,
        Command::Eta(args) => eta(args, &settings, &out_dir, cli.svg, &mut artifacts)?,
        Command::EvolveLine(args) => {
            evolve_line(args, &settings, &out_dir, cli.svg, &mut artifacts)?
        }
        Command::TreeSpectra(args) => {
            tree_spectra(args, &settings, &out_dir, cli.svg, &mut artifacts)?
        }
        Command::Packet(args) => packet(args, &settings, &out_dir, cli.svg, &mut artifacts)?,
        Command::Span(args) => span(args, &settings, &out_dir, cli.svg, &mut artifacts)?,
        Command::Scatter(args) => scatter(args, &settings, &out_dir, cli.svg, &mut artifacts)?,
        Command::MuSpan(args) => mu_span(args, &settings, &out_dir, cli.svg, &mut artifacts)?,
        Command::GluedRun(args) => glued_run(args, &settings, &out_dir, &mut artifacts)?,
    }
    Ok(artifacts)
}

fn csv_and_svg(
    out: &mut Artifacts,
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<f64>],
    svg: bool,
) -> Result<()> {
    let path = dir.join(format!("{name}.csv"));
    report::write_csv(&path, header, rows)?;
    out.add(path);
    if svg {
        let series: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.len() >= 2).map(|r| (r[0], r[1])).collect();
        let path = dir.join(format!("{name}.svg"));
        report::write_svg(&path, name, &series)?;
        out.add(path);
    }
    Ok(())
}

fn sidecar(
    out: &mut Artifacts,
    dir: &Path,
    name: &str,
    params: serde_json::Value,
) -> Result<()> {
    let path = dir.join(format!("{name}.json"));
    report::write_sidecar(&path, name, params)?;
    out.add(path);
    Ok(())
}

fn spectra(
    args: &SpectraArgs,
    s: &Settings,
    dir: &Path,
    svg: bool,
    out: &mut Artifacts,
) -> Result<()> {
    let n = s.get(args.n, "n", 8)?;
    let k_count = s.get(args.grid, "grid", 512)?;
    let grid = MomentumGrid::new(k_count)?;
    let bands: Vec<Band> =
        (1..=n + 1).map(|l| Band::with_index(Host::Line, n, l)).collect::<Result<_>>()?;
    let mut header: Vec<String> = vec!["k_rad".into()];
    for l in 1..=n + 1 {
        header.push(format!("lambda_{l}"));
    }
    for l in 1..=n + 1 {
        header.push(format!("dlambda_{l}_per_rad"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut rows = Vec::with_capacity(grid.len());
    let mut root_rows = Vec::with_capacity(grid.len());
    for &k in grid.nodes() {
        let mut row = vec![k];
        for band in &bands {
            row.push(band.lambda(k)?);
        }
        for band in &bands {
            row.push(band.derivative(k, 1)?);
        }
        rows.push(row);
        let mut root_row = vec![k];
        root_row.extend(crate::band::secular_roots(Host::Line, n, k)?);
        root_rows.push(root_row);
    }
    csv_and_svg(out, dir, "spectra", &header_refs, &rows, svg)?;
    let mut root_header: Vec<String> = vec!["k_rad".into()];
    for l in 1..=n + 1 {
        root_header.push(format!("p_{l}_rad"));
    }
    let root_refs: Vec<&str> = root_header.iter().map(|s| s.as_str()).collect();
    csv_and_svg(out, dir, "spectra_roots", &root_refs, &root_rows, false)?;
    sidecar(out, dir, "spectra", serde_json::json!({ "n": n, "grid": k_count }))
}

fn eta(args: &EtaArgs, s: &Settings, dir: &Path, svg: bool, out: &mut Artifacts) -> Result<()> {
    let n = s.get(args.n, "n", 14)?;
    let k_count = s.get(args.grid, "grid", 4096)?;
    if n % 2 != 0 {
        return Err(Error::InvalidInput("eta needs even n".into()));
    }
    let grid = MomentumGrid::new(k_count)?;
    let state = line_dynamics::build_eta(n, 0, &grid)?;
    let profile_rows: Vec<Vec<f64>> = state
        .probability_profile()
        .into_iter()
        .map(|(x, p)| vec![x as f64, p])
        .collect();
    csv_and_svg(out, dir, "eta_profile", &["x", "probability"], &profile_rows, svg)?;

    // Start-position table: probability of a snake starting at distance
    // |offset| from the center, both signs combined.
    let mut start_rows = Vec::new();
    let mut offset = 1i64;
    while offset <= 3 * n as i64 {
        let p = state.slice_prob(offset) + state.slice_prob(-offset);
        start_rows.push(vec![offset as f64, p]);
        offset += 2;
    }
    csv_and_svg(out, dir, "eta_start", &["abs_offset", "probability"], &start_rows, false)?;

    // Locality tails across even snake lengths up to n.
    let mut tail_rows = Vec::new();
    for m in (2..=n).step_by(2) {
        tail_rows.push(vec![m as f64, line_dynamics::locality_tail(m, &grid)?]);
    }
    csv_and_svg(out, dir, "eta_tail", &["n", "tail_1norm"], &tail_rows, false)?;
    sidecar(out, dir, "eta", serde_json::json!({ "n": n, "grid": k_count }))
}

fn evolve_line(
    args: &EvolveLineArgs,
    s: &Settings,
    dir: &Path,
    svg: bool,
    out: &mut Artifacts,
) -> Result<()> {
    let n = s.get(args.n, "n", 14)?;
    let t = s.get(args.t, "t", 400.0)?;
    let k_count = s.get(args.grid, "grid", 8192)?;
    let grid = MomentumGrid::new(k_count)?;
    let reach = (t / 2.0).ceil() as i64 + 4 * n as i64;
    let profile = line_dynamics::wavefront_profile(n, t, &grid, (-reach, reach))?;
    let rows: Vec<Vec<f64>> = profile.into_iter().map(|(x, p)| vec![x as f64, p]).collect();
    csv_and_svg(out, dir, "evolve_line", &["x", "probability"], &rows, svg)?;

    // Stationary-phase prediction records across the momentum range,
    // including both edges and the outside regime.
    let edge = 8.0 / (n as f64 + 2.0);
    let mut predictions = Vec::new();
    let samples = 25usize;
    for i in 0..=samples {
        let omega = -1.2 * edge + 2.4 * edge * i as f64 / samples as f64;
        let record = line_dynamics::stationary_phase_predict(n, omega, t)?;
        predictions.push(serde_json::json!({ "omega": omega, "prediction": record }));
    }
    for omega in [-edge, edge] {
        let record = line_dynamics::stationary_phase_predict(n, omega, t)?;
        predictions.push(serde_json::json!({ "omega": omega, "prediction": record }));
    }
    let path = dir.join("evolve_line_predictions.json");
    report::write_json(&path, &serde_json::Value::Array(predictions))?;
    out.add(path);
    sidecar(out, dir, "evolve_line", serde_json::json!({ "n": n, "t": t, "grid": k_count }))
}

fn tree_spectra(
    args: &TreeSpectraArgs,
    s: &Settings,
    dir: &Path,
    svg: bool,
    out: &mut Artifacts,
) -> Result<()> {
    let n = s.get(args.n, "n", 8)?;
    let k_count = s.get(args.grid, "grid", 512)?;
    let grid = MomentumGrid::new(k_count)?;
    let band = tree_column::tree_band(n)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &k in grid.nodes() {
        rows.push(vec![k, band.lambda(k)?, band.derivative(k, 1)?, band.derivative(k, 2)?]);
    }
    csv_and_svg(
        out,
        dir,
        "tree_spectra",
        &["k_rad", "lambda", "dlambda_per_rad", "d2lambda_per_rad2"],
        &rows,
        svg,
    )?;
    sidecar(out, dir, "tree_spectra", serde_json::json!({ "n": n, "grid": k_count }))
}

fn packet(
    args: &PacketArgs,
    s: &Settings,
    dir: &Path,
    svg: bool,
    out: &mut Artifacts,
) -> Result<()> {
    let n = s.get(args.n, "n", 8)?;
    let k0 = s.get(args.k0, "k0", 1.5 * PI)?;
    let sigma = s.get(args.sigma, "sigma", 0.05)?;
    let t = s.get(args.t, "t", 100.0)?;
    let k_count = s.get(args.grid, "grid", 2048)?;
    let grid = MomentumGrid::new(k_count)?;
    let spec = WavePacketSpec { x0: 0, k0, sigma };
    let band = tree_column::tree_band(n)?;
    let velocity = band.derivative(k0, 1)?;
    let cover = spec.coverage(n);
    let target = (velocity * t).round() as i64;
    let window = ((-cover - 8).min(target - cover - 8), (cover + 8).max(target + cover + 8));
    let initial = tree_column::packet_propagation_profile(&spec, n, 0.0, &grid, window)?;
    let evolved = tree_column::packet_propagation_profile(&spec, n, t, &grid, window)?;
    let rows: Vec<Vec<f64>> = initial
        .iter()
        .zip(&evolved)
        .map(|(&(x, p0), &(_, pt))| vec![x as f64, p0, pt])
        .collect();
    csv_and_svg(
        out,
        dir,
        "packet",
        &["x", "probability_initial", "probability_final"],
        &rows,
        svg,
    )?;
    sidecar(
        out,
        dir,
        "packet",
        serde_json::json!({
            "n": n, "k0": k0, "sigma": sigma, "t": t, "grid": k_count,
            "packet": spec, "group_velocity": velocity,
        }),
    )
}

fn span(args: &SpanArgs, s: &Settings, dir: &Path, svg: bool, out: &mut Artifacts) -> Result<()> {
    let n_max = s.get(args.n_max, "n_max", 12)?;
    let k_count = s.get(args.grid, "grid", 256)?;
    let grid = MomentumGrid::new(k_count)?;
    let mut rows = Vec::new();
    for n in (2..=n_max).step_by(2) {
        for (k, value) in tree_column::band_span_profile(n, &grid)? {
            rows.push(vec![n as f64, k, value]);
        }
    }
    csv_and_svg(out, dir, "span", &["n", "k_rad", "expected_span"], &rows, svg)?;
    sidecar(out, dir, "span", serde_json::json!({ "n_max": n_max, "grid": k_count }))
}

fn scatter(
    args: &ScatterArgs,
    s: &Settings,
    dir: &Path,
    svg: bool,
    out: &mut Artifacts,
) -> Result<()> {
    let k_count = s.get(args.grid, "grid", 1024)?;
    let grid = MomentumGrid::new(k_count)?;
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .iter()
        .map(|&k| {
            let c = scattering::scattering_coefficients(k);
            vec![k, c.transmission_probability(), c.effective_length]
        })
        .collect();
    csv_and_svg(
        out,
        dir,
        "scatter",
        &["k_rad", "transmission_probability", "effective_length_rad"],
        &rows,
        svg,
    )?;
    sidecar(out, dir, "scatter", serde_json::json!({ "grid": k_count }))
}

fn mu_span(
    args: &MuSpanArgs,
    s: &Settings,
    dir: &Path,
    svg: bool,
    out: &mut Artifacts,
) -> Result<()> {
    let n = s.get(args.n, "n", 10)?;
    let k = s.get(args.k, "k", 1.5 * PI)?;
    let guard = s.get(args.guard, "guard", 6)?;
    let solution = scattering::solve_scattering_vector(n, k, guard)?;
    let mut rows = Vec::new();
    for a in 1..=n {
        for (doubled_x, p) in scattering::span_probabilities(&solution, a) {
            rows.push(vec![a as f64, doubled_x as f64 / 2.0, p]);
        }
    }
    csv_and_svg(out, dir, "mu_span", &["span_length", "span_center", "probability"], &rows, svg)?;
    sidecar(
        out,
        dir,
        "mu_span",
        serde_json::json!({
            "n": n, "k": k, "guard": guard,
            "interior_residual": solution.interior_residual,
            "exterior_residual": solution.exterior_residual,
            "lsqr_iterations": solution.iterations,
            "condition_estimate": solution.condition_estimate,
        }),
    )
}

fn glued_run(
    args: &GluedRunArgs,
    s: &Settings,
    dir: &Path,
    out: &mut Artifacts,
) -> Result<()> {
    let base_height = s.get(args.base_height, "N", 1)?;
    let total_height = s.get(args.total_height, "M", 3)?;
    let snake_len = s.get(args.snake_len, "n", 2 * base_height + 1)?;
    let k0 = s.get(args.k0, "k0", 1.5 * PI)?;
    let sigma = s.get(args.sigma, "sigma", 0.6)?;
    let default_x0 = -((total_height + base_height) as i64) / 2;
    let x0 = s.get(args.x0, "x0", default_x0)?;
    let t = s.get(args.t, "t", 2.5)?;
    let samples = s.get(args.samples, "samples", 200)?;
    let seed = s.get(args.seed, "seed", 1)?;
    let k_count = s.get(args.grid, "grid", 256)?;
    let config = GluedRunConfig {
        base_height,
        total_height,
        snake_len,
        packet: WavePacketSpec { x0, k0, sigma },
        time: t,
        samples,
        seed,
        grid: MomentumGrid::new(k_count)?,
        capacity: graph::DEFAULT_CAPACITY,
    };
    let outcome = run_algorithm(&config)?;
    let path = dir.join("glued_run.json");
    report::write_json(&path, &serde_json::to_value(&outcome).unwrap())?;
    out.add(path);
    sidecar(
        out,
        dir,
        "glued_run_config",
        serde_json::json!({
            "N": base_height, "M": total_height, "n": snake_len,
            "k0": k0, "sigma": sigma, "x0": x0, "t": t,
            "samples": samples, "seed": seed, "grid": k_count,
        }),
    )
}
