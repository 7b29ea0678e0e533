//! `gt` — command-line front end for the gt-core lattice toolkit.
//!
//! Every run writes its data files plus a `manifest.json` recording the full
//! resolved configuration and the library version.  Data files are
//! byte-stable: fixed 17-significant-digit decimal formatting, fixed row
//! order, and no timestamps outside the manifest.
//!
//! Exit codes: 0 success, 1 invalid argument / usage error, 2 numerical
//! failure.  The worker count for grid scans is taken from the `GT_WORKERS`
//! environment variable (the only environment input).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use gt_core::decompose::{
    bz_fourier_weights, nonbloch_weights, obc_mode_weights, skin_origin, WeightField,
};
use gt_core::dynamics::{default_site, delta_state, evolve, Propagator};
use gt_core::gbz::{gbz_curve, green_element, nhse_direction, GreenMethod};
use gt_core::model::ModelParams;
use gt_core::phases::{lyapunov_path_scan, phase_diagram, DiagramKind, LyapunovPath};
use gt_core::spectral::{band_structure, obc_spectrum, pbc_spectrum, BiorthogonalEigensystem};
use gt_core::GtError;

// ---------------------------------------------------------------------------
// Argument definitions
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "gt",
    version = gt_core::VERSION,
    about = "Non-Hermitian glide-time-symmetric double-SSH lattice toolkit",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Model and I/O options shared by every subcommand.  All values are strings
/// at parse time so that a config file can provide them and a flag can
/// override; `--t3`/`--t4` additionally accept `lo:hi` ranges for
/// `phase-diagram`.
#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Intra-cell hopping (default 1).
    #[arg(long)]
    t1: Option<String>,
    /// Inter-cell hopping (default 2).
    #[arg(long)]
    t2: Option<String>,
    /// Rightward rung coupling (for phase-diagram: a `lo:hi` range).
    #[arg(long)]
    t3: Option<String>,
    /// Leftward rung coupling (for phase-diagram: a `lo:hi` range).
    #[arg(long)]
    t4: Option<String>,
    /// Number of unit cells (4 sites each; default 40).
    #[arg(long)]
    cells: Option<String>,
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// OBC and/or PBC eigenvalue spectrum.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Which boundary condition: obc, pbc, or both.
        #[arg(long, default_value = "both")]
        boundary: String,
    },
    /// Bloch band structure over the Brillouin zone.
    Bands {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of k points.
        #[arg(long, default_value = "256")]
        nk: String,
    },
    /// Generalized Brillouin zone curve.
    Gbz {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Time evolution of a delta excitation.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Final time of the grid.
        #[arg(long, default_value = "60")]
        tmax: String,
        /// Time grid spec: `lin:N` or `log:N`.
        #[arg(long, default_value = "lin:200")]
        times: String,
        /// Initial excitation site (default: chain middle).
        #[arg(long)]
        site: Option<String>,
    },
    /// Mode-weight decomposition of an evolving state.
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        /// Coordinate axis: obc, gbz, or bz.
        #[arg(long, default_value = "obc")]
        axis: String,
        #[arg(long, default_value = "60")]
        tmax: String,
        #[arg(long, default_value = "lin:40")]
        times: String,
        #[arg(long)]
        site: Option<String>,
    },
    /// Classified (t3, t4) phase diagram.
    PhaseDiagram {
        #[command(flatten)]
        common: CommonArgs,
        /// Diagram kind: eigenmode or dynamic.
        #[arg(long, default_value = "eigenmode")]
        kind: String,
        /// Grid resolution per axis (>= 16).
        #[arg(long, default_value = "16")]
        res: String,
    },
    /// Lyapunov exponent vs direct growth fit along a parameter path.
    LyapunovScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Path 1 (t3 = 2 + m, t4 = 2) or 2 (t3 = 10, t4 = 2 + m).
        #[arg(long, default_value = "1")]
        path: String,
        #[arg(long, default_value = "33")]
        samples: String,
    },
    /// Green's function element G_ij(omega).
    Green {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        omega_re: String,
        #[arg(long, default_value = "0")]
        omega_im: String,
        /// Row site index i.
        #[arg(long)]
        row: String,
        /// Column site index j.
        #[arg(long)]
        col: String,
        /// Evaluation: contour, resolvent, or both.
        #[arg(long, default_value = "both")]
        method: String,
    },
}

// ---------------------------------------------------------------------------
// Configuration resolution
// ---------------------------------------------------------------------------

const CONFIG_KEYS: [&str; 6] = ["t1", "t2", "t3", "t4", "cells", "format"];

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, GtError> {
    let text = fs::read_to_string(path).map_err(|e| {
        GtError::InvalidArgument(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            GtError::InvalidArgument(format!(
                "config line {}: expected key=value, got `{line}`",
                lineno + 1
            ))
        })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(GtError::InvalidArgument(format!(
                "config line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_f64(key: &str, s: &str) -> Result<f64, GtError> {
    s.parse::<f64>()
        .map_err(|_| GtError::InvalidArgument(format!("{key}: `{s}` is not a number")))
}

fn parse_usize(key: &str, s: &str) -> Result<usize, GtError> {
    s.parse::<usize>()
        .map_err(|_| GtError::InvalidArgument(format!("{key}: `{s}` is not a non-negative integer")))
}

fn parse_range(key: &str, s: &str) -> Result<(f64, f64), GtError> {
    let (a, b) = s.split_once(':').ok_or_else(|| {
        GtError::InvalidArgument(format!("{key}: `{s}` is not a lo:hi range"))
    })?;
    let lo = parse_f64(key, a)?;
    let hi = parse_f64(key, b)?;
    if hi <= lo {
        return Err(GtError::InvalidArgument(format!("{key}: empty range `{s}`")));
    }
    Ok((lo, hi))
}

/// Flag value wins over file value wins over default.
fn resolve<'a>(
    flag: &'a Option<String>,
    file: &'a BTreeMap<String, String>,
    key: &str,
) -> Option<&'a str> {
    flag.as_deref().or_else(|| file.get(key).map(String::as_str))
}

struct Resolved {
    params: ModelParams,
    format: OutputFormat,
    out: PathBuf,
    file_values: BTreeMap<String, String>,
    flag_values: BTreeMap<String, String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

fn resolve_common(common: &CommonArgs, need_rungs: bool) -> Result<Resolved, GtError> {
    let file_values = match &common.config {
        Some(p) => parse_config_file(p)?,
        None => BTreeMap::new(),
    };
    let mut flag_values = BTreeMap::new();
    for (key, v) in [
        ("t1", &common.t1),
        ("t2", &common.t2),
        ("t3", &common.t3),
        ("t4", &common.t4),
        ("cells", &common.cells),
        ("format", &common.format),
    ] {
        if let Some(v) = v {
            flag_values.insert(key.to_string(), v.clone());
        }
    }
    let t1 = match resolve(&common.t1, &file_values, "t1") {
        Some(s) => parse_f64("t1", s)?,
        None => 1.0,
    };
    let t2 = match resolve(&common.t2, &file_values, "t2") {
        Some(s) => parse_f64("t2", s)?,
        None => 2.0,
    };
    // For phase-diagram the rung flags are ranges, so the ModelParams rungs
    // are placeholders (the base t1/t2/cells still matter there).
    let (t3, t4) = if need_rungs {
        let t3 = parse_f64(
            "t3",
            resolve(&common.t3, &file_values, "t3")
                .ok_or_else(|| GtError::InvalidArgument("missing required key t3".into()))?,
        )?;
        let t4 = parse_f64(
            "t4",
            resolve(&common.t4, &file_values, "t4")
                .ok_or_else(|| GtError::InvalidArgument("missing required key t4".into()))?,
        )?;
        (t3, t4)
    } else {
        (t1, t1)
    };
    let cells = match resolve(&common.cells, &file_values, "cells") {
        Some(s) => parse_usize("cells", s)?,
        None => 40,
    };
    let format = match resolve(&common.format, &file_values, "format") {
        Some("csv") | None => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(GtError::InvalidArgument(format!(
                "format: `{other}` is not csv or json"
            )))
        }
    };
    Ok(Resolved {
        params: ModelParams::new(t1, t2, t3, t4, cells)?,
        format,
        out: common.out.clone(),
        file_values,
        flag_values,
    })
}

// ---------------------------------------------------------------------------
// Output serialization
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum Cell {
    F(f64),
    I(i64),
    S(String),
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.16e}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => csv_quote(s),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::F(v) => serde_json::json!(v),
            Cell::I(v) => serde_json::json!(v),
            Cell::S(s) => serde_json::json!(s),
        }
    }
}

struct Table {
    name: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn write(&self, dir: &Path, format: OutputFormat) -> Result<PathBuf, GtError> {
        let io_err = |e: std::io::Error| GtError::InvalidArgument(format!("cannot write output: {e}"));
        match format {
            OutputFormat::Csv => {
                let path = dir.join(format!("{}.csv", self.name));
                let mut buf = String::from("# schema=1\n");
                buf.push_str(&self.columns.join(","));
                buf.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::to_csv).collect();
                    buf.push_str(&line.join(","));
                    buf.push('\n');
                }
                fs::write(&path, buf).map_err(io_err)?;
                Ok(path)
            }
            OutputFormat::Json => {
                let path = dir.join(format!("{}.json", self.name));
                let records: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (c, v) in self.columns.iter().zip(row.iter()) {
                            obj.insert((*c).to_string(), v.to_json());
                        }
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let doc = serde_json::json!({ "schema": 1, "records": records });
                fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).map_err(io_err)?;
                Ok(path)
            }
        }
    }
}

fn write_manifest(
    dir: &Path,
    command: &str,
    resolved: &Resolved,
    options: &BTreeMap<String, String>,
) -> Result<(), GtError> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let p = resolved.params;
    let doc = serde_json::json!({
        "schema": 1,
        "version": gt_core::VERSION,
        "command": command,
        "timestamp_unix": timestamp,
        "config_file_values": resolved.file_values,
        "flag_values": resolved.flag_values,
        "resolved": {
            "t1": p.t1,
            "t2": p.t2,
            "t3": p.t3,
            "t4": p.t4,
            "cells": p.n_cells,
            "format": resolved.format.name(),
            "options": options,
        },
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&doc).unwrap())
        .map_err(|e| GtError::InvalidArgument(format!("cannot write manifest: {e}")))
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

fn time_grid(tmax_s: &str, spec: &str) -> Result<Vec<f64>, GtError> {
    let tmax = parse_f64("tmax", tmax_s)?;
    if !(tmax > 0.0) {
        return Err(GtError::InvalidArgument("tmax must be positive".into()));
    }
    let (kind, n_s) = spec.split_once(':').ok_or_else(|| {
        GtError::InvalidArgument(format!("times: `{spec}` is not lin:N or log:N"))
    })?;
    let n = parse_usize("times", n_s)?;
    if n < 2 {
        return Err(GtError::InvalidArgument("times: need at least 2 points".into()));
    }
    match kind {
        "lin" => Ok((1..=n).map(|i| tmax * i as f64 / n as f64).collect()),
        "log" => {
            let lo = tmax * 1e-3;
            let ratio = (tmax / lo).ln();
            Ok((0..n)
                .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
                .collect())
        }
        other => Err(GtError::InvalidArgument(format!(
            "times: unknown grid kind `{other}` (use lin or log)"
        ))),
    }
}

fn resolve_site(p: &ModelParams, site: &Option<String>) -> Result<usize, GtError> {
    match site {
        Some(s) => {
            let i = parse_usize("site", s)?;
            if i >= p.site_count() {
                return Err(GtError::InvalidArgument(format!(
                    "site {i} out of range (chain has {} sites)",
                    p.site_count()
                )));
            }
            Ok(i)
        }
        None => Ok(default_site(p.n_cells)),
    }
}

fn weight_table(name: &'static str, field: &WeightField, times: &[f64]) -> Table {
    // Coordinate tags are serialized as generic coord_re/coord_im: the mode
    // index, the GBZ beta, or k + i*band depending on the axis.
    let mut rows = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        for (j, &c) in field.coordinates.iter().enumerate() {
            rows.push(vec![
                Cell::F(t),
                Cell::I(j as i64),
                Cell::F(c.re),
                Cell::F(c.im),
                Cell::F(field.weights[[i, j]].re),
                Cell::F(field.weights[[i, j]].im),
                Cell::I(field.flagged[j] as i64),
            ]);
        }
    }
    Table {
        name,
        columns: vec![
            "time", "index", "coord_re", "coord_im", "weight_re", "weight_im", "flagged",
        ],
        rows,
    }
}

fn run(cli: Cli) -> Result<(), GtError> {
    match cli.command {
        Command::Spectrum { common, boundary } => {
            let r = resolve_common(&common, true)?;
            let mut opts = BTreeMap::new();
            opts.insert("boundary".into(), boundary.clone());
            let mut rows = Vec::new();
            let mut add = |tag: &str, ev: Vec<C64>| {
                for (i, e) in ev.iter().enumerate() {
                    rows.push(vec![
                        Cell::S(tag.to_string()),
                        Cell::I(i as i64),
                        Cell::F(e.re),
                        Cell::F(e.im),
                    ]);
                }
            };
            match boundary.as_str() {
                "obc" => add("obc", obc_spectrum(&r.params)?.to_vec()),
                "pbc" => add("pbc", pbc_spectrum(&r.params)?.to_vec()),
                "both" => {
                    add("obc", obc_spectrum(&r.params)?.to_vec());
                    add("pbc", pbc_spectrum(&r.params)?.to_vec());
                }
                other => {
                    return Err(GtError::InvalidArgument(format!(
                        "boundary: `{other}` is not obc, pbc, or both"
                    )))
                }
            }
            emit(
                &r,
                "spectrum",
                &opts,
                vec![Table {
                    name: "spectrum",
                    columns: vec!["boundary", "index", "energy_re", "energy_im"],
                    rows,
                }],
            )
        }
        Command::Bands { common, nk } => {
            let r = resolve_common(&common, true)?;
            let nk_v = parse_usize("nk", &nk)?;
            let bs = band_structure(&r.params, nk_v)?;
            let mut rows = Vec::new();
            for (i, &k) in bs.ks.iter().enumerate() {
                for b in 0..4 {
                    let e = bs.energies[[i, b]];
                    rows.push(vec![
                        Cell::F(k),
                        Cell::I(b as i64),
                        Cell::F(e.re),
                        Cell::F(e.im),
                    ]);
                }
            }
            let mut opts = BTreeMap::new();
            opts.insert("nk".into(), nk);
            emit(
                &r,
                "bands",
                &opts,
                vec![Table {
                    name: "bands",
                    columns: vec!["k", "band", "energy_re", "energy_im"],
                    rows,
                }],
            )
        }
        Command::Gbz { common } => {
            let r = resolve_common(&common, true)?;
            let curve = gbz_curve(&r.params)?;
            let rows = curve
                .points
                .iter()
                .map(|pt| {
                    vec![
                        Cell::F(pt.beta.re),
                        Cell::F(pt.beta.im),
                        Cell::F(pt.energy.re),
                        Cell::F(pt.energy.im),
                        Cell::I(pt.source_mode as i64),
                    ]
                })
                .collect();
            emit(
                &r,
                "gbz",
                &BTreeMap::new(),
                vec![Table {
                    name: "gbz",
                    columns: vec!["beta_re", "beta_im", "energy_re", "energy_im", "source_mode"],
                    rows,
                }],
            )
        }
        Command::Evolve { common, tmax, times, site } => {
            let r = resolve_common(&common, true)?;
            let grid_times = time_grid(&tmax, &times)?;
            let site_v = resolve_site(&r.params, &site)?;
            let psi0 = delta_state(r.params.site_count(), site_v)?;
            let sys = BiorthogonalEigensystem::from_obc(&r.params)?;
            let grid = gt_core::dynamics::evolve_spectral_with(&sys, &psi0, &grid_times)?;
            let mut profile_rows = Vec::new();
            for (i, &t) in grid.times.iter().enumerate() {
                let prob = grid.probability(i);
                for (x, &w) in prob.iter().enumerate() {
                    profile_rows.push(vec![Cell::F(t), Cell::I(x as i64), Cell::F(w)]);
                }
            }
            let mut field = obc_mode_weights(&grid, &sys)?;
            field.normalize_per_instant();
            let mut opts = BTreeMap::new();
            opts.insert("tmax".into(), tmax);
            opts.insert("times".into(), times);
            opts.insert("site".into(), site_v.to_string());
            emit(
                &r,
                "evolve",
                &opts,
                vec![
                    Table {
                        name: "profile",
                        columns: vec!["time", "site", "prob"],
                        rows: profile_rows,
                    },
                    weight_table("weights_obc", &field, &grid.times),
                ],
            )
        }
        Command::Decompose { common, axis, tmax, times, site } => {
            let r = resolve_common(&common, true)?;
            let grid_times = time_grid(&tmax, &times)?;
            let site_v = resolve_site(&r.params, &site)?;
            let psi0 = delta_state(r.params.site_count(), site_v)?;
            let grid = evolve(&r.params, &psi0, &grid_times, Propagator::Spectral)?;
            let (name, mut field): (&'static str, WeightField) = match axis.as_str() {
                "obc" => {
                    let sys = BiorthogonalEigensystem::from_obc(&r.params)?;
                    ("weights_obc", obc_mode_weights(&grid, &sys)?)
                }
                "gbz" => {
                    let curve = gbz_curve(&r.params)?;
                    let dir = nhse_direction(&r.params, &curve)?;
                    let origin = skin_origin(&r.params, dir);
                    ("weights_gbz", nonbloch_weights(&r.params, &grid, &curve, origin)?)
                }
                "bz" => {
                    let bs = band_structure(&r.params, r.params.n_cells)?;
                    ("weights_bz", bz_fourier_weights(&grid, &bs)?)
                }
                other => {
                    return Err(GtError::InvalidArgument(format!(
                        "axis: `{other}` is not obc, gbz, or bz"
                    )))
                }
            };
            field.normalize_per_instant();
            let mut opts = BTreeMap::new();
            opts.insert("axis".into(), axis);
            opts.insert("tmax".into(), tmax);
            opts.insert("times".into(), times);
            opts.insert("site".into(), site_v.to_string());
            emit(&r, "decompose", &opts, vec![weight_table(name, &field, &grid.times)])
        }
        Command::PhaseDiagram { common, kind, res } => {
            let r = resolve_common(&common, false)?;
            let t3_range = parse_range(
                "t3",
                resolve(&common.t3, &r.file_values, "t3")
                    .ok_or_else(|| GtError::InvalidArgument("missing required key t3".into()))?,
            )?;
            let t4_range = parse_range(
                "t4",
                resolve(&common.t4, &r.file_values, "t4")
                    .ok_or_else(|| GtError::InvalidArgument("missing required key t4".into()))?,
            )?;
            let res_v = parse_usize("res", &res)?;
            let kind_v = match kind.as_str() {
                "eigenmode" => DiagramKind::Eigenmode,
                "dynamic" => DiagramKind::Dynamic,
                other => {
                    return Err(GtError::InvalidArgument(format!(
                        "kind: `{other}` is not eigenmode or dynamic"
                    )))
                }
            };
            let d = phase_diagram(kind_v, t3_range, t4_range, res_v, &r.params)?;
            let grid_rows = d
                .points
                .iter()
                .map(|gp| {
                    let label = match &gp.label {
                        Ok(l) => l.clone(),
                        Err(e) => format!("error: {e}"),
                    };
                    vec![
                        Cell::F(gp.t3),
                        Cell::F(gp.t4),
                        Cell::S(label),
                        Cell::S(gp.direction.clone()),
                        Cell::F(gp.frequency),
                    ]
                })
                .collect();
            let boundary_rows = d
                .boundaries
                .iter()
                .map(|&(t3, t4)| vec![Cell::F(t3), Cell::F(t4)])
                .collect();
            let mut opts = BTreeMap::new();
            opts.insert("kind".into(), kind);
            opts.insert("res".into(), res);
            emit(
                &r,
                "phase-diagram",
                &opts,
                vec![
                    Table {
                        name: "phase_grid",
                        columns: vec!["t3", "t4", "class", "direction", "freq"],
                        rows: grid_rows,
                    },
                    Table {
                        name: "boundaries",
                        columns: vec!["t3", "t4"],
                        rows: boundary_rows,
                    },
                ],
            )
        }
        Command::LyapunovScan { common, path, samples } => {
            let r = resolve_common(&common, false)?;
            let path_v = match path.as_str() {
                "1" => LyapunovPath::Path1,
                "2" => LyapunovPath::Path2,
                other => {
                    return Err(GtError::InvalidArgument(format!(
                        "path: `{other}` is not 1 or 2"
                    )))
                }
            };
            let n = parse_usize("samples", &samples)?;
            let scan = lyapunov_path_scan(path_v, n)?;
            let rows = scan
                .iter()
                .map(|s| {
                    let (t3, t4) = match path_v {
                        LyapunovPath::Path1 => (2.0 + s.m, 2.0),
                        LyapunovPath::Path2 => (10.0, 2.0 + s.m),
                    };
                    let opt = |v: &Result<f64, String>| match v {
                        Ok(x) => Cell::F(*x),
                        Err(_) => Cell::S(String::new()),
                    };
                    vec![
                        Cell::F(s.m),
                        Cell::F(t3),
                        Cell::F(t4),
                        opt(&s.lambda),
                        opt(&s.growth_fit),
                    ]
                })
                .collect();
            let mut opts = BTreeMap::new();
            opts.insert("path".into(), path);
            opts.insert("samples".into(), samples);
            emit(
                &r,
                "lyapunov-scan",
                &opts,
                vec![Table {
                    name: "lyapunov",
                    columns: vec!["m", "t3", "t4", "lambda", "growth_fit"],
                    rows,
                }],
            )
        }
        Command::Green { common, omega_re, omega_im, row, col, method } => {
            let r = resolve_common(&common, true)?;
            let omega = C64::new(parse_f64("omega-re", &omega_re)?, parse_f64("omega-im", &omega_im)?);
            let i = parse_usize("row", &row)?;
            let j = parse_usize("col", &col)?;
            let methods: Vec<(&str, GreenMethod)> = match method.as_str() {
                "contour" => vec![("contour", GreenMethod::Contour)],
                "resolvent" => vec![("resolvent", GreenMethod::Resolvent)],
                "both" => vec![
                    ("contour", GreenMethod::Contour),
                    ("resolvent", GreenMethod::Resolvent),
                ],
                other => {
                    return Err(GtError::InvalidArgument(format!(
                        "method: `{other}` is not contour, resolvent, or both"
                    )))
                }
            };
            let mut rows = Vec::new();
            for (tag, m) in methods {
                let g = green_element(&r.params, omega, i, j, r.params.n_cells, m)?;
                rows.push(vec![
                    Cell::S(tag.to_string()),
                    Cell::F(omega.re),
                    Cell::F(omega.im),
                    Cell::I(i as i64),
                    Cell::I(j as i64),
                    Cell::F(g.re),
                    Cell::F(g.im),
                ]);
            }
            let mut opts = BTreeMap::new();
            opts.insert("method".into(), method);
            opts.insert("omega_re".into(), omega_re);
            opts.insert("omega_im".into(), omega_im);
            opts.insert("row".into(), row);
            opts.insert("col".into(), col);
            emit(
                &r,
                "green",
                &opts,
                vec![Table {
                    name: "green",
                    columns: vec!["method", "omega_re", "omega_im", "i", "j", "g_re", "g_im"],
                    rows,
                }],
            )
        }
    }
}

fn emit(
    resolved: &Resolved,
    command: &str,
    options: &BTreeMap<String, String>,
    tables: Vec<Table>,
) -> Result<(), GtError> {
    fs::create_dir_all(&resolved.out)
        .map_err(|e| GtError::InvalidArgument(format!("cannot create output directory: {e}")))?;
    for t in &tables {
        let path = t.write(&resolved.out, resolved.format)?;
        println!("wrote {}", path.display());
    }
    write_manifest(&resolved.out, command, resolved, options)?;
    println!("wrote {}", resolved.out.join("manifest.json").display());
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("GT_WORKERS") {
        match n.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("{{\"error_kind\":\"invalid-argument\",\"message\":\"GT_WORKERS must be a positive integer\"}}");
                return ExitCode::from(1);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let _ = writeln!(std::io::stderr(), "{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match &e {
                GtError::InvalidArgument(_) => "invalid-argument",
                GtError::ClassificationAmbiguous(_) => "classification-ambiguous",
                GtError::NumericalFailure(_) | GtError::Linalg(_) => "numerical-failure",
            };
            let record = serde_json::json!({ "error_kind": kind, "message": e.to_string() });
            eprintln!("{record}");
            match &e {
                GtError::NumericalFailure(_) | GtError::Linalg(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
