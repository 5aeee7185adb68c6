//! Implementations of the CLI subcommands.

use atomfringe::bounds::{self, Measure};
use atomfringe::photon::{self, OmegaMode};
use atomfringe::states::StateRecord;
use atomfringe::three_atom::{self, TriangleGeometry};
use atomfringe::tomography::{self, FringeSample, FringeSampleSet, Normalization, TorusSample};
use atomfringe::two_atom::{self, VisibilityMode};
use atomfringe::{Error, TwoQubitBlochState, WLikeState};
use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Error wrapper deciding the process exit code: 2 for input problems, 1 for
/// numerical failures.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidState(_) | Error::Domain(_) | Error::InsufficientData(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io error: {e}"))
    }
}

type CliResult = Result<(), CliError>;

/// Summary-record output format; grid datasets are always CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Input(format!("unknown format '{other}'"))),
        }
    }
}

fn config_hash<T: Serialize>(tag: &str, cfg: &T) -> String {
    let body = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(tag.as_bytes());
    hasher.update(body.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::new();
    for b in digest.iter().take(6) {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

fn write_csv(path: &Path, hash: &str, header: &str, rows: &[String]) -> CliResult {
    let mut out = String::with_capacity(rows.len() * 48 + 64);
    let _ = writeln!(out, "# config={hash}");
    let _ = writeln!(out, "{header}");
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn render_csv_value(v: &serde_json::Value) -> String {
    let raw = match v {
        serde_json::Value::Array(items) => {
            items.iter().map(render_csv_value).collect::<Vec<_>>().join(";")
        }
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains(',') || raw.contains('"') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Write a flat summary record as `<name>.json` or a one-row `<name>.csv`.
fn write_summary<T: Serialize>(
    out: &Path,
    name: &str,
    format: &OutputFormat,
    hash: &str,
    value: &T,
) -> CliResult {
    match format {
        OutputFormat::Json => write_json(&out.join(format!("{name}.json")), value),
        OutputFormat::Csv => {
            let v = serde_json::to_value(value).expect("serializable value");
            let obj = v.as_object().expect("summary records are objects");
            let header: Vec<&str> = obj.keys().map(String::as_str).collect();
            let row: Vec<String> = obj.values().map(render_csv_value).collect();
            write_csv(
                &out.join(format!("{name}.csv")),
                hash,
                &header.join(","),
                &[row.join(",")],
            )
        }
    }
}

fn ensure_out(dir: &Path) -> CliResult {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn load_state(path: &Path) -> Result<StateRecord, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read state file {}: {e}", path.display())))?;
    StateRecord::parse(&text).map_err(|e| CliError::Input(e.to_string()))
}

fn parse_khat(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("bad direction '{s}': {e}")))?;
    if parts.len() != 3 {
        return Err(CliError::Input(format!("direction '{s}' needs three components")));
    }
    let n = (parts[0].powi(2) + parts[1].powi(2) + parts[2].powi(2)).sqrt();
    if n < 1e-12 {
        return Err(CliError::Input("zero direction vector".into()));
    }
    Ok([parts[0] / n, parts[1] / n, parts[2] / n])
}

fn gnuplot_script(path: &Path, body: &str) -> CliResult {
    fs::write(path, body)?;
    Ok(())
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// JSON state file ({"type":"bloch",...} or {"type":"wlike",...}).
    #[arg(long)]
    pub state: PathBuf,
    /// Dimensionless separation k0 r (pair distance or triangle side).
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub u: f64,
    /// Detuning grid half-width in linewidths.
    #[arg(long, default_value_t = 5.0)]
    pub omega_span: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Emission direction for the three-atom omega spectrum (unit 3-vector).
    #[arg(long, default_value = "0,0,1")]
    pub khat: String,
}

pub fn run_spectrum(out: &Path, args: &SpectrumArgs) -> CliResult {
    ensure_out(out)?;
    let record = load_state(&args.state)?;
    let hash = config_hash("spectrum", args);
    let n = args.grid.max(2);
    match record {
        StateRecord::Bloch { .. } => {
            let state: TwoQubitBlochState = record.try_into()?;
            let mut rows = Vec::new();
            for i in 0..n {
                let chi = -std::f64::consts::PI
                    + std::f64::consts::TAU * i as f64 / (n - 1) as f64;
                for j in 0..n {
                    let omega = -args.omega_span
                        + 2.0 * args.omega_span * j as f64 / (n - 1) as f64;
                    let intensity =
                        two_atom::emission_spectrum_two(&state, args.u, omega, chi)?;
                    let (bp, bm) = two_atom::weights_b(&state, args.u, chi)?;
                    rows.push(format!("{chi},{omega},{intensity},{bp},{bm}"));
                }
            }
            write_csv(
                &out.join("spectrum.csv"),
                &hash,
                "chi,omega,intensity,b_plus,b_minus",
                &rows,
            )?;
            gnuplot_script(
                &out.join("spectrum.gnuplot"),
                "set datafile separator ','\nset xlabel 'chi'\nset ylabel 'omega'\n\
                 set pm3d map\nsplot 'spectrum.csv' using 1:2:3 with pm3d notitle\n",
            )?;
        }
        StateRecord::Wlike { .. } => {
            let state: WLikeState = record.try_into()?;
            let geom = TriangleGeometry::new(args.u)?;
            let khat = parse_khat(&args.khat)?;
            let mut rows = Vec::new();
            for j in 0..n {
                let omega =
                    -args.omega_span + 2.0 * args.omega_span * j as f64 / (n - 1) as f64;
                let intensity =
                    three_atom::emission_spectrum_three(&state, &geom, omega, khat)?;
                let (dp, dm) = three_atom::weights_d(&state, &geom, khat)?;
                rows.push(format!("{omega},{intensity},{dp},{dm}"));
            }
            write_csv(
                &out.join("spectrum.csv"),
                &hash,
                "omega,intensity,d_plus,d_minus",
                &rows,
            )?;
            // far-field pattern over the phase torus
            let mut rows = Vec::new();
            for i in 0..n {
                let t1 = -std::f64::consts::PI
                    + std::f64::consts::TAU * i as f64 / (n - 1) as f64;
                for j in 0..n {
                    let t2 = -std::f64::consts::PI
                        + std::f64::consts::TAU * j as f64 / (n - 1) as f64;
                    let i3 = three_atom::farfield_intensity(&state, t1, t2);
                    rows.push(format!("{t1},{t2},{i3}"));
                }
            }
            write_csv(&out.join("farfield.csv"), &hash, "theta1,theta2,intensity", &rows)?;
            gnuplot_script(
                &out.join("spectrum.gnuplot"),
                "set datafile separator ','\nset xlabel 'omega'\nset ylabel 'intensity'\n\
                 plot 'spectrum.csv' using 1:2 with lines notitle\n",
            )?;
        }
    }
    Ok(())
}

// -------------------------------------------------------------- visibility

#[derive(Debug, Args, Serialize)]
pub struct VisibilityArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Pair separation (two-atom states only).
    #[arg(long, default_value_t = 1e4)]
    pub u: f64,
    /// Detuning of the filtered photon (two-atom states only).
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
    /// formal: unconstrained fringe extrema; physical: reachable phases only.
    #[arg(long, default_value = "formal")]
    pub mode: String,
    /// Brute-force grid size for the cross-check.
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Serialize)]
struct VisibilityReport {
    config: String,
    visibility: f64,
    brute_force: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    concurrence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_angles: Option<[f64; 3]>,
}

pub fn run_visibility(out: &Path, format: &OutputFormat, args: &VisibilityArgs) -> CliResult {
    ensure_out(out)?;
    let record = load_state(&args.state)?;
    let hash = config_hash("visibility", args);
    let mode = match args.mode.as_str() {
        "formal" => VisibilityMode::Formal,
        "physical" => VisibilityMode::Physical,
        other => return Err(CliError::Input(format!("unknown mode '{other}'"))),
    };
    let report = match record {
        StateRecord::Bloch { .. } => {
            let state: TwoQubitBlochState = record.try_into()?;
            let v = two_atom::visibility_two(&state, args.u, args.omega, mode)?;
            let b = two_atom::visibility_two_bruteforce(
                &state, args.u, args.omega, args.grid, mode,
            )?;
            let p = two_atom::fringe_params_two(&state, args.u, args.omega)?;
            VisibilityReport {
                config: hash,
                visibility: v,
                brute_force: b,
                concurrence: Some(state.s() * state.theta().sin()),
                theta0: Some(p.theta0),
                i_max: None,
                i_min: None,
                min_angles: None,
            }
        }
        StateRecord::Wlike { .. } => {
            let state: WLikeState = record.try_into()?;
            let v = three_atom::visibility_three(&state);
            let b = three_atom::visibility_three_bruteforce(&state, args.grid.max(256))?;
            let e = three_atom::fringe_extrema_three(&state)?;
            VisibilityReport {
                config: hash,
                visibility: v,
                brute_force: b,
                concurrence: None,
                theta0: None,
                i_max: Some(e.i_max),
                i_min: Some(e.i_min),
                min_angles: Some(e.min_angles),
            }
        }
    };
    write_summary(out, "visibility", format, &report.config, &report)?;
    println!("visibility: {}", report.visibility);
    Ok(())
}

// ---------------------------------------------------------- deviation scan

#[derive(Debug, Args, Serialize)]
pub struct DeviationScanArgs {
    /// Comma-separated purities.
    #[arg(long, default_value = "0.1,0.5,1.0")]
    pub s_list: String,
    #[arg(long, default_value_t = 0.1)]
    pub u_min: f64,
    #[arg(long, default_value_t = 18.85)]
    pub u_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Coarse angular grid per axis for the state-space maximization.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
}

pub fn run_deviation_scan(out: &Path, args: &DeviationScanArgs) -> CliResult {
    ensure_out(out)?;
    if args.step <= 0.0 {
        return Err(CliError::Input(format!("step must be positive, got {}", args.step)));
    }
    if args.u_min <= 0.0 || args.u_max <= args.u_min {
        return Err(CliError::Input("need 0 < u_min < u_max".into()));
    }
    let s_values: Vec<f64> = args
        .s_list
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("bad s list: {e}")))?;
    let hash = config_hash("deviation-scan", args);
    let cfg = two_atom::DeviationConfig { coarse: args.grid, ..Default::default() };
    let mut rows = Vec::new();
    let n_steps = ((args.u_max - args.u_min) / args.step).round() as usize;
    for i in 0..=n_steps {
        let u = args.u_min + i as f64 * args.step;
        let s0 = two_atom::s0_deviation(u);
        for &s in &s_values {
            let d = two_atom::deviation_max(s, u, 0.0, cfg)?;
            rows.push(format!(
                "{u},{s},{},{},{},{s0}",
                d.max_dev, d.theta_star, d.phi_star
            ));
        }
    }
    write_csv(
        &out.join("deviation.csv"),
        &hash,
        "u,s,max_dev,theta_star,phi_star,s0_analytic",
        &rows,
    )?;
    gnuplot_script(
        &out.join("deviation.gnuplot"),
        "set datafile separator ','\nset xlabel 'u = k0 r'\nset ylabel 'max |V-C|'\n\
         plot 'deviation.csv' using 1:3 with points pt 7 ps 0.3 notitle, \
         '' using 1:6 with lines lc 'black' title 's=0 analytic'\n",
    )?;
    Ok(())
}

// ------------------------------------------------------------------ bounds

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 0.02)]
    pub v_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v_max: f64,
    /// Number of visibility grid points.
    #[arg(long, default_value_t = 99)]
    pub grid: usize,
    /// Scatter samples per visibility gridline (0 disables the overlay).
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

pub fn run_bounds(out: &Path, args: &BoundsArgs) -> CliResult {
    ensure_out(out)?;
    if !(0.0..=1.0).contains(&args.v_min) || !(0.0..=1.0).contains(&args.v_max)
        || args.v_min > args.v_max
    {
        return Err(CliError::Input("need 0 <= v_min <= v_max <= 1".into()));
    }
    let hash = config_hash("bounds", args);
    let n = args.grid.max(2);
    for measure in Measure::all() {
        let mut rows = Vec::new();
        let mut scatter = Vec::new();
        for i in 0..n {
            let v = args.v_min + (args.v_max - args.v_min) * i as f64 / (n - 1) as f64;
            if v <= 0.0 {
                eprintln!("warning: skipping V = 0 gridline (degenerate family)");
                continue;
            }
            let band = bounds::bounds_for(measure, v)?;
            rows.push(format!(
                "{v},{},{},{},{}",
                band.lower, band.upper, band.lower_closed, band.upper_closed
            ));
            if args.samples > 0 && v < 1.0 {
                let states = bounds::sample_states_at_visibility(v, args.samples, args.seed)?;
                for st in states {
                    scatter.push(format!("{v},{}", measure.evaluate(&st)));
                }
            }
        }
        if args.samples > 0 && args.v_max >= 1.0 {
            let states = bounds::sample_states_at_visibility(1.0, args.samples * 4, args.seed)?;
            for st in states {
                scatter.push(format!("1,{}", measure.evaluate(&st)));
            }
        }
        let name = measure.name();
        write_csv(
            &out.join(format!("bounds_{name}.csv")),
            &hash,
            "v,lower,upper,lower_closed,upper_closed",
            &rows,
        )?;
        if args.samples > 0 {
            write_csv(
                &out.join(format!("scatter_{name}.csv")),
                &hash,
                "v,value",
                &scatter,
            )?;
        }
    }
    gnuplot_script(
        &out.join("bounds.gnuplot"),
        "set datafile separator ','\nset xlabel 'visibility'\nset key left top\n\
         plot for [m in 'mixedness geometric negativity_max three_pi'] \
         'bounds_'.m.'.csv' using 1:2:3 with filledcurves fs transparent solid 0.2 title m, \
         for [m in 'mixedness geometric negativity_max three_pi'] \
         'scatter_'.m.'.csv' using 1:2 with dots notitle\n",
    )?;
    Ok(())
}

// -------------------------------------------------------------- tomography

#[derive(Debug, Args, Serialize)]
pub struct TomographyArgs {
    /// CSV of measured samples (two-atom: chi,omega,intensity; three-atom:
    /// theta1,theta2,intensity). Mutually exclusive with --simulate.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// two | three (kind of the input sample file).
    #[arg(long, default_value = "two")]
    pub kind: String,
    /// Simulate fringe data from --state instead of reading --input.
    #[arg(long, default_value_t = false)]
    pub simulate: bool,
    /// State file used with --simulate.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub u: f64,
    /// Photon count for simulated data; 0 means noiseless model samples.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Reconstruction scheme for two-atom data: exact | firstorder.
    #[arg(long, default_value = "exact")]
    pub scheme: String,
    /// Measured pattern shift for the first-order scheme (defaults to the
    /// model value of the simulated state).
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Histogram bins when reconstructing from sampled photons.
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
}

#[derive(Serialize)]
struct TomographyReport {
    config: String,
    state: StateRecord,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_combination: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degenerate_f: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projected: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditioning_warning: Option<bool>,
}

fn read_samples_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue; // header
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Input(format!("bad csv line '{line}': {e}")))?;
        rows.push(vals);
    }
    Ok(rows)
}

pub fn run_tomography(out: &Path, format: &OutputFormat, args: &TomographyArgs) -> CliResult {
    ensure_out(out)?;
    let hash = config_hash("tomography", args);
    match args.kind.as_str() {
        "two" => run_tomography_two(out, format, args, hash),
        "three" => run_tomography_three(out, format, args, hash),
        other => Err(CliError::Input(format!("unknown kind '{other}'"))),
    }
}

fn canonical_two_atom_points() -> Vec<(f64, f64)> {
    use std::f64::consts::{FRAC_PI_2, PI};
    vec![
        (0.0, 0.0),
        (PI, 0.0),
        (FRAC_PI_2, 0.0),
        (-FRAC_PI_2, 0.0),
        (1.0, 0.0),
        (2.2, 0.0),
        (-2.6, 0.0),
    ]
}

fn run_tomography_two(out: &Path, format: &OutputFormat, args: &TomographyArgs, hash: String) -> CliResult {
    let (set, truth): (FringeSampleSet, Option<TwoQubitBlochState>) = if args.simulate {
        let state_path = args
            .state
            .as_ref()
            .ok_or_else(|| CliError::Input("--simulate needs --state".into()))?;
        let state: TwoQubitBlochState = load_state(state_path)?.try_into()?;
        if args.n == 0 {
            (
                tomography::simulate_fringe_samples(
                    &state,
                    args.u,
                    &canonical_two_atom_points(),
                    1.0,
                )?,
                Some(state),
            )
        } else {
            let photons =
                photon::sample_photons_two(&state, args.u, args.n, args.seed, OmegaMode::Filtered)?;
            let hist = photon::histogram_two(&photons, args.u, args.bins)?;
            let entries: Vec<FringeSample> = (0..hist.counts.len())
                .filter(|&i| hist.support[i] > 0.0)
                .map(|i| {
                    let chi = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
                    FringeSample {
                        chi,
                        omega: 0.0,
                        intensity: hist.intensity[i],
                        weight: hist.support[i],
                    }
                })
                .collect();
            (
                FringeSampleSet { entries, u: args.u, normalization: Normalization::ShapeOnly },
                Some(state),
            )
        }
    } else {
        let input = args
            .input
            .as_ref()
            .ok_or_else(|| CliError::Input("need --input or --simulate".into()))?;
        let rows = read_samples_csv(input)?;
        let entries: Vec<FringeSample> = rows
            .iter()
            .map(|r| {
                if r.len() < 3 {
                    Err(CliError::Input("two-atom rows need chi,omega,intensity".into()))
                } else {
                    Ok(FringeSample::new(r[0], r[1], r[2]))
                }
            })
            .collect::<Result<_, _>>()?;
        (
            FringeSampleSet { entries, u: args.u, normalization: Normalization::ShapeOnly },
            None,
        )
    };

    let report = match args.scheme.as_str() {
        "exact" => {
            let rec = tomography::tomography_two_exact(&set)?;
            TomographyReport {
                config: hash,
                state: rec.state.into(),
                residual: rec.residual,
                w_combination: Some(rec.w),
                scale: Some(rec.scale),
                degenerate_f: None,
                projected: Some(rec.projected),
                conditioning_warning: None,
            }
        }
        "firstorder" => {
            let theta0 = match (args.theta0, &truth) {
                (Some(t), _) => t,
                (None, Some(state)) => tomography::exact_theta0(state, args.u)?,
                (None, None) => {
                    return Err(CliError::Input(
                        "--scheme firstorder needs --theta0 with measured data".into(),
                    ))
                }
            };
            let rec = tomography::tomography_two_firstorder(&set, theta0, args.u)?;
            TomographyReport {
                config: hash,
                state: rec.state.into(),
                residual: rec.truncation_scale,
                w_combination: Some(rec.w),
                scale: None,
                degenerate_f: Some(rec.degenerate_f),
                projected: None,
                conditioning_warning: None,
            }
        }
        other => return Err(CliError::Input(format!("unknown scheme '{other}'"))),
    };
    write_summary(out, "reconstruction", format, &report.config, &report)?;
    println!("reconstructed: {}", report.state.to_json());
    Ok(())
}

fn run_tomography_three(out: &Path, format: &OutputFormat, args: &TomographyArgs, hash: String) -> CliResult {
    let samples: Vec<TorusSample> = if args.simulate {
        let state_path = args
            .state
            .as_ref()
            .ok_or_else(|| CliError::Input("--simulate needs --state".into()))?;
        let state: WLikeState = load_state(state_path)?.try_into()?;
        let mut design = tomography::default_torus_design();
        design.extend_from_slice(&[
            (std::f64::consts::FRAC_PI_2, 0.0),
            (0.0, std::f64::consts::FRAC_PI_2),
            (std::f64::consts::PI, std::f64::consts::PI),
        ]);
        tomography::simulate_torus_samples(&state, &design, 1.0)
    } else {
        let input = args
            .input
            .as_ref()
            .ok_or_else(|| CliError::Input("need --input or --simulate".into()))?;
        read_samples_csv(input)?
            .iter()
            .map(|r| {
                if r.len() < 3 {
                    Err(CliError::Input("three-atom rows need theta1,theta2,intensity".into()))
                } else {
                    Ok(TorusSample::new(r[0], r[1], r[2]))
                }
            })
            .collect::<Result<_, _>>()?
    };
    let rec = tomography::tomography_three(&samples, Default::default())?;
    let report = TomographyReport {
        config: hash,
        state: rec.state.into(),
        residual: rec.residual,
        w_combination: None,
        scale: Some(rec.scale),
        degenerate_f: None,
        projected: None,
        conditioning_warning: Some(rec.conditioning_warning),
    };
    write_summary(out, "reconstruction", format, &report.config, &report)?;
    println!("reconstructed: {}", report.state.to_json());
    Ok(())
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub u: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// filtered | spectral photon frequencies.
    #[arg(long, default_value = "filtered")]
    pub omega_mode: String,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// formal | physical extremization for the visibility estimate.
    #[arg(long, default_value = "formal")]
    pub mode: String,
}

#[derive(Serialize)]
struct SimulateReport {
    config: String,
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    visibility_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic_visibility: Option<f64>,
}

pub fn run_simulate(out: &Path, format: &OutputFormat, args: &SimulateArgs) -> CliResult {
    ensure_out(out)?;
    let record = load_state(&args.state)?;
    let hash = config_hash("simulate", args);
    let mode = match args.omega_mode.as_str() {
        "filtered" => OmegaMode::Filtered,
        "spectral" => OmegaMode::Spectral,
        other => return Err(CliError::Input(format!("unknown omega mode '{other}'"))),
    };
    let (samples, report) = match record {
        StateRecord::Bloch { .. } => {
            let state: TwoQubitBlochState = record.try_into()?;
            let samples = photon::sample_photons_two(&state, args.u, args.n, args.seed, mode)?;
            let (est, analytic) = if args.n > 0 {
                let hist = photon::histogram_two(&samples, args.u, args.bins)?;
                let mut rows = Vec::new();
                for i in 0..hist.counts.len() {
                    rows.push(format!(
                        "{},{},{},{},{}",
                        hist.edges[i],
                        hist.edges[i + 1],
                        hist.counts[i],
                        hist.intensity[i],
                        hist.stderr[i]
                    ));
                }
                write_csv(
                    &out.join("histogram.csv"),
                    &hash,
                    "bin_lo,bin_hi,count,intensity,stderr",
                    &rows,
                )?;
                let est = photon::estimate_visibility(&hist, args.seed ^ 0x626f_6f74)?;
                let vmode = match args.mode.as_str() {
                    "formal" => VisibilityMode::Formal,
                    "physical" => VisibilityMode::Physical,
                    other => return Err(CliError::Input(format!("unknown mode '{other}'"))),
                };
                let analytic = if mode == OmegaMode::Filtered {
                    Some(two_atom::visibility_two(&state, args.u, 0.0, vmode)?)
                } else {
                    None
                };
                (Some(est), analytic)
            } else {
                (None, None)
            };
            let report = SimulateReport {
                config: hash.clone(),
                n: args.n,
                seed: args.seed,
                visibility_estimate: est.map(|e| e.visibility),
                sigma: est.map(|e| e.sigma),
                analytic_visibility: analytic,
            };
            (samples, report)
        }
        StateRecord::Wlike { .. } => {
            let state: WLikeState = record.try_into()?;
            let geom = TriangleGeometry::new(args.u)?;
            let samples =
                photon::sample_photons_three(&state, &geom, args.n, args.seed, mode)?;
            let report = SimulateReport {
                config: hash.clone(),
                n: args.n,
                seed: args.seed,
                visibility_estimate: None,
                sigma: None,
                analytic_visibility: Some(three_atom::visibility_three(&state)),
            };
            (samples, report)
        }
    };
    let rows: Vec<String> = samples
        .iter()
        .map(|s| {
            format!("{},{},{},{}", s.omega, s.direction[0], s.direction[1], s.direction[2])
        })
        .collect();
    write_csv(&out.join("samples.csv"), &hash, "omega,dx,dy,dz", &rows)?;
    write_summary(out, "simulate", format, &hash, &report)?;
    Ok(())
}
