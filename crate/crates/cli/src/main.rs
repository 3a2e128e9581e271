//! `nru` — command-line laboratory for noise-resolution uncertainty.
//!
//! Every subcommand is a reproducible run: the resolved configuration
//! (seed included) is echoed into the CSV/JSON output, so re-running the
//! printed configuration reproduces the bytes.  Exit codes: `0` success,
//! `1` a verified quantity violates its bound beyond tolerance, `2` usage
//! or file-format errors.
mod output;
mod spec;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use nru_core::detector::{
    analyze_stack, read_csv_frame, read_nru1, simulate_frames, write_nru1, ExperimentConfig,
    FrameStack, ResolutionConvention,
};
use nru_core::functionals::{cd_constant, cd_tilde, noise_resolution_functional};
use nru_core::heisenberg::{band_limited_plane_wave, extended_heisenberg, HeisenbergReport};
use nru_core::modes::ModeSpec;
use nru_core::photon::{
    intensity_variance, noise_resolution_product, p_representation_variance, vacuum_variance,
    FieldUnits, GammaClass, NumberVarianceReading, PhotonState, UncertaintyReport,
};
use nru_core::{Error, Result};

use output::{fmt, Format, Report};
use spec::{parse_density, parse_mode, parse_psf, parse_state, parse_usize_list, DensitySpec};

#[derive(Parser)]
#[command(
    name = "nru",
    version,
    about = "Noise-resolution uncertainty laboratory: inequality checks, photon-state reports, and detector experiments"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension constants C_d, C̃_d, and the information ceiling 1/C_d.
    Constants,
    /// Evaluate the noise-resolution functional of a density against C̃_d.
    Verify {
        /// Density spec: epanechnikov[:radius=..], gaussian[:sigma=..],
        /// uniform-ball[:radius=..], mode:<mode spec>, or @grid.json.
        #[arg(long)]
        density: String,
        /// Dimension (1–3); ignored for @grid.json densities.
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Samples per axis (defaults: 256 / 192 / 96 for d = 1 / 2 / 3).
        #[arg(long)]
        samples: Option<usize>,
        /// Grid half-extent (default: fitted to the density).
        #[arg(long)]
        extent: Option<f64>,
        /// Allowed relative shortfall before exit code 1.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Uncertainty-product report for a photon state on a mode.
    State {
        /// State spec: fock[:n=..], vacuum, coherent[:alpha_sq=..],
        /// generic:mean=..,var=.., or @state.json.
        #[arg(long)]
        state: String,
        /// Mode spec: plane-wave[:side=..], gaussian[:sigma=..],
        /// epanechnikov[:radius=..], or @mode.json.
        #[arg(long)]
        mode: String,
        /// Re-sample the mode onto its default grid and report through the
        /// tabulated path instead of the closed forms.
        #[arg(long)]
        grid: bool,
        /// Include the quasi-probability shortcut columns.
        #[arg(long)]
        paradox: bool,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Position–momentum uncertainty with the shape-aware floor.
    Heisenberg {
        /// Mode spec (exclusive with --lobes).
        #[arg(long)]
        mode: Option<String>,
        /// Band-limited window: comma list of kept spectral lobes per side
        /// (exclusive with --mode).
        #[arg(long)]
        lobes: Option<String>,
        /// Window side for --lobes.
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Simulate Poisson frames and map the per-photon information surface.
    Simulate {
        /// Experiment config JSON; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        /// Mean photon count per pixel per frame.
        #[arg(long)]
        mean_counts: Option<f64>,
        #[arg(long)]
        pitch: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Charge-sharing spot spec (default: none).
        #[arg(long)]
        sharing: Option<String>,
        /// Also write the raw frames to this NRU1 file.
        #[arg(long)]
        frames_out: Option<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Analyze a recorded frame stack (NRU1, or CSV frames with --csv-pitch).
    Analyze {
        /// Frame file; with --csv-pitch, a comma list of one-frame CSV files.
        #[arg(long)]
        frames: String,
        /// Treat --frames as CSV count grids with this pixel pitch.
        #[arg(long)]
        csv_pitch: Option<f64>,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// One row per photon number: products and bounds for a state family.
    Sweep {
        #[arg(long)]
        mode: String,
        #[arg(long, value_enum)]
        family: Family,
        /// Highest photon number (mean photon number for coherent).
        #[arg(long, default_value_t = 20)]
        max_n: u64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
}

#[derive(clap::Args)]
struct AnalysisArgs {
    /// Horizontal pixel bin factors.
    #[arg(long, default_value = "1,2,4,8,16,32")]
    bins: String,
    /// Frame bunch factors.
    #[arg(long, default_value = "1,2,4,8,16")]
    bunches: String,
    /// Detector spot shape (sets the plateau line 1/C[f]).
    #[arg(long, default_value = "uniform-pixel")]
    psf: String,
    /// Resolution convention for Δr².
    #[arg(long, value_enum, default_value_t = Convention::Geometric)]
    convention: Convention,
    /// Fold the spot blur into Δr².
    #[arg(long)]
    blur_aware: bool,
    /// Allowed relative excess over 1/C₂ before exit code 1.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    Geometric,
    Axis,
}

impl From<Convention> for ResolutionConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Geometric => ResolutionConvention::GeometricArea,
            Convention::Axis => ResolutionConvention::AxisVariance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Fock,
    Coherent,
}

fn main() {
    let cli = Cli::parse();
    let format = cli.format;
    let output = cli.output.clone();
    match run(cli.command) {
        Ok((report, violations)) => {
            if let Err(e) = report.emit(format, output.as_ref()) {
                eprintln!("error: {e}");
                std::process::exit(2);
            }
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(command: Command) -> Result<(Report, Vec<String>)> {
    match command {
        Command::Constants => constants(),
        Command::Verify { density, dim, samples, extent, tolerance } => {
            verify(&density, dim, samples, extent, tolerance)
        }
        Command::State { state, mode, grid, paradox, hbar, omega, tolerance } => {
            state_report(&state, &mode, grid, paradox, hbar, omega, tolerance)
        }
        Command::Heisenberg { mode, lobes, side, hbar, tolerance } => {
            heisenberg(mode.as_deref(), lobes.as_deref(), side, hbar, tolerance)
        }
        Command::Simulate {
            config,
            width,
            height,
            frames,
            mean_counts,
            pitch,
            seed,
            sharing,
            frames_out,
            analysis,
        } => simulate(
            config, width, height, frames, mean_counts, pitch, seed, sharing, frames_out,
            &analysis,
        ),
        Command::Analyze { frames, csv_pitch, analysis } => {
            analyze(&frames, csv_pitch, &analysis)
        }
        Command::Sweep { mode, family, max_n, tolerance } => {
            sweep(&mode, family, max_n, tolerance)
        }
    }
}

fn gamma_label(class: GammaClass) -> &'static str {
    match class {
        GammaClass::Gaussian => "gaussian",
        GammaClass::Poissonian => "poissonian",
        GammaClass::Generic => "generic",
    }
}

fn constants() -> Result<(Report, Vec<String>)> {
    let mut rows = Vec::new();
    let mut payload = Vec::new();
    for dim in 1..=3usize {
        let c = cd_constant(dim)?;
        let ct = cd_tilde(dim)?;
        rows.push(vec![dim.to_string(), fmt(c), fmt(ct), fmt(1.0 / c)]);
        payload.push(serde_json::json!({
            "d": dim, "c_d": c, "c_tilde_d": ct, "inv_c_d": 1.0 / c,
        }));
    }
    Ok((
        Report {
            command: "constants",
            config: BTreeMap::new(),
            header: vec!["d", "c_d", "c_tilde_d", "inv_c_d"],
            rows,
            payload: serde_json::Value::Array(payload),
        },
        Vec::new(),
    ))
}

fn verify(
    density_spec: &str,
    dim: usize,
    samples: Option<usize>,
    extent: Option<f64>,
    tolerance: f64,
) -> Result<(Report, Vec<String>)> {
    let density = parse_density(density_spec)?;
    // A tabulated grid brings its own geometry.
    let (dim, extent, n) = match &density {
        DensitySpec::Field(field) => {
            (field.dim(), field.extent(), field.samples_per_axis())
        }
        _ => {
            let n = samples.unwrap_or(match dim {
                1 => 256,
                2 => 192,
                _ => 96,
            });
            (dim, extent.unwrap_or_else(|| density.default_extent()), n)
        }
    };
    let field = density.build(dim, extent, n)?;
    let value = noise_resolution_functional(&field, true)?;
    let bound = cd_tilde(dim)?;
    let margin = value / bound - 1.0;

    let mut violations = Vec::new();
    if margin < -tolerance {
        violations.push(format!(
            "functional {value:.6} is below the bound {bound:.6} by {:.2}% (tolerance {:.2}%)",
            -margin * 100.0,
            tolerance * 100.0
        ));
    }

    let mut config = BTreeMap::new();
    config.insert("density".into(), density_spec.to_string());
    config.insert("dim".into(), dim.to_string());
    config.insert("samples".into(), n.to_string());
    config.insert("extent".into(), fmt(extent));
    config.insert("tolerance".into(), fmt(tolerance));
    let payload = serde_json::json!({
        "density": density.label(),
        "dim": dim,
        "value": value,
        "bound": bound,
        "margin": margin,
    });
    Ok((
        Report {
            command: "verify",
            config,
            header: vec!["density", "dim", "value", "bound", "margin"],
            rows: vec![vec![
                density.label(),
                dim.to_string(),
                fmt(value),
                fmt(bound),
                fmt(margin),
            ]],
            payload,
        },
        violations,
    ))
}

fn product_violations(report: &UncertaintyReport, tolerance: f64, label: &str) -> Vec<String> {
    let mut violations = Vec::new();
    let checks = [
        ("product", report.product_margin),
        ("energy-normalized product", report.gamma_margin),
        ("information ceiling", report.qd_margin),
    ];
    for (what, margin) in checks {
        if margin < 1.0 - tolerance {
            violations.push(format!(
                "{label}: {what} margin {margin:.6} fell below 1 beyond tolerance"
            ));
        }
    }
    violations
}

fn product_row(report: &UncertaintyReport) -> Vec<String> {
    vec![
        report.mode.clone(),
        report.state.clone(),
        report.dim.to_string(),
        fmt(report.n_mean),
        fmt(report.delta_r_d),
        fmt(report.intensity_var_over_w0sq),
        fmt(report.product),
        fmt(report.bound),
        fmt(report.product_margin),
        gamma_label(report.gamma_class).to_string(),
        fmt(report.gamma_product),
        fmt(report.gamma_bound),
        fmt(report.gamma_margin),
        fmt(report.qd_sq),
        fmt(report.qd_bound),
        fmt(report.qd_margin),
    ]
}

const PRODUCT_HEADER: [&str; 16] = [
    "mode",
    "state",
    "dim",
    "n_mean",
    "delta_r_d",
    "intensity_var_over_w0sq",
    "product",
    "bound",
    "product_margin",
    "gamma_class",
    "gamma_product",
    "gamma_bound",
    "gamma_margin",
    "qd_sq",
    "qd_bound",
    "qd_margin",
];

#[allow(clippy::too_many_arguments)]
fn state_report(
    state_spec: &str,
    mode_spec: &str,
    grid: bool,
    paradox: bool,
    hbar: f64,
    omega: f64,
    tolerance: f64,
) -> Result<(Report, Vec<String>)> {
    let state = parse_state(state_spec)?;
    let mut mode = parse_mode(mode_spec)?;
    if grid {
        let (extent, n) = mode.default_grid();
        mode = ModeSpec::from_grid(mode.sample(extent, n)?)?;
    }
    let report = noise_resolution_product(&mode, &state)?;
    let violations = product_violations(&report, tolerance, "state");

    let mut header: Vec<&'static str> = PRODUCT_HEADER.to_vec();
    let mut row = product_row(&report);
    let mut payload = serde_json::to_value(&report).expect("report is serializable");
    if paradox {
        let units = FieldUnits::new(hbar, omega)?;
        let exact = intensity_variance(&state, &mode, &units)?;
        let shortcut_pn = p_representation_variance(
            &state,
            &mode,
            &units,
            NumberVarianceReading::PhotonNumber,
        )?;
        let shortcut_no = p_representation_variance(
            &state,
            &mode,
            &units,
            NumberVarianceReading::NormallyOrdered,
        )?;
        let gap = exact - shortcut_pn;
        let vacuum = vacuum_variance(&mode, &units)?;
        header.extend([
            "exact_variance",
            "shortcut_photon_number",
            "shortcut_normally_ordered",
            "gap",
            "vacuum_variance",
        ]);
        row.extend([fmt(exact), fmt(shortcut_pn), fmt(shortcut_no), fmt(gap), fmt(vacuum)]);
        payload["paradox"] = serde_json::json!({
            "exact_variance": exact,
            "shortcut_photon_number": shortcut_pn,
            "shortcut_normally_ordered": shortcut_no,
            "gap": gap,
            "vacuum_variance": vacuum,
        });
    }

    let mut config = BTreeMap::new();
    config.insert("state".into(), state_spec.to_string());
    config.insert("mode".into(), mode_spec.to_string());
    config.insert("grid".into(), grid.to_string());
    config.insert("paradox".into(), paradox.to_string());
    config.insert("hbar".into(), fmt(hbar));
    config.insert("omega".into(), fmt(omega));
    config.insert("tolerance".into(), fmt(tolerance));
    Ok((
        Report { command: "state", config, header, rows: vec![row], payload },
        violations,
    ))
}

fn heisenberg_row(report: &HeisenbergReport) -> Vec<String> {
    vec![
        report.mode.clone(),
        report.dim.to_string(),
        fmt(report.hbar),
        fmt(report.delta_r),
        fmt(report.delta_xi),
        fmt(report.delta_p),
        fmt(report.snr0),
        report.anti_squeezed.to_string(),
        report.diverges.to_string(),
        fmt(report.classical_bound),
        fmt(report.extended_bound),
        fmt(report.product),
        fmt(report.margin),
    ]
}

const HEISENBERG_HEADER: [&str; 13] = [
    "mode",
    "dim",
    "hbar",
    "delta_r",
    "delta_xi",
    "delta_p",
    "snr0",
    "anti_squeezed",
    "diverges",
    "classical_bound",
    "extended_bound",
    "product",
    "margin",
];

fn heisenberg(
    mode_spec: Option<&str>,
    lobes_spec: Option<&str>,
    side: f64,
    hbar: f64,
    tolerance: f64,
) -> Result<(Report, Vec<String>)> {
    let mut config = BTreeMap::new();
    config.insert("hbar".into(), fmt(hbar));
    config.insert("tolerance".into(), fmt(tolerance));
    let mut violations = Vec::new();
    let check = |report: &HeisenbergReport, violations: &mut Vec<String>| {
        if report.margin < 1.0 - tolerance {
            violations.push(format!(
                "{}: uncertainty product margin {:.6} fell below 1",
                report.mode, report.margin
            ));
        }
    };
    match (mode_spec, lobes_spec) {
        (Some(mode_spec), None) => {
            let mode = parse_mode(mode_spec)?;
            let report = extended_heisenberg(&mode, hbar)?;
            check(&report, &mut violations);
            config.insert("mode".into(), mode_spec.to_string());
            let payload = serde_json::to_value(&report).expect("report is serializable");
            Ok((
                Report {
                    command: "heisenberg",
                    config,
                    header: HEISENBERG_HEADER.to_vec(),
                    rows: vec![heisenberg_row(&report)],
                    payload,
                },
                violations,
            ))
        }
        (None, Some(lobes_spec)) => {
            let lobes = parse_usize_list(lobes_spec, "lobes")?;
            config.insert("lobes".into(), lobes_spec.to_string());
            config.insert("side".into(), fmt(side));
            let mut rows = Vec::new();
            let mut payload = Vec::new();
            for &m in &lobes {
                let m = u32::try_from(m)
                    .map_err(|_| Error::Format(format!("lobe count {m} is too large")))?;
                let report = band_limited_plane_wave(side, m, hbar)?;
                check(&report.heisenberg, &mut violations);
                let mut row = vec![m.to_string(), fmt(report.norm_fraction)];
                row.extend(heisenberg_row(&report.heisenberg));
                rows.push(row);
                payload.push(serde_json::to_value(&report).expect("report is serializable"));
            }
            let mut header = vec!["lobes", "norm_fraction"];
            header.extend(HEISENBERG_HEADER);
            Ok((
                Report {
                    command: "heisenberg",
                    config,
                    header,
                    rows,
                    payload: serde_json::Value::Array(payload),
                },
                violations,
            ))
        }
        (Some(_), Some(_)) => Err(Error::Format(
            "--mode and --lobes are mutually exclusive".into(),
        )),
        (None, None) => Err(Error::Format(
            "provide either --mode <spec> or --lobes <list>".into(),
        )),
    }
}

/// Shared tail of `simulate` and `analyze`: bin/bunch the stack, evaluate
/// the surface, and package the report.
fn surface_report(
    command: &'static str,
    stack: &FrameStack,
    analysis: &AnalysisArgs,
    mut config: BTreeMap<String, String>,
) -> Result<(Report, Vec<String>)> {
    let bins = parse_usize_list(&analysis.bins, "bins")?;
    let bunches = parse_usize_list(&analysis.bunches, "bunches")?;
    let psf = parse_psf(&analysis.psf)?;
    let convention = ResolutionConvention::from(analysis.convention);
    let surface = analyze_stack(stack, &bins, &bunches, convention, &psf, analysis.blur_aware)?;

    let mut violations = Vec::new();
    for row in &surface.rows {
        if row.q2 > surface.inv_c2 * (1.0 + analysis.tolerance) {
            violations.push(format!(
                "cell bin={} bunch={}: Q₂² = {:.6} exceeds the ceiling {:.6}",
                row.bin_x, row.bunch, row.q2, surface.inv_c2
            ));
        }
    }

    config.insert("bins".into(), analysis.bins.clone());
    config.insert("bunches".into(), analysis.bunches.clone());
    config.insert("psf".into(), analysis.psf.clone());
    config.insert(
        "convention".into(),
        match analysis.convention {
            Convention::Geometric => "geometric".into(),
            Convention::Axis => "axis".into(),
        },
    );
    config.insert("blur_aware".into(), analysis.blur_aware.to_string());
    config.insert("tolerance".into(), fmt(analysis.tolerance));

    let rows = surface
        .rows
        .iter()
        .map(|row| {
            vec![
                row.bin_x.to_string(),
                row.bin_y.to_string(),
                row.bunch.to_string(),
                fmt(row.m_eff),
                fmt(row.n_mean_abs),
                fmt(row.n_mean_rel),
                fmt(row.snr_sq),
                fmt(row.q2),
            ]
        })
        .collect();
    let payload = serde_json::to_value(&surface).expect("surface is serializable");
    Ok((
        Report {
            command,
            config,
            header: vec![
                "bin_x",
                "bin_y",
                "bunch",
                "m_eff",
                "n_mean_abs",
                "n_mean_rel",
                "snr_sq",
                "q2",
            ],
            rows,
            payload,
        },
        violations,
    ))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config_path: Option<PathBuf>,
    width: Option<usize>,
    height: Option<usize>,
    frames: Option<usize>,
    mean_counts: Option<f64>,
    pitch: Option<f64>,
    seed: Option<u64>,
    sharing: Option<String>,
    frames_out: Option<PathBuf>,
    analysis: &AnalysisArgs,
) -> Result<(Report, Vec<String>)> {
    let mut experiment = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path)?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| {
                Error::Format(format!("experiment config {}: {e}", path.display()))
            })?
        }
        None => ExperimentConfig {
            width: 256,
            height: 8,
            n_frames: 1024,
            mean_counts: 1e4,
            pixel_pitch: 1.0,
            seed: 20240817,
            sharing: None,
        },
    };
    if let Some(v) = width {
        experiment.width = v;
    }
    if let Some(v) = height {
        experiment.height = v;
    }
    if let Some(v) = frames {
        experiment.n_frames = v;
    }
    if let Some(v) = mean_counts {
        experiment.mean_counts = v;
    }
    if let Some(v) = pitch {
        experiment.pixel_pitch = v;
    }
    if let Some(v) = seed {
        experiment.seed = v;
    }
    if let Some(spec) = &sharing {
        experiment.sharing = Some(parse_psf(spec)?);
    }

    let stack = simulate_frames(&experiment)?;
    if let Some(path) = &frames_out {
        let mut file = BufWriter::new(File::create(path)?);
        write_nru1(&stack, &mut file)?;
    }

    let mut config = BTreeMap::new();
    config.insert("width".into(), experiment.width.to_string());
    config.insert("height".into(), experiment.height.to_string());
    config.insert("frames".into(), experiment.n_frames.to_string());
    config.insert("mean_counts".into(), fmt(experiment.mean_counts));
    config.insert("pixel_pitch".into(), fmt(experiment.pixel_pitch));
    config.insert("seed".into(), experiment.seed.to_string());
    config.insert(
        "sharing".into(),
        sharing.unwrap_or_else(|| {
            if experiment.sharing.is_some() {
                "from-config".into()
            } else {
                "none".into()
            }
        }),
    );
    if let Some(path) = &frames_out {
        config.insert("frames_out".into(), path.display().to_string());
    }
    surface_report("simulate", &stack, analysis, config)
}

fn analyze(
    frames: &str,
    csv_pitch: Option<f64>,
    analysis: &AnalysisArgs,
) -> Result<(Report, Vec<String>)> {
    let stack = match csv_pitch {
        None => read_nru1(BufReader::new(File::open(frames)?))?,
        Some(pitch) => {
            // Each CSV file is one frame; stack them in the given order.
            let mut combined: Option<FrameStack> = None;
            let mut counts = Vec::new();
            let mut n_frames = 0;
            for path in frames.split(',').filter(|p| !p.trim().is_empty()) {
                let frame = read_csv_frame(BufReader::new(File::open(path.trim())?), pitch)?;
                if let Some(first) = &combined {
                    if frame.width() != first.width() || frame.height() != first.height() {
                        return Err(Error::Format(format!(
                            "frame {path} is {}×{}, expected {}×{}",
                            frame.width(),
                            frame.height(),
                            first.width(),
                            first.height()
                        )));
                    }
                } else {
                    combined = Some(frame.clone());
                }
                counts.extend_from_slice(frame.counts());
                n_frames += 1;
            }
            let first = combined
                .ok_or_else(|| Error::Format("no CSV frame files given".into()))?;
            FrameStack::new(first.width(), first.height(), pitch, pitch, n_frames, counts)?
        }
    };
    let mut config = BTreeMap::new();
    config.insert("frames".into(), frames.to_string());
    if let Some(pitch) = csv_pitch {
        config.insert("csv_pitch".into(), fmt(pitch));
    }
    surface_report("analyze", &stack, analysis, config)
}

fn sweep(
    mode_spec: &str,
    family: Family,
    max_n: u64,
    tolerance: f64,
) -> Result<(Report, Vec<String>)> {
    let mode = parse_mode(mode_spec)?;
    let reports: Vec<UncertaintyReport> = (0..=max_n)
        .into_par_iter()
        .map(|n| {
            let state = match family {
                Family::Fock => PhotonState::fock(n),
                Family::Coherent => PhotonState::coherent(n as f64)?,
            };
            noise_resolution_product(&mode, &state)
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let mut rows = Vec::new();
    for report in &reports {
        violations.extend(product_violations(
            report,
            tolerance,
            &format!("n̄={}", report.n_mean),
        ));
        rows.push(product_row(report));
    }
    let mut config = BTreeMap::new();
    config.insert("mode".into(), mode_spec.to_string());
    config.insert(
        "family".into(),
        match family {
            Family::Fock => "fock".into(),
            Family::Coherent => "coherent".into(),
        },
    );
    config.insert("max_n".into(), max_n.to_string());
    config.insert("tolerance".into(), fmt(tolerance));
    Ok((
        Report {
            command: "sweep",
            config,
            header: PRODUCT_HEADER.to_vec(),
            rows,
            payload: serde_json::to_value(&reports).expect("reports are serializable"),
        },
        violations,
    ))
}
