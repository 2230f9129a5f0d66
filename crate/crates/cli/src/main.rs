//! `avoidlab`: command-line surface over the core library.
//!
//! Every subcommand reads plain-text set descriptions, writes CSV (and
//! optionally SVG) artifacts, and drops a JSON run manifest next to the
//! first output. Exit codes: 0 on success, 2 when a validation check
//! fails (an avoidance FAIL, a failed existence claim), 1 on usage or
//! input errors.

mod manifest;
mod plot;
mod table;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use avoidlab_core::bands::BandSet;
use avoidlab_core::discrete::{graham_extract, transference_sample, GrahamParams, GridSet};
use avoidlab_core::energy::{riesz_energy, riesz_energy_backprojection, riesz_energy_mc};
use avoidlab_core::forms::{
    error_part_scan, eval_m, eval_mvec, eval_n0_set, eval_n1, eval_n_eps, structured_lower_scan,
    uniform_part_scan, FormEvaluation, MvecMode, ScanFamily,
};
use avoidlab_core::geometry::{avoids, AvoidOptions, Box2, BoxUnion, ConfigKind};
use avoidlab_core::raster::RasterField;
use avoidlab_core::search::{anneal, Init, Representation, Schedule, SearchConfig, StateSnapshot};
use avoidlab_core::setfile::SetDescription;
use avoidlab_core::spectral::{multiplier_decay_fit, multiplier_m};
use avoidlab_core::CoreError;
use clap::{Parser, Subcommand, ValueEnum};
use manifest::RunManifest;
use plot::{Plot, Series};
use table::fmt;

#[derive(Parser)]
#[command(
    name = "avoidlab",
    version,
    about = "Lab bench for corner- and triangle-avoiding planar sets"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConfigArg {
    /// Hyperbolic corners (x,y), (x+t,y), (x,y+1/t).
    Corner,
    /// Triangles of a fixed area (see --area).
    Triangle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    N0,
    Neps,
    N1,
    Mvec,
    M,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Corner,
    Directional,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Diag,
    Antidiag,
    Grid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Grid,
    Mc,
    Backprojection,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Empty,
    Bands,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MvecModeArg {
    Identity,
    Direct,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the layered antidiagonal band family for a given side.
    Construct {
        #[arg(long = "R", value_name = "SIDE")]
        r: f64,
        /// Output set file (default AR<R>.txt).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a set file against a configuration; exit 2 with a witness on FAIL.
    Verify {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_enum)]
        config: ConfigArg,
        /// Triangle area (triangle config only).
        #[arg(long, default_value_t = 1.0)]
        area: f64,
        /// Also admit corner parameters t < 0.
        #[arg(long = "signed-t", default_value_t = false)]
        signed_t: bool,
        /// Random corner triples drawn by the sampler (band sets).
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pitch of the conservative box cover used for band sets under
        /// the triangle configuration (default side/512).
        #[arg(long)]
        pitch: Option<f64>,
    },
    /// Evaluate one counting form on a rasterized set.
    FormEval {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        lambda: f64,
        /// Mollification scale (required for neps; optional elsewhere).
        #[arg(long)]
        eps: Option<f64>,
        /// Raster pitch.
        #[arg(long)]
        h: f64,
        /// Rotation count for the directional form.
        #[arg(long, default_value_t = 8)]
        angles: usize,
        /// Evaluation route for the horizontal form.
        #[arg(long = "mvec-mode", value_enum, default_value = "direct")]
        mvec_mode: MvecModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Squared L2 size of the error part over a log-lambda window, per scale.
    ErrorScan {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: Option<f64>,
        /// Scales to scan (default 2^-3 .. 2^-8).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps: Option<Vec<f64>>,
        /// Eccentricity window [1/side, side] (default: set side).
        #[arg(long)]
        side: Option<f64>,
        #[arg(long = "n-lambda", default_value_t = 16)]
        n_lambda: usize,
        #[arg(long, value_enum, default_value = "corner")]
        family: FamilyArg,
        #[arg(long, default_value_t = 8)]
        angles: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decay of the uniform part |N0 - Neps| against the scale.
    UniformScan {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Strictly decreasing scale list (default 1 .. 2^-5).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized lower-bound scan of the structured forms.
    StructuredScan {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        side: Option<f64>,
        #[arg(long = "n-lambda", default_value_t = 16)]
        n_lambda: usize,
        #[arg(long, default_value_t = 8)]
        angles: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the oscillatory multiplier along a diagonal or on a grid.
    Multiplier {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Sample count along the diagonal (diag/antidiag modes).
        #[arg(long, default_value_t = 33)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Log-log decay plot (diag/antidiag modes only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Riesz energy of a rasterized set.
    Energy {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        h: Option<f64>,
        /// Sample pairs (mc method).
        #[arg(long, default_value_t = 200_000)]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Projection angles (backprojection method).
        #[arg(long, default_value_t = 64)]
        angles: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the grid energy against the X-ray backprojection value.
    Backprojection {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 64)]
        angles: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the discrete triangle-extraction procedure on a grid set.
    Graham {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        r: u64,
        #[arg(long = "N")]
        big_n: u64,
        /// Common difference of the row progression (must divide N!).
        #[arg(long, default_value_t = 1)]
        l: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a dense discrete set from a planar set at scale 1/sqrt(T).
    Transfer {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 4096)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also save the best discrete set in grid format.
        #[arg(long = "grid-out")]
        grid_out: Option<PathBuf>,
    },
    /// Simulated-annealing search for dense avoiding sets.
    Search {
        #[arg(long = "R", value_name = "SIDE")]
        r: f64,
        #[arg(long, value_enum)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1.0)]
        area: f64,
        /// Cell pitch; omitting it selects the band representation for
        /// corner searches.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "empty")]
        init: InitArg,
        /// Inclusion rate for random init.
        #[arg(long, default_value_t = 0.3)]
        fill: f64,
        /// Initial temperature (default side/16 for bands, h^2 for cells).
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 0.995)]
        cooling: f64,
        /// Best-state set file (default search_R<R>_<config>.txt).
        #[arg(long)]
        out: Option<PathBuf>,
        /// History CSV (default <out stem>_history.csv).
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Summarize a density table (columns R, measure) with reference curves.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Constant on R log R.
        #[arg(long)]
        lower: Option<f64>,
        /// Constant on R^2 (log log R / log R)^(1/4).
        #[arg(long)]
        quarter: Option<f64>,
        /// Constant on R^2 (log log R / log R)^(1/3).
        #[arg(long)]
        third: Option<f64>,
        /// Constant on R^2 (log log R / log R)^(1/2).
        #[arg(long)]
        half: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            msg: msg.into(),
        }
    }

    fn check(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Ok(v) = std::env::var("AVOIDLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring AVOIDLAB_THREADS={v} (want a positive integer)"),
        }
    }
    if let Err(f) = run(cli.cmd) {
        eprintln!("avoidlab: {}", f.msg);
        std::process::exit(f.code as i32);
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Construct { r, out } => construct(r, out),
        Cmd::Verify {
            set,
            config,
            area,
            signed_t,
            samples,
            seed,
            pitch,
        } => verify(&set, config, area, signed_t, samples, seed, pitch),
        Cmd::FormEval {
            set,
            kind,
            lambda,
            eps,
            h,
            angles,
            mvec_mode,
            out,
        } => form_eval(&set, kind, lambda, eps, h, angles, mvec_mode, out),
        Cmd::ErrorScan {
            set,
            h,
            eps,
            side,
            n_lambda,
            family,
            angles,
            out,
        } => error_scan(&set, h, eps, side, n_lambda, family, angles, out),
        Cmd::UniformScan {
            set,
            h,
            lambda,
            eps,
            out,
        } => uniform_scan(&set, h, lambda, eps, out),
        Cmd::StructuredScan {
            set,
            h,
            side,
            n_lambda,
            angles,
            out,
        } => structured_scan(&set, h, side, n_lambda, angles, out),
        Cmd::Multiplier {
            mode,
            points,
            out,
            svg,
        } => multiplier(mode, points, out, svg),
        Cmd::Energy {
            set,
            method,
            h,
            pairs,
            seed,
            angles,
            out,
        } => energy(&set, method, h, pairs, seed, angles, out),
        Cmd::Backprojection {
            set,
            h,
            angles,
            out,
        } => backprojection(&set, h, angles, out),
        Cmd::Graham {
            grid,
            beta,
            r,
            big_n,
            l,
            out,
        } => graham(&grid, beta, r, big_n, l, out),
        Cmd::Transfer {
            set,
            n,
            t,
            trials,
            seed,
            out,
            grid_out,
        } => transfer(&set, n, t, trials, seed, out, grid_out),
        Cmd::Search {
            r,
            config,
            area,
            h,
            steps,
            seed,
            init,
            fill,
            t0,
            cooling,
            out,
            history,
        } => search(
            r, config, area, h, steps, seed, init, fill, t0, cooling, out, history,
        ),
        Cmd::Report {
            input,
            lower,
            quarter,
            third,
            half,
            out,
            svg,
        } => report(&input, lower, quarter, third, half, out, svg),
    }
}

/// Trim a trailing `.0` so default file names read `AR8.txt`, not `AR8.0.txt`.
fn side_slug(r: f64) -> String {
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn load_set(path: &Path) -> Result<SetDescription, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    SetDescription::parse(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn default_pitch(sd: &SetDescription) -> f64 {
    sd.side() / 256.0
}

/// CSV either lands in `--out` (with a manifest) or goes to stdout.
fn deliver(
    out: Option<&Path>,
    csv: &str,
    mut man: RunManifest,
    inputs: &[&Path],
) -> Result<(), Failure> {
    for p in inputs {
        man.record_input(p)?;
    }
    match out {
        Some(p) => {
            man.write_output(p, csv)?;
            man.seal()?;
            println!("wrote {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn construct(r: f64, out: Option<PathBuf>) -> Result<(), Failure> {
    let bs = BandSet::harmonic(r)?;
    let sd = SetDescription::from_band_set(&bs);
    let path = out.unwrap_or_else(|| PathBuf::from(format!("AR{}.txt", side_slug(r))));
    let mut man = RunManifest::new("construct", serde_json::json!({ "R": r }), None);
    man.write_output(&path, &sd.to_text())?;
    man.seal()?;
    println!(
        "construct: R = {}, {} bands, measure {} -> {}",
        side_slug(r),
        bs.bands().len(),
        fmt(bs.measure()),
        path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn verify(
    set: &Path,
    config: ConfigArg,
    area: f64,
    signed_t: bool,
    samples: u64,
    seed: u64,
    pitch: Option<f64>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let opts = AvoidOptions { signed_t };
    let pure_bands = sd.boxes.is_empty() && !sd.bands.is_empty();

    if config == ConfigArg::Corner && pure_bands {
        let bs = sd.band_set().expect("bands present");
        let cert = bs.certify()?;
        println!(
            "certificate: same-band margin {}, separation margin {}, mixed margin {}",
            fmt(cert.same_band_margin),
            cert.separation_margin.map(fmt).unwrap_or_else(|| "n/a".into()),
            fmt(cert.mixed_margin)
        );
        if !cert.pass {
            let mut msg = format!("certificate FAIL: {:?}", cert.violated);
            if let Some(w) = bs.sample_corner_witness(samples, seed) {
                let _ = write!(
                    msg,
                    "; witness ({}, {}) ({}, {}) ({}, {})",
                    fmt(w[0].x),
                    fmt(w[0].y),
                    fmt(w[1].x),
                    fmt(w[1].y),
                    fmt(w[2].x),
                    fmt(w[2].y)
                );
            }
            return Err(Failure::check(msg));
        }
        match bs.sample_corner_witness(samples, seed) {
            Some(w) => {
                return Err(Failure::check(format!(
                    "sampler found a corner despite a passing certificate: ({}, {}) ({}, {}) ({}, {})",
                    fmt(w[0].x),
                    fmt(w[0].y),
                    fmt(w[1].x),
                    fmt(w[1].y),
                    fmt(w[2].x),
                    fmt(w[2].y)
                )))
            }
            None => println!("verify: certificate PASS; {samples} sampled triples, no corner"),
        }
        return Ok(());
    }

    // General sets go through the interval checker on a box union; band
    // records are covered conservatively (a superset), so PASS is sound.
    let cfg = match config {
        ConfigArg::Corner => ConfigKind::HyperbolicCorner,
        ConfigArg::Triangle => ConfigKind::FixedAreaTriangle { area },
    };
    let mut boxes = sd.boxes.clone();
    let mut inexact_cover = false;
    if let Some(bs) = sd.band_set() {
        let p = pitch.unwrap_or(sd.side() / 512.0);
        let (cover, exact) = bs.to_boxes(p);
        inexact_cover |= !exact;
        boxes.extend_from_slice(cover.boxes());
    }
    let union = BoxUnion::with_bounding(boxes, sd.bounds);
    let rep = avoids(&union, cfg, opts)?;
    match rep.witness {
        None => {
            println!(
                "verify: PASS ({} boxes checked{})",
                union.boxes().len(),
                if inexact_cover {
                    ", bands covered conservatively"
                } else {
                    ""
                }
            );
            Ok(())
        }
        Some([i, j, k]) => {
            let b = union.boxes();
            Err(Failure::check(format!(
                "FAIL: feasible triple across boxes {i}, {j}, {k}: {:?} {:?} {:?}{}",
                b[i],
                b[j],
                b[k],
                if inexact_cover {
                    " (bands covered conservatively; the witness may lie in the slack)"
                } else {
                    ""
                }
            )))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn form_eval(
    set: &Path,
    kind: KindArg,
    lambda: f64,
    eps: Option<f64>,
    h: f64,
    angles: usize,
    mvec_mode: MvecModeArg,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let a = RasterField::coverage(&sd, h);
    let (name, ev): (&str, FormEvaluation) = match kind {
        KindArg::N0 => ("n0", eval_n0_set(&a, lambda)?),
        KindArg::Neps => {
            let e = eps.ok_or_else(|| Failure::usage("--kind neps requires --eps"))?;
            ("neps", eval_n_eps(&a, lambda, e)?)
        }
        KindArg::N1 => ("n1", eval_n1(&a, lambda)?),
        KindArg::Mvec => {
            let mode = match mvec_mode {
                MvecModeArg::Identity => MvecMode::Identity,
                MvecModeArg::Direct => MvecMode::Direct,
            };
            ("mvec", eval_mvec(&a, lambda, eps.unwrap_or(0.0), mode)?)
        }
        KindArg::M => ("m", eval_m(&a, lambda, eps.unwrap_or(1.0), angles)?),
    };
    if ev.under_resolved {
        eprintln!(
            "warning: mollifier narrower than two cells at h = {h}; value is under-resolved"
        );
    }
    let csv = table::to_csv(
        &["kind", "lambda", "eps", "value", "quad_error"],
        &[vec![
            name.into(),
            fmt(ev.lambda),
            fmt(ev.eps),
            fmt(ev.value),
            fmt(ev.quad_error),
        ]],
    );
    let man = RunManifest::new(
        "form-eval",
        serde_json::json!({
            "set": set.display().to_string(), "kind": name, "lambda": lambda,
            "eps": eps, "h": h, "angles": angles,
        }),
        None,
    );
    deliver(out.as_deref(), &csv, man, &[set])
}

#[allow(clippy::too_many_arguments)]
fn error_scan(
    set: &Path,
    h: Option<f64>,
    eps: Option<Vec<f64>>,
    side: Option<f64>,
    n_lambda: usize,
    family: FamilyArg,
    angles: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let h = h.unwrap_or_else(|| default_pitch(&sd));
    let side = side.unwrap_or_else(|| sd.side());
    let eps = eps.unwrap_or_else(|| (3..=8).map(|k| 0.5f64.powi(k)).collect());
    let fam = match family {
        FamilyArg::Corner => ScanFamily::Corner,
        FamilyArg::Directional => ScanFamily::Directional { n_angles: angles },
    };
    let a = RasterField::coverage(&sd, h);
    let mut rows = Vec::new();
    for &e in &eps {
        let scan = error_part_scan(&a, e, side, n_lambda, fam)?;
        let normalized = if e < 1.0 {
            scan.integral / (1.0 / e).ln()
        } else {
            f64::NAN
        };
        for p in &scan.points {
            rows.push(vec![
                fmt(e),
                fmt(p.lambda),
                fmt(p.diff),
                fmt(scan.integral),
                fmt(normalized),
            ]);
        }
    }
    let csv = table::to_csv(&["eps", "lambda", "diff", "integral", "normalized"], &rows);
    let man = RunManifest::new(
        "error-scan",
        serde_json::json!({
            "set": set.display().to_string(), "h": h, "eps": eps, "side": side,
            "n_lambda": n_lambda, "family": match family { FamilyArg::Corner => "corner", FamilyArg::Directional => "directional" },
            "angles": angles,
        }),
        None,
    );
    deliver(out.as_deref(), &csv, man, &[set])
}

fn uniform_scan(
    set: &Path,
    h: Option<f64>,
    lambda: f64,
    eps: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let h = h.unwrap_or_else(|| default_pitch(&sd));
    let eps = eps.unwrap_or_else(|| (0..=5).map(|k| 0.5f64.powi(k)).collect());
    let a = RasterField::coverage(&sd, h);
    let scan = uniform_part_scan(&a, lambda, &eps)?;
    let rows: Vec<Vec<String>> = scan
        .points
        .iter()
        .map(|p| {
            vec![
                fmt(p.eps),
                fmt(p.diff),
                p.resolvable.to_string(),
                p.below_noise.to_string(),
            ]
        })
        .collect();
    let csv = table::to_csv(&["eps", "diff", "resolvable", "below_noise"], &rows);
    let summary = match scan.sigma_hat {
        Some(s) => format!(
            "uniform-scan: exact value {}, fitted exponent {}{}",
            fmt(scan.exact_value),
            fmt(s),
            if scan.noise_limited {
                " (noise-limited)"
            } else {
                ""
            }
        ),
        None => format!(
            "uniform-scan: exact value {}, no fittable exponent",
            fmt(scan.exact_value)
        ),
    };
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    let man = RunManifest::new(
        "uniform-scan",
        serde_json::json!({
            "set": set.display().to_string(), "h": h, "lambda": lambda, "eps": eps,
            "sigma_hat": scan.sigma_hat, "noise_limited": scan.noise_limited,
        }),
        None,
    );
    deliver(out.as_deref(), &csv, man, &[set])
}

fn structured_scan(
    set: &Path,
    h: Option<f64>,
    side: Option<f64>,
    n_lambda: usize,
    angles: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let h = h.unwrap_or_else(|| default_pitch(&sd));
    let side = side.unwrap_or_else(|| sd.side());
    let a = RasterField::coverage(&sd, h);
    let scan = structured_lower_scan(&a, side, n_lambda, angles)?;
    let rows: Vec<Vec<String>> = scan
        .points
        .iter()
        .map(|p| vec![fmt(p.lambda), fmt(p.corner_ratio), fmt(p.directional_ratio)])
        .collect();
    let csv = table::to_csv(&["lambda", "corner_ratio", "directional_ratio"], &rows);
    let summary = format!(
        "structured-scan: corner minimum {}, directional minimum {}",
        fmt(scan.corner_min),
        fmt(scan.directional_min)
    );
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    let man = RunManifest::new(
        "structured-scan",
        serde_json::json!({
            "set": set.display().to_string(), "h": h, "side": side,
            "n_lambda": n_lambda, "angles": angles,
            "corner_min": scan.corner_min, "directional_min": scan.directional_min,
        }),
        None,
    );
    deliver(out.as_deref(), &csv, man, &[set])
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn multiplier(
    mode: ModeArg,
    points: usize,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
) -> Result<(), Failure> {
    if points < 2 {
        return Err(Failure::usage("need at least 2 sample points"));
    }
    let mut rows = Vec::new();
    let mut decay: Vec<(f64, f64)> = Vec::new();
    match mode {
        ModeArg::Diag | ModeArg::Antidiag => {
            let sign = if mode == ModeArg::Diag { 1.0 } else { -1.0 };
            for xi in logspace(16.0, 4096.0, points) {
                let eta = sign * xi;
                let m = multiplier_m(xi, eta);
                let a = m.norm();
                rows.push(vec![fmt(xi), fmt(eta), fmt(m.re), fmt(m.im), fmt(a)]);
                decay.push((xi, a));
            }
        }
        ModeArg::Grid => {
            if svg.is_some() {
                return Err(Failure::usage(
                    "--svg applies to diag/antidiag modes; grid mode writes CSV only",
                ));
            }
            for i in 0..17 {
                let xi = -256.0 + 32.0 * i as f64;
                for j in 0..17 {
                    let eta = -256.0 + 32.0 * j as f64;
                    let m = multiplier_m(xi, eta);
                    rows.push(vec![fmt(xi), fmt(eta), fmt(m.re), fmt(m.im), fmt(m.norm())]);
                }
            }
        }
    }
    let csv = table::to_csv(&["xi", "eta", "re", "im", "abs"], &rows);
    let mode_name = match mode {
        ModeArg::Diag => "diag",
        ModeArg::Antidiag => "antidiag",
        ModeArg::Grid => "grid",
    };
    let mut man = RunManifest::new(
        "multiplier",
        serde_json::json!({ "mode": mode_name, "points": points }),
        None,
    );
    match (&out, &svg) {
        (None, None) => print!("{csv}"),
        _ => {
            if let Some(p) = &out {
                man.write_output(p, &csv)?;
                println!("wrote {}", p.display());
            }
            if let Some(p) = &svg {
                let fit = multiplier_decay_fit(
                    mode == ModeArg::Diag,
                    &decay.iter().map(|&(x, _)| x).collect::<Vec<_>>(),
                )?;
                let anchor = decay[0];
                let reference: Vec<(f64, f64)> = decay
                    .iter()
                    .map(|&(x, _)| (x, anchor.1 * (x / anchor.0).powf(fit.slope)))
                    .collect();
                let mut plot = Plot::new(
                    format!("multiplier decay ({mode_name})"),
                    "xi",
                    "|m(xi, eta)|",
                )
                .log_log();
                plot.series.push(Series::solid("|m|", decay.clone()));
                plot.series.push(Series::dashed(
                    format!("slope {:.3} fit", fit.slope),
                    reference,
                ));
                man.write_output(p, &plot.render())?;
                println!("wrote {}", p.display());
            }
            man.seal()?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn energy(
    set: &Path,
    method: MethodArg,
    h: Option<f64>,
    pairs: u64,
    seed: u64,
    angles: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let h = h.unwrap_or_else(|| default_pitch(&sd));
    let a = RasterField::coverage(&sd, h);
    let (name, rep, seed_used) = match method {
        MethodArg::Grid => ("grid", riesz_energy(&a)?, None),
        MethodArg::Mc => ("mc", riesz_energy_mc(&a, pairs, seed)?, Some(seed)),
        MethodArg::Backprojection => {
            ("backprojection", riesz_energy_backprojection(&a, angles)?, None)
        }
    };
    let csv = table::to_csv(
        &["method", "energy", "error_estimate"],
        &[vec![name.into(), fmt(rep.energy), fmt(rep.error_estimate)]],
    );
    let man = RunManifest::new(
        "energy",
        serde_json::json!({
            "set": set.display().to_string(), "method": name, "h": h,
            "pairs": pairs, "angles": angles,
        }),
        seed_used,
    );
    deliver(out.as_deref(), &csv, man, &[set])
}

fn backprojection(
    set: &Path,
    h: Option<f64>,
    angles: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    let h = h.unwrap_or_else(|| default_pitch(&sd));
    let a = RasterField::coverage(&sd, h);
    let grid = riesz_energy(&a)?.energy;
    let bp = riesz_energy_backprojection(&a, angles)?.energy;
    let rel = (grid - bp).abs() / grid.abs().max(f64::MIN_POSITIVE);
    let csv = table::to_csv(
        &["angles", "grid_energy", "backprojection_energy", "rel_gap"],
        &[vec![angles.to_string(), fmt(grid), fmt(bp), fmt(rel)]],
    );
    let man = RunManifest::new(
        "backprojection",
        serde_json::json!({ "set": set.display().to_string(), "h": h, "angles": angles }),
        None,
    );
    deliver(out.as_deref(), &csv, man, &[set])
}

fn graham(
    grid: &Path,
    beta: f64,
    r: u64,
    big_n: u64,
    l: u64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let text = fs::read_to_string(grid)
        .map_err(|e| Failure::usage(format!("{}: {e}", grid.display())))?;
    let b = GridSet::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", grid.display())))?;
    let params = GrahamParams { beta, r, big_n, l };
    let trace = graham_extract(&b, &params)?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    let mut rows: Vec<Vec<String>> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| vec![(i + 1).to_string(), s.name.into(), s.detail.clone()])
        .collect();
    let verdict = match (&trace.triangle, trace.failed_step) {
        (Some(t), _) => {
            let detail = format!(
                "({}, {}) ({}, {}) ({}, {}) doubled area {}",
                t[0].0, t[0].1, t[1].0, t[1].1, t[2].0, t[2].1, trace.doubled_target
            );
            rows.push(vec![(rows.len() + 1).to_string(), "triangle".into(), detail.clone()]);
            Ok(detail)
        }
        (None, step) => {
            let name = step.unwrap_or("unknown");
            rows.push(vec![
                (rows.len() + 1).to_string(),
                "failed".into(),
                name.into(),
            ]);
            Err(name)
        }
    };
    let csv = table::to_csv(&["step", "name", "detail"], &rows);
    let man = RunManifest::new(
        "graham",
        serde_json::json!({
            "grid": grid.display().to_string(), "beta": beta, "r": r, "N": big_n, "l": l,
        }),
        None,
    );
    deliver(out.as_deref(), &csv, man, &[grid])?;
    match verdict {
        Ok(d) => {
            println!("graham: triangle {d}");
            Ok(())
        }
        Err(step) => Err(Failure::check(format!(
            "graham: existence claim failed at step '{step}'"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn transfer(
    set: &Path,
    n: usize,
    t: f64,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
    grid_out: Option<PathBuf>,
) -> Result<(), Failure> {
    let sd = load_set(set)?;
    if !sd.bands.is_empty() {
        return Err(Failure::usage(
            "transfer samples box unions; cover bands first (see verify --pitch)",
        ));
    }
    let rep = transference_sample(&sd.box_union(), n, t, trials, seed)?;
    let csv = table::to_csv(
        &[
            "n",
            "t",
            "density",
            "ambient_density",
            "achieved_half_density",
            "region_ok",
            "offset_x",
            "offset_y",
        ],
        &[vec![
            n.to_string(),
            fmt(t),
            fmt(rep.density),
            fmt(rep.ambient_density),
            rep.achieved_half_density.to_string(),
            rep.region_ok.to_string(),
            fmt(rep.best_offset.0),
            fmt(rep.best_offset.1),
        ]],
    );
    let mut man = RunManifest::new(
        "transfer",
        serde_json::json!({
            "set": set.display().to_string(), "n": n, "t": t, "trials": trials,
        }),
        Some(seed),
    );
    man.record_input(set)?;
    match (&out, &grid_out) {
        (None, None) => print!("{csv}"),
        _ => {
            if let Some(p) = &out {
                man.write_output(p, &csv)?;
                println!("wrote {}", p.display());
            }
            if let Some(p) = &grid_out {
                man.write_output(p, &rep.grid.to_text())?;
                println!("wrote {}", p.display());
            }
            man.seal()?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn search(
    r: f64,
    config: ConfigArg,
    area: f64,
    h: Option<f64>,
    steps: u64,
    seed: u64,
    init: InitArg,
    fill: f64,
    t0: Option<f64>,
    cooling: f64,
    out: Option<PathBuf>,
    history: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = match config {
        ConfigArg::Corner => ConfigKind::HyperbolicCorner,
        ConfigArg::Triangle => ConfigKind::FixedAreaTriangle { area },
    };
    let representation = match (config, h) {
        (ConfigArg::Corner, None) => Representation::Bands,
        (_, h) => Representation::Cells {
            h: h.unwrap_or(r / 64.0),
        },
    };
    let t0 = t0.unwrap_or(match representation {
        Representation::Bands => r / 16.0,
        Representation::Cells { h } => h * h,
    });
    let sc = SearchConfig {
        side: r,
        cfg,
        representation,
        schedule: Schedule { t0, cooling, steps },
        seed,
        init: match init {
            InitArg::Empty => Init::Empty,
            InitArg::Bands => Init::Bands,
            InitArg::Random => Init::Random { fill },
        },
        opts: AvoidOptions::default(),
    };
    let outcome = anneal(&sc)?;
    if !outcome.best.recheck(r, cfg, sc.opts)? {
        return Err(Failure::check(
            "best state failed the from-scratch avoidance re-check",
        ));
    }

    let config_name = match config {
        ConfigArg::Corner => "corner",
        ConfigArg::Triangle => "triangle",
    };
    let set_path = out.unwrap_or_else(|| {
        PathBuf::from(format!("search_R{}_{config_name}.txt", side_slug(r)))
    });
    let hist_path = history.unwrap_or_else(|| {
        let stem = set_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "search".into());
        set_path.with_file_name(format!("{stem}_history.csv"))
    });

    let sd = match &outcome.best {
        StateSnapshot::Bands(bands) => {
            SetDescription::from_band_set(&BandSet::new(r, bands.clone())?)
        }
        StateSnapshot::Cells { .. } => {
            let u = outcome.best.to_union().expect("cell snapshot");
            SetDescription::from_boxes(Box2::new(0.0, r, 0.0, r)?, u.boxes().to_vec())?
        }
    };
    let rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .map(|e| {
            vec![
                e.step.to_string(),
                fmt(e.temperature),
                e.proposal.into(),
                e.accepted.to_string(),
                fmt(e.measure),
                fmt(e.best_measure),
            ]
        })
        .collect();
    let csv = table::to_csv(
        &[
            "step",
            "temperature",
            "proposal",
            "accepted",
            "measure",
            "best_measure",
        ],
        &rows,
    );

    let mut man = RunManifest::new(
        "search",
        serde_json::json!({
            "R": r, "config": config_name, "area": area, "h": h, "steps": steps,
            "init": match init { InitArg::Empty => "empty", InitArg::Bands => "bands", InitArg::Random => "random" },
            "fill": fill, "t0": t0, "cooling": cooling,
        }),
        Some(seed),
    );
    man.write_output(&set_path, &sd.to_text())?;
    man.write_output(&hist_path, &csv)?;
    man.seal()?;
    let accepted = outcome.history.iter().filter(|e| e.accepted).count();
    println!(
        "search: best measure {} after {} steps ({} accepted); re-check PASS",
        fmt(outcome.best_measure),
        steps,
        accepted
    );
    println!("wrote {}", set_path.display());
    println!("wrote {}", hist_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report(
    input: &Path,
    lower: Option<f64>,
    quarter: Option<f64>,
    third: Option<f64>,
    half: Option<f64>,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
) -> Result<(), Failure> {
    let text = fs::read_to_string(input)
        .map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let (header, raw) = table::read_csv(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let col = |name: &str| {
        header
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Failure::usage(format!("{}: missing column '{name}'", input.display())))
    };
    let (ri, mi) = (col("R")?, col("measure")?);
    let mut data = Vec::new();
    for (k, row) in raw.iter().enumerate() {
        let get = |i: usize| -> Result<f64, Failure> {
            row.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Failure::usage(format!("{}: bad number in data row {}", input.display(), k + 1))
                })
        };
        let (r, m) = (get(ri)?, get(mi)?);
        if r <= 1.0 || m < 0.0 {
            return Err(Failure::usage(format!(
                "{}: need R > 1 and measure >= 0 in data row {}",
                input.display(),
                k + 1
            )));
        }
        data.push((r, m));
    }
    if data.is_empty() {
        return Err(Failure::usage(format!("{}: no data rows", input.display())));
    }

    let oc = avoidlab_core::search::OverlayConstants {
        lower: lower.unwrap_or(1.0),
        quarter: quarter.unwrap_or(1.0),
        third: third.unwrap_or(1.0),
        half: half.unwrap_or(1.0),
    };
    let provided = [lower, quarter, third, half];
    let overlay_names = ["overlay_lower", "overlay_quarter", "overlay_third", "overlay_half"];

    let mut rows = Vec::new();
    let mut overlay_pts: [Vec<(f64, f64)>; 4] = Default::default();
    let mut band_pts = Vec::new();
    for &(r, m) in &data {
        let delta = m / (r * r);
        let consistency = if delta > 0.0 {
            delta.powi(4) * r.ln() / (1.0 + (1.0 / delta).ln())
        } else {
            0.0
        };
        let band = if r >= 4.0 {
            let bm = BandSet::harmonic(r)?.measure();
            band_pts.push((r, bm));
            fmt(bm)
        } else {
            String::new()
        };
        let curves = oc.at(r);
        let mut row = vec![fmt(r), fmt(m), fmt(delta), fmt(consistency), band];
        for (i, &c) in curves.iter().enumerate() {
            if provided[i].is_some() && c.is_finite() {
                overlay_pts[i].push((r, c));
                row.push(fmt(c));
            } else {
                row.push(String::new());
            }
        }
        rows.push(row);
    }
    let header: Vec<&str> = ["R", "measure", "delta_hat", "consistency", "band_measure"]
        .into_iter()
        .chain(overlay_names)
        .collect();
    let csv = table::to_csv(&header, &rows);

    let mut man = RunManifest::new(
        "report",
        serde_json::json!({
            "input": input.display().to_string(),
            "lower": lower, "quarter": quarter, "third": third, "half": half,
        }),
        None,
    );
    man.record_input(input)?;
    if let Some(p) = &svg {
        let mut plot = Plot::new("densest avoiding sets", "R", "measure").log_log();
        plot.series
            .push(Series::solid("searched", data.clone()));
        if !band_pts.is_empty() {
            plot.series.push(Series::solid("band family", band_pts));
        }
        let labels = [
            "c R log R",
            "c R^2 (llR/lR)^1/4",
            "c R^2 (llR/lR)^1/3",
            "c R^2 (llR/lR)^1/2",
        ];
        for (i, pts) in overlay_pts.iter().enumerate() {
            if provided[i].is_some() && !pts.is_empty() {
                plot.series.push(Series::dashed(labels[i], pts.clone()));
            }
        }
        man.write_output(p, &plot.render())?;
        println!("wrote {}", p.display());
    }
    match out {
        Some(p) => {
            man.write_output(&p, &csv)?;
            man.seal()?;
            println!("wrote {}", p.display());
        }
        None => {
            if svg.is_some() {
                man.seal()?;
            }
            print!("{csv}");
        }
    }
    Ok(())
}
