//! `sepp` — fit, simulate, and backtest self-exciting event forecasts from
//! one declarative config file.

mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Method, RunConfig};
use sepp_core::baselines::{kde_intensity, phm_kernel, KdeConfig};
use sepp_core::ddgf::{ddgf_fit, kernel_diagnostics};
use sepp_core::em::em_fit;
use sepp_core::evaluate::{
    backtest, write_curves_csv, write_report_json, write_table_csv, Forecaster,
};
use sepp_core::gridding::{rasterize, GridSpec};
use sepp_core::hawkes_sim::{simulate, write_truth};
use sepp_core::ingest::{
    filter_catalog, parse_catalog, read_canonical, write_canonical, write_meta, EventCatalog,
};
use sepp_core::kernel::TriggerKernel;
use sepp_core::methods::{
    DdgfForecaster, EmForecaster, KdeForecaster, PhmForecaster, UniformForecaster,
};
use sepp_core::predict::{intensity_map, IntensityMap};

#[derive(Parser)]
#[command(
    name = "sepp",
    about = "Spatiotemporal self-exciting point-process forecasting toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides the config's `run.out_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw delimited extract into the canonical catalog format.
    Ingest(Common),
    /// Generate a ground-truth catalog from the configured process.
    Simulate(Common),
    /// Fit the configured method's trigger kernel on the catalog.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Canonical catalog CSV (overrides `data.catalog`).
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Build the intensity map for a target day from a kernel and history.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Kernel CSV from `fit` (defaults to fitting in-process).
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Target day index relative to the catalog epoch.
        #[arg(long)]
        target_day: Option<usize>,
    },
    /// Run the rolling backtest protocol for the configured method.
    Backtest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Export g(t, r=0) and its long-tail diagnostics from a fitted kernel.
    KernelExport {
        #[command(flatten)]
        common: Common,
        /// Kernel CSV (with `.meta.json` sidecar).
        #[arg(long)]
        kernel: PathBuf,
        /// First lag of the tail fit.
        #[arg(long, default_value_t = 50)]
        fit_lo: usize,
        /// Last lag of the tail fit.
        #[arg(long, default_value_t = 400)]
        fit_hi: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let status = match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    };
    std::process::exit(status);
}

/// Missing inputs and config problems exit 2; numerical failures exit 3.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    use sepp_core::Error::*;
    match err.downcast_ref::<sepp_core::Error>() {
        Some(
            SingularKernelSolve { .. }
            | NonFiniteSample(_)
            | EmptyTrainingWindow
            | EmptyOperator
            | ZeroIntensity(_)
            | EmptyTarget
            | NoEligibleCells
            | AllSamplesSkipped(_),
        ) => 3,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let (cfg, out) = load(&common)?;
            cmd_ingest(&cfg, &out)
        }
        Command::Simulate(common) => {
            let (cfg, out) = load(&common)?;
            cmd_simulate(&cfg, &out)
        }
        Command::Fit { common, catalog } => {
            let (mut cfg, out) = load(&common)?;
            if catalog.is_some() {
                cfg.data.catalog = catalog;
            }
            cmd_fit(&cfg, &out)
        }
        Command::Predict {
            common,
            catalog,
            kernel,
            target_day,
        } => {
            let (mut cfg, out) = load(&common)?;
            if catalog.is_some() {
                cfg.data.catalog = catalog;
            }
            if target_day.is_some() {
                cfg.predict.target_day = target_day;
            }
            cmd_predict(&cfg, &out, kernel.as_deref())
        }
        Command::Backtest { common, catalog } => {
            let (mut cfg, out) = load(&common)?;
            if catalog.is_some() {
                cfg.data.catalog = catalog;
            }
            cmd_backtest(&cfg, &out)
        }
        Command::KernelExport {
            common,
            kernel,
            fit_lo,
            fit_hi,
        } => {
            let (cfg, out) = load(&common)?;
            cmd_kernel_export(&cfg, &out, &kernel, fit_lo, fit_hi)
        }
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.run.out_dir = out.clone();
    }
    let out = cfg.run.out_dir.clone();
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    Ok((cfg, out))
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn load_catalog(cfg: &RunConfig) -> Result<EventCatalog> {
    let path = cfg
        .data
        .catalog
        .as_ref()
        .context("no catalog configured: set data.catalog or pass --catalog")?;
    let meta = RunConfig::meta_path(path);
    let csv =
        File::open(path).with_context(|| format!("cannot open catalog {}", path.display()))?;
    let meta_file = File::open(&meta)
        .with_context(|| format!("cannot open catalog metadata {}", meta.display()))?;
    let catalog = read_canonical(std::io::BufReader::new(csv), std::io::BufReader::new(meta_file))?;
    Ok(match &cfg.data.kind {
        Some(kind) => catalog.filter_kind(kind),
        None => catalog,
    })
}

fn grid_for(cfg: &RunConfig, nt: usize) -> GridSpec {
    GridSpec::for_disc(cfg.region.radius_km, cfg.grid.dx_km, cfg.grid.dt_days, nt)
}

fn save_catalog(catalog: &EventCatalog, out: &Path) -> Result<PathBuf> {
    let csv_path = out.join("catalog.csv");
    write_canonical(catalog, writer(&csv_path)?)?;
    write_meta(catalog, writer(&out.join("catalog.meta.json"))?)?;
    Ok(csv_path)
}

fn cmd_ingest(cfg: &RunConfig, out: &Path) -> Result<()> {
    let raw = cfg
        .data
        .raw
        .as_ref()
        .context("ingest needs data.raw pointing at the delimited extract")?;
    let file =
        File::open(raw).with_context(|| format!("cannot open raw input {}", raw.display()))?;
    let center = (cfg.region.center_lat, cfg.region.center_lon);
    let (parsed, skipped) = parse_catalog(
        std::io::BufReader::new(file),
        &cfg.data.columns,
        center,
        Some(cfg.region.start_date),
    )?;
    let parsed = match &cfg.data.kind {
        Some(kind) => parsed.filter_kind(kind),
        None => parsed,
    };
    let filtered = filter_catalog(
        &parsed,
        center,
        cfg.region.radius_km,
        cfg.region.start_date,
        cfg.region.end_date,
    );
    let path = save_catalog(&filtered, out)?;
    cfg.echo(out)?;
    println!(
        "ingested {} events ({} rows skipped, {} outside the disc/window) -> {}",
        filtered.len(),
        skipped,
        parsed.len() - filtered.len(),
        path.display()
    );
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let spec = cfg.sim.to_spec(&cfg.region);
    let catalog = simulate(&spec)?;
    let path = save_catalog(&catalog, out)?;
    write_truth(&spec, &catalog, writer(&out.join("truth.json"))?)?;
    cfg.echo(out)?;
    println!(
        "simulated {} events over {} days -> {}",
        catalog.len(),
        spec.horizon_days,
        path.display()
    );
    Ok(())
}

fn save_kernel(kernel: &TriggerKernel, out: &Path) -> Result<()> {
    kernel.write_csv(writer(&out.join("kernel.csv"))?)?;
    kernel.write_meta(writer(&out.join("kernel.meta.json"))?)?;
    Ok(())
}

fn cmd_fit(cfg: &RunConfig, out: &Path) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let nt = catalog.day_span().max(2);
    match cfg.run.method {
        Method::Ddgf => {
            let (field, lost) = rasterize(&catalog, &grid_for(cfg, nt));
            if lost > 0 {
                eprintln!("note: {lost} events fell outside the grid");
            }
            let (op, kernel) = ddgf_fit(&field, &cfg.ddgf.to_config())?;
            op.write_csv(writer(&out.join("phi.csv"))?)?;
            save_kernel(&kernel, out)?;
            println!(
                "fitted spectral kernel: {} lags x {} radii -> {}",
                kernel.n_lags(),
                kernel.r_bins.len(),
                out.join("kernel.csv").display()
            );
        }
        Method::Em => {
            let area = std::f64::consts::PI * cfg.region.radius_km * cfg.region.radius_km;
            let model = em_fit(
                &catalog,
                area,
                nt as f64 * cfg.grid.dt_days,
                &cfg.em.to_config(&cfg.grid),
            )?;
            save_kernel(&model.kernel, out)?;
            let summary = serde_json::json!({
                "mu": model.mu,
                "loglik_trace": model.loglik_trace,
                "kernel_mass": model.kernel.mass(),
            });
            serde_json::to_writer_pretty(writer(&out.join("em.json"))?, &summary)?;
            println!(
                "fitted EM kernel: {} lags x {} radii, mu = {:.6e} -> {}",
                model.kernel.n_lags(),
                model.kernel.r_bins.len(),
                model.mu,
                out.join("kernel.csv").display()
            );
        }
        Method::Phm => {
            let grid = grid_for(cfg, nt);
            let r_targets: Vec<f64> = (0..=2 * grid.nx).map(|m| m as f64 * grid.dx / 2.0).collect();
            let kernel = phm_kernel(
                &cfg.phm.to_config(&cfg.grid),
                cfg.protocol.training_days + cfg.protocol.lead_days + 1,
                &r_targets,
            );
            save_kernel(&kernel, out)?;
            println!(
                "tabulated PHM kernel: {} lags x {} radii -> {}",
                kernel.n_lags(),
                kernel.r_bins.len(),
                out.join("kernel.csv").display()
            );
        }
        Method::Kde | Method::Uniform => {
            bail!(
                "method `{}` has no trigger kernel to fit; use `predict` or `backtest`",
                cfg.run.method
            );
        }
    }
    cfg.echo(out)?;
    Ok(())
}

fn load_kernel(path: &Path) -> Result<TriggerKernel> {
    let meta = RunConfig::meta_path(path);
    let csv =
        File::open(path).with_context(|| format!("cannot open kernel {}", path.display()))?;
    let meta_file = File::open(&meta)
        .with_context(|| format!("cannot open kernel metadata {}", meta.display()))?;
    Ok(TriggerKernel::read_csv(
        std::io::BufReader::new(csv),
        std::io::BufReader::new(meta_file),
    )?)
}

fn cmd_predict(cfg: &RunConfig, out: &Path, kernel_path: Option<&Path>) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let target_day = cfg.predict.target_day.unwrap_or_else(|| catalog.day_span());
    if target_day == 0 {
        bail!("target day 0 has no history to predict from");
    }
    let grid = grid_for(cfg, target_day);
    let predict_cfg = cfg.predict.to_config();

    let mut map: IntensityMap = match cfg.run.method {
        Method::Kde => kde_intensity(
            &catalog,
            &grid,
            &KdeConfig {
                bandwidth: cfg.kde.bandwidth_km,
            },
            target_day,
        )?,
        Method::Uniform => IntensityMap {
            values: vec![1.0; grid.n_cells()],
            spec: grid,
            target_day,
            method: "uniform".into(),
            eligible: grid.disc_mask(catalog.radius_km),
        },
        Method::Ddgf | Method::Em | Method::Phm => {
            let kernel = match kernel_path {
                Some(path) => load_kernel(path)?,
                None => fit_kernel_inline(cfg, &catalog)?,
            };
            intensity_map(&kernel, &catalog, target_day, &grid, &predict_cfg)?
        }
    };
    map.method = cfg.run.method.to_string();
    map.write_csv(writer(&out.join("intensity.csv"))?)?;
    map.write_rank_csv(writer(&out.join("rank.csv"))?)?;
    cfg.echo(out)?;
    println!(
        "intensity map for day {target_day} ({} eligible cells) -> {}",
        map.n_eligible(),
        out.join("intensity.csv").display()
    );
    Ok(())
}

fn fit_kernel_inline(cfg: &RunConfig, catalog: &EventCatalog) -> Result<TriggerKernel> {
    let nt = catalog.day_span().max(2);
    match cfg.run.method {
        Method::Ddgf => {
            let (field, _) = rasterize(catalog, &grid_for(cfg, nt));
            Ok(ddgf_fit(&field, &cfg.ddgf.to_config())?.1)
        }
        Method::Em => {
            let area = std::f64::consts::PI * cfg.region.radius_km * cfg.region.radius_km;
            Ok(em_fit(
                catalog,
                area,
                nt as f64 * cfg.grid.dt_days,
                &cfg.em.to_config(&cfg.grid),
            )?
            .kernel)
        }
        Method::Phm => {
            let grid = grid_for(cfg, nt);
            let r_targets: Vec<f64> = (0..=2 * grid.nx).map(|m| m as f64 * grid.dx / 2.0).collect();
            Ok(phm_kernel(&cfg.phm.to_config(&cfg.grid), nt + 1, &r_targets))
        }
        _ => bail!("method `{}` has no kernel", cfg.run.method),
    }
}

fn forecaster_for(cfg: &RunConfig) -> Box<dyn Forecaster> {
    let predict = cfg.predict.to_config();
    match cfg.run.method {
        Method::Ddgf => Box::new(DdgfForecaster {
            ddgf: cfg.ddgf.to_config(),
            predict,
        }),
        Method::Em => Box::new(EmForecaster {
            em: cfg.em.to_config(&cfg.grid),
            predict,
        }),
        Method::Phm => Box::new(PhmForecaster {
            phm: cfg.phm.to_config(&cfg.grid),
            predict,
        }),
        Method::Kde => Box::new(KdeForecaster {
            kde: KdeConfig {
                bandwidth: cfg.kde.bandwidth_km,
            },
        }),
        Method::Uniform => Box::new(UniformForecaster),
    }
}

fn cmd_backtest(cfg: &RunConfig, out: &Path) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let protocol = cfg.protocol.to_protocol();
    let needed = protocol.start_day
        + protocol.training_days
        + protocol.shift_days * (protocol.samples - 1)
        + protocol.lead_days;
    let grid = grid_for(cfg, needed);
    let method = forecaster_for(cfg);
    let report = backtest(&catalog, method.as_ref(), &grid, &protocol)?;

    write_report_json(&report, writer(&out.join(format!("report_{}.json", report.method)))?)?;
    write_table_csv(&[&report], writer(&out.join("table.csv"))?)?;
    write_curves_csv(&[&report], writer(&out.join("curves.csv"))?)?;
    cfg.echo(out)?;
    println!(
        "backtest {}: {} of {} samples scored, mean hit {:.2}%, mean PAI {:.3} -> {}",
        report.method,
        report.n_scored,
        protocol.samples,
        report.mean_hit_rate_pct,
        report.mean_pai,
        out.join("table.csv").display()
    );
    Ok(())
}

fn cmd_kernel_export(
    cfg: &RunConfig,
    out: &Path,
    kernel_path: &Path,
    fit_lo: usize,
    fit_hi: usize,
) -> Result<()> {
    let kernel = load_kernel(kernel_path)?;
    let diag = kernel_diagnostics(&kernel, (fit_lo, fit_hi));

    let mut w = writer(&out.join("gt0.csv"))?;
    use std::io::Write;
    writeln!(w, "lag_days,g_value")?;
    for (n, v) in kernel.temporal_profile().iter().enumerate() {
        writeln!(w, "{},{}", n as f64 * kernel.dt, v)?;
    }
    w.flush()?;

    let fit_json = serde_json::json!({
        "peak_lags": diag.peak_lags,
        "log_tail_fit": diag.log_fit.as_ref().map(|f| serde_json::json!({
            "a": f.a,
            "b": f.b,
            "r_squared": f.r_squared,
            "degenerate": f.degenerate,
            "fit_lags": [fit_lo, fit_hi],
        })),
    });
    serde_json::to_writer_pretty(writer(&out.join("diagnostics.json"))?, &fit_json)?;
    cfg.echo(out)?;
    match &diag.log_fit {
        Some(f) if !f.degenerate => println!(
            "g(t, 0): peaks at lags {:?}; tail fit -a*log(b*t) with a = {:.4}, b = {:.4}, R^2 = {:.4}",
            diag.peak_lags, f.a, f.b, f.r_squared
        ),
        _ => println!("g(t, 0): peaks at lags {:?}; tail fit omitted/degenerate", diag.peak_lags),
    }
    Ok(())
}
