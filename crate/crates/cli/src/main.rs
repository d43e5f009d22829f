use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irs_paoi::frame_timing::{derive_timing, overhead_time, packets_per_update};
use irs_paoi::hitting::{hitting_curves, LegConvention};
use irs_paoi::irs_field::{illuminated_radius, snr_map, wide_beam_profile, GridSpec, SnrField};
use irs_paoi::mobility_mc::{first_exit_time_mc, StartPoint};
use irs_paoi::mrgp::{find_crossover, steady_state_at, KernelMode};
use irs_paoi::paoi::{evaluate, optimize_t_upd, refine_optimum, sweep_radius, PaoiCurve, UpdateGrid};
use irs_paoi::{load_config, Error, MobilitySpec, Result, ScenarioConfig};
use rayon::prelude::*;
use serde_json::json;

mod output;

use output::{opt, sha256_hex, OutputDir, Table};

#[derive(Parser)]
#[command(name = "irs-paoi", version, about = "Optimal IRS update period from the average peak age of information")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the built-in reference scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    kernel_mode: Option<KernelArg>,
    #[arg(long, global = true, value_enum)]
    leg_convention: Option<LegArg>,
    #[arg(long, global = true)]
    r_in: Option<f64>,
    #[arg(long, global = true)]
    r_out: Option<f64>,
    /// constant, pause or random_speed.
    #[arg(long, global = true)]
    variant: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    t_upd_min: Option<f64>,
    #[arg(long, global = true)]
    t_upd_max: Option<f64>,
    #[arg(long, global = true)]
    t_upd_step: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Complement,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum LegArg {
    ExactExit,
    IncludeLast,
    ExcludeLast,
}

#[derive(Args, Clone, Copy)]
struct FieldArgs {
    /// Grid spacing in metres.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Half-width of the square grid around the illuminated centre, metres.
    #[arg(long, default_value_t = 3.0)]
    half_width: f64,
    #[arg(long, default_value_t = 30.0)]
    threshold_db: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Frame timing constants as JSON.
    Timing,
    /// SNR over the user plane.
    SnrMap(FieldArgs),
    /// Radius of the disc where the SNR meets the threshold.
    IlluminatedRadius(FieldArgs),
    /// Analytic hitting-time curves.
    Hitting,
    /// Analytic inside probability against a Monte Carlo estimate.
    Validate,
    /// Occupation fractions over an update-period grid.
    SteadyState,
    /// Average PAoI over the update-period grid.
    PaoiCurve,
    /// Optimal update period.
    Optimize,
    /// Optimal update period per radius and mobility variant.
    SweepRadius {
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.8,1.2,1.7")]
        radii: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "constant,pause,random_speed")]
        variants: Vec<String>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Timing => "timing",
            Cmd::SnrMap(_) => "snr-map",
            Cmd::IlluminatedRadius(_) => "illuminated-radius",
            Cmd::Hitting => "hitting",
            Cmd::Validate => "validate",
            Cmd::SteadyState => "steady-state",
            Cmd::PaoiCurve => "paoi-curve",
            Cmd::Optimize => "optimize",
            Cmd::SweepRadius { .. } => "sweep-radius",
        }
    }
}

fn resolve_config(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::reference(),
    };
    if let Some(s) = c.seed {
        cfg.numerics.rng_seed = s;
    }
    if let Some(k) = c.kernel_mode {
        cfg.model.kernel_mode = match k {
            KernelArg::Complement => KernelMode::Complement,
            KernelArg::Literal => KernelMode::Literal,
        };
    }
    if let Some(l) = c.leg_convention {
        cfg.model.leg_convention = match l {
            LegArg::ExactExit => LegConvention::ExactExit,
            LegArg::IncludeLast => LegConvention::IncludeLast,
            LegArg::ExcludeLast => LegConvention::ExcludeLast,
        };
    }
    if let Some(r) = c.r_in {
        cfg.geometry.r_in_m = r;
    }
    if let Some(r) = c.r_out {
        cfg.geometry.r_out_m = r;
    }
    if let Some(v) = &c.variant {
        cfg.mobility = cfg.mobility.with_variant(v)?;
    }
    if let Some(n) = c.trials {
        cfg.numerics.mc_trials = n;
    }
    if let Some(x) = c.t_upd_min {
        cfg.optimizer.t_upd_min_s = x;
    }
    if let Some(x) = c.t_upd_max {
        cfg.optimizer.t_upd_max_s = x;
    }
    if let Some(x) = c.t_upd_step {
        cfg.optimizer.t_upd_step_s = x;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn field(cfg: &ScenarioConfig, a: &FieldArgs) -> Result<SnrField> {
    let grid = GridSpec::around(cfg.geometry.illum_center_m, a.half_width, a.step);
    snr_map(cfg, &wide_beam_profile(cfg), &grid)
}

fn curve_table(curve: &PaoiCurve) -> Table {
    let mut t = Table::new(&[("t_upd", "s"), ("paoi", "s"), ("feasible", "bool"), ("c_h", "packets"), ("t_tx", "s")]);
    for p in &curve.points {
        t.row(&[p.t_upd.to_string(), opt(p.paoi), p.feasible().to_string(), p.c_h.to_string(), opt(p.t_tx)]);
    }
    t
}

fn run(cmd: &Cmd, cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<()> {
    let g = &cfg.geometry;
    let timing = derive_timing(&cfg.frame, &cfg.panel, g);
    if matches!(cfg.mobility, MobilitySpec::RandomSpeed { .. }) && !matches!(cmd, Cmd::Timing | Cmd::SnrMap(_) | Cmd::IlluminatedRadius(_)) {
        out.warnings.push("random-speed variant: the straight-line inside branch uses v_max".into());
    }
    match cmd {
        Cmd::Timing => {
            let v = json!({
                "timing": timing,
                "t_conf": timing.t_conf(),
                "packet_period": timing.packet_period(),
                "t_p_ovh_overridden": cfg.frame.t_p_ovh_override_s.is_some(),
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
            out.json("timing.json", &v)?;
        }
        Cmd::SnrMap(a) => {
            let f = field(cfg, a)?;
            let r = illuminated_radius(&f, a.threshold_db, g.illum_center_m);
            let mut t = Table::new(&[("x", "m"), ("y", "m"), ("snr", "dB")]);
            for (iy, y) in f.y_grid.iter().enumerate() {
                for (ix, x) in f.x_grid.iter().enumerate() {
                    t.row(&[x.to_string(), y.to_string(), f.snr_db[iy][ix].to_string()]);
                }
            }
            let meta = json!({
                "threshold_db": a.threshold_db,
                "illuminated_radius_m": r.radius_m,
                "center_below_threshold": r.center_below_threshold,
                "max_snr_db": f.max_db(),
                "gain_normalization": cfg.radio.gain_normalization,
            });
            out.csv("snr_map", &t, meta)?;
            println!("max_snr_db={} illuminated_radius_m={}", f.max_db(), r.radius_m);
        }
        Cmd::IlluminatedRadius(a) => {
            let f = field(cfg, a)?;
            let r = illuminated_radius(&f, a.threshold_db, g.illum_center_m);
            let mut t = Table::new(&[("threshold", "dB"), ("radius", "m"), ("center_below_threshold", "bool"), ("configured_r_in", "m")]);
            t.row(&[a.threshold_db.to_string(), r.radius_m.to_string(), r.center_below_threshold.to_string(), g.r_in_m.to_string()]);
            out.csv("illuminated_radius", &t, json!({ "grid_step_m": a.step, "grid_half_width_m": a.half_width }))?;
            if r.center_below_threshold {
                out.warnings.push(format!("SNR at the illuminated centre is below {} dB", a.threshold_db));
            }
            println!("illuminated_radius_m={} configured_r_in_m={}", r.radius_m, g.r_in_m);
        }
        Cmd::Hitting => {
            let h = hitting_curves(&cfg.mobility, g.r_in_m, g.r_out_m, &cfg.numerics, cfg.model.leg_convention)?;
            let mut t = Table::new(&[
                ("t", "s"),
                ("p_in", "probability"),
                ("p_fh_out", "probability"),
                ("center_exit", "probability"),
                ("p_fh_in", "probability"),
                ("p_out", "probability"),
            ]);
            for (k, time) in h.p_in.times().enumerate() {
                t.row(&[
                    time.to_string(),
                    h.p_in.values[k].to_string(),
                    h.p_fh_out.values[k].to_string(),
                    h.center_exit.values[k].to_string(),
                    h.p_fh_in.values[k].to_string(),
                    h.p_out.values[k].to_string(),
                ]);
            }
            let meta = json!({
                "variant": cfg.mobility,
                "r_in_m": h.r_in,
                "r_out_m": h.r_out,
                "leg_convention": h.convention.name(),
                "exit": h.exit_meta,
                "entry": h.entry_meta,
            });
            out.csv("hitting", &t, meta)?;
            println!("j_star_exit={} tail_exit={:e} j_star_entry={} tail_entry={:e}", h.exit_meta.j_star, h.exit_meta.grid_tail, h.entry_meta.j_star, h.entry_meta.grid_tail);
        }
        Cmd::Validate => {
            let h = hitting_curves(&cfg.mobility, g.r_in_m, g.r_out_m, &cfg.numerics, cfg.model.leg_convention)?;
            let n = &cfg.numerics;
            let mc = first_exit_time_mc(&cfg.mobility, g.r_in_m, g.r_out_m, StartPoint::UniformInner, n.mc_trials, n.rng_seed)?;
            let sup = mc.sup_distance(&h.p_fh_out);
            let mut t = Table::new(&[("t", "s"), ("p_in_analytic", "probability"), ("p_in_empirical", "probability")]);
            for (time, a) in h.p_in.times().zip(&h.p_in.values) {
                t.row(&[time.to_string(), a.to_string(), (1.0 - mc.eval(time)).to_string()]);
            }
            let meta = json!({
                "variant": cfg.mobility,
                "r_in_m": g.r_in_m,
                "r_out_m": g.r_out_m,
                "trials": n.mc_trials,
                "seed": n.rng_seed,
                "sup_distance": sup,
                "censored_trials": mc.censored(),
            });
            out.csv("validate", &t, meta)?;
            println!("sup_distance={sup}");
        }
        Cmd::SteadyState => {
            let h = hitting_curves(&cfg.mobility, g.r_in_m, g.r_out_m, &cfg.numerics, cfg.model.leg_convention)?;
            let grid = UpdateGrid::from_config(cfg);
            let rows = grid
                .values()
                .into_par_iter()
                .map(|t| steady_state_at(&timing, &h, t, &cfg.model).map(|s| (t, s)))
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(&[
                ("t_upd", "s"),
                ("pi1", "fraction"),
                ("pi2", "fraction"),
                ("pi3", "fraction"),
                ("pi2_adj", "fraction"),
                ("pi3_adj", "fraction"),
            ]);
            for (tu, s) in &rows {
                t.row(&[tu.to_string(), s.pi1.to_string(), s.pi2.to_string(), s.pi3.to_string(), s.pi2_adj.to_string(), s.pi3_adj.to_string()]);
            }
            let x = find_crossover(&timing, &h, &cfg.model, grid.min.max(timing.t_conf()), grid.max, grid.step)?;
            out.csv("steady_state", &t, json!({ "crossover_t_upd_s": x, "kernel_mode": cfg.model.kernel_mode, "center_start": cfg.model.center_start }))?;
            println!("crossover_t_upd_s={}", opt(x));
        }
        Cmd::PaoiCurve | Cmd::Optimize => {
            let grid = UpdateGrid::from_config(cfg);
            let (timing, h, curve) = evaluate(cfg, &grid)?;
            let (mut ts, mut ps) = optimize_t_upd(&curve);
            if cfg.optimizer.refine {
                (ts, ps) = refine_optimum(&timing, &h, &cfg.model, &curve, grid.step)?;
            }
            let ratio = overhead_time(&timing, ts) / ts;
            let meta = json!({ "t_upd_opt_s": ts, "paoi_opt_s": ps, "overhead_ratio": ratio, "refined": cfg.optimizer.refine });
            out.csv("paoi_curve", &curve_table(&curve), meta.clone())?;
            if matches!(cmd, Cmd::Optimize) {
                out.json("optimum.json", &json!({ "t_upd_opt_s": ts, "paoi_opt_s": ps, "overhead_ratio": ratio, "c_h": packets_per_update(&timing, ts) }))?;
            }
            println!("t_upd_opt_s={ts} paoi_opt_s={ps} overhead_ratio={ratio}");
        }
        Cmd::SweepRadius { radii, variants } => {
            let specs = variants.iter().map(|v| cfg.mobility.with_variant(v)).collect::<Result<Vec<_>>>()?;
            let rows = sweep_radius(cfg, radii, &specs);
            let mut t = Table::new(&[
                ("r_in", "m"),
                ("variant", "name"),
                ("t_upd_opt", "s"),
                ("paoi_opt", "s"),
                ("overhead_ratio", "fraction"),
                ("straight_line", "s"),
                ("error", "text"),
            ]);
            for r in &rows {
                t.row(&[
                    r.r_in_m.to_string(),
                    r.variant.clone(),
                    opt(r.t_upd_opt_s),
                    opt(r.paoi_opt_s),
                    opt(r.overhead_ratio),
                    r.straight_line_s.to_string(),
                    r.error.clone().unwrap_or_default().replace(',', ";"),
                ]);
                if let Some(e) = &r.error {
                    out.warnings.push(format!("r_in={} {}: {e}", r.r_in_m, r.variant));
                }
            }
            out.csv("sweep_radius", &t, json!({ "variants": specs }))?;
            for r in &rows {
                println!("r_in_m={} variant={} t_upd_opt_s={}", r.r_in_m, r.variant, opt(r.t_upd_opt_s));
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("IRS_PAOI_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Validation(format!("IRS_PAOI_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Validation("IRS_PAOI_THREADS must be a positive integer, got '0'".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Numerics(e.to_string()))?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    let start = Instant::now();
    configure_threads()?;
    let cfg = resolve_config(&cli.common)?;
    let mut out = OutputDir::create(&cli.common.out)?;
    run(&cli.cmd, &cfg, &mut out)?;
    out.manifest(json!({
        "config_sha256": sha256_hex(cfg.to_toml_string().as_bytes()),
        "schema_version": cfg.schema_version,
        "seed": cfg.numerics.rng_seed,
        "subcommand": cli.cmd.name(),
        "wall_time_s": start.elapsed().as_secs_f64(),
    }))
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let one_line = message.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");
    eprintln!("error kind={kind} message={:?}", one_line);
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", &e.to_string()),
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
