//! critl3: command-line runner for the critical-L3 Navier-Stokes laboratory.

mod manifest;

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use critl3_core::config::{load_config, validate, ExperimentConfig};
use critl3_core::heat::{graded_times, log_times, HeatPropagator};
use critl3_core::lab::{
    embedding_chain_check, modulus_of_continuity, scaling_check, uniqueness_experiment,
    weak_convergence_harness, FamilyKind, UniquenessOptions,
};
use critl3_core::mild::{picard_solve, select_horizon, HorizonSearch};
use critl3_core::perturb::{
    force_split, global_energy_audit, local_energy_audit, reconstruct_total, run_perturbation,
    PerturbationConfig, TestBump,
};
use critl3_core::presets::{bump_variants, preset_initial_data, Preset};
use critl3_core::snapshot::{read_snapshot, write_snapshot};
use critl3_core::tolerances::PICARD_KAPPA_THRESHOLD;
use critl3_core::{
    heat::verify_first_stokes_estimate, heat::verify_gradient_decay,
    oseen::kernel_sample_grid, oseen::sample_kernel, oseen::verify_kernel_bound, EstimateReport,
    Field, Grid, SpectralWorkspace,
};

use manifest::{csv_schema, RunRecorder};

#[derive(Parser)]
#[command(name = "critl3", version, about = "Spectral laboratory for Navier-Stokes flows with critical initial data")]
struct Cli {
    /// Points per axis of the periodic grid.
    #[arg(long = "grid", global = true)]
    grid: Option<usize>,
    /// Edge length of the periodic box.
    #[arg(long = "box", global = true)]
    box_length: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: ./out/ plus the command name).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Picard construction of the mild solution.
    Mild(MildArgs),
    /// Energy-correction solver with audits.
    Perturb(PerturbArgs),
    /// Cross-cutting experiments.
    Lab(LabArgs),
    /// Linear-theory verification suite (heat flow estimates).
    VerifyLinear(VerifyLinearArgs),
    /// Oseen kernel sampling and bound check.
    Kernel(KernelArgs),
}

#[derive(Args)]
struct MildArgs {
    /// Initial data: preset name or snapshot sidecar path.
    #[arg(long, default_value = "bump")]
    init: String,
    /// Horizon: a number or `auto` (smallness criterion).
    #[arg(long = "T", default_value = "auto")]
    horizon: String,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long, default_value = "bump")]
    init: String,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Comma-separated audits to run: global,local
    #[arg(long, default_value = "global")]
    audit: String,
}

#[derive(Args)]
struct LabArgs {
    /// Experiment: scaling | embedding | uniqueness | weak-convergence | modulus
    #[arg(required_unless_present = "list")]
    experiment: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// Family kind for weak-convergence: oscillatory | translated
    #[arg(long, default_value = "oscillatory")]
    family: String,
    /// Family members (oscillation mode numbers / shift indices).
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 8, 12])]
    members: Vec<u32>,
    /// Enumerate presets and experiments.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct VerifyLinearArgs {
    #[arg(long, default_value = "bump")]
    init: String,
    /// Spatial exponents for the gradient-decay fits.
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 4.0])]
    s_exponents: Vec<f64>,
    /// Family size for the boundedness sweep.
    #[arg(long, default_value_t = 10)]
    family: usize,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, default_value_t = 6)]
    shells: usize,
    #[arg(long, default_value_t = 34)]
    angles: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, Box<dyn Error>> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.grid {
        cfg.resolution = n;
    }
    if let Some(l) = cli.box_length {
        cfg.box_length = l;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    let violations = validate(&cfg);
    if !violations.is_empty() {
        return Err(format!(
            "invalid configuration ({} problem(s)):\n  - {}",
            violations.len(),
            violations.join("\n  - ")
        )
        .into());
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .ok();
    }
    Ok(cfg)
}

fn initial_data(
    ws: &SpectralWorkspace,
    cfg: &ExperimentConfig,
    init: &str,
) -> Result<Field, Box<dyn Error>> {
    let path = Path::new(init);
    if init.ends_with(".json") && path.exists() {
        return Ok(read_snapshot(path)?);
    }
    let preset: Preset = init.parse()?;
    Ok(preset_initial_data(ws, &preset, cfg.target_l3, cfg.seed)?)
}

fn run(cli: Cli) -> Result<i32, Box<dyn Error>> {
    let cfg = resolve_config(&cli)?;
    let cmd_name = match &cli.command {
        Command::Mild(_) => "mild",
        Command::Perturb(_) => "perturb",
        Command::Lab(a) => {
            if a.list {
                println!("presets: bump, taylor_green_localized, two_bump, rough, oscillatory(m), translated(m)");
                println!("experiments: scaling, embedding, uniqueness, weak-convergence, modulus");
                return Ok(0);
            }
            "lab"
        }
        Command::VerifyLinear(_) => "verify-linear",
        Command::Kernel(_) => "kernel",
    };
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(cmd_name));
    let command_line: Vec<String> = std::env::args().collect();
    let mut rec = RunRecorder::new(&out_dir, command_line.join(" "), cfg.clone())?;

    match &cli.command {
        Command::Mild(args) => run_mild(&cfg, args, &mut rec)?,
        Command::Perturb(args) => run_perturb(&cfg, args, &mut rec)?,
        Command::Lab(args) => run_lab(&cfg, args, &mut rec)?,
        Command::VerifyLinear(args) => run_verify_linear(&cfg, args, &mut rec)?,
        Command::Kernel(args) => run_kernel(args, &mut rec)?,
    }
    Ok(rec.finish()?)
}

fn run_mild(
    cfg: &ExperimentConfig,
    args: &MildArgs,
    rec: &mut RunRecorder,
) -> Result<(), Box<dyn Error>> {
    let grid = Grid::new(cfg.box_length, cfg.resolution)?;
    let ws = SpectralWorkspace::new(grid);
    let v0 = initial_data(&ws, cfg, &args.init)?;
    let tol = args.tol.unwrap_or(cfg.tol);
    let k_max = args.kmax.unwrap_or(cfg.k_max);
    let horizon = if args.horizon == "auto" {
        match cfg.horizon {
            Some(t) => t,
            None => {
                let search = HorizonSearch {
                    t_max: cfg.horizon_t_max,
                    ..Default::default()
                };
                select_horizon(&ws, &v0, PICARD_KAPPA_THRESHOLD, search)?
            }
        }
    } else {
        args.horizon.parse::<f64>()?
    };

    let sol = picard_solve(&ws, &v0, horizon, tol, k_max, cfg.steps)?;

    #[derive(serde::Serialize)]
    struct MildMeta {
        horizon: f64,
        converged: bool,
        iterations: usize,
        final_residual: f64,
        kappa: f64,
        kappa_threshold: f64,
        tol: f64,
    }
    rec.write_text(
        "mild_solution.json",
        &serde_json::to_string_pretty(&MildMeta {
            horizon: sol.horizon,
            converged: sol.converged,
            iterations: sol.iterations,
            final_residual: sol.final_residual,
            kappa: sol.kappa,
            kappa_threshold: PICARD_KAPPA_THRESHOLD,
            tol,
        })?,
    )?;

    let mut csv = String::from("iteration,diff_norm_5,contraction_ratio\n");
    for (k, d) in sol.diff_norms.iter().enumerate() {
        let ratio = if k == 0 {
            String::new()
        } else {
            format!("{}", sol.contraction_ratios[k - 1])
        };
        csv.push_str(&format!("{},{d},{ratio}\n", k + 1));
    }
    rec.write_text("contraction.csv", &csv)?;
    rec.write_text(
        "schema/contraction.schema.json",
        &csv_schema(
            "contraction.csv",
            &[
                ("iteration", "Picard iterate index k"),
                ("diff_norm_5", "|v^k - v^{k-1}| in the (5,5) mixed norm"),
                ("contraction_ratio", "diff_norm_5(k) / diff_norm_5(k-1)"),
            ],
        ),
    )?;

    for path in write_snapshot(sol.velocity.slice(0), rec.out_dir(), "velocity_initial")? {
        rec.track(path);
    }
    let last = sol.velocity.len() - 1;
    for path in write_snapshot(sol.velocity.slice(last), rec.out_dir(), "velocity_final")? {
        rec.track(path);
    }
    for path in write_snapshot(sol.pressure.slice(last), rec.out_dir(), "pressure_final")? {
        rec.track(path);
    }

    rec.record_verdict("picard_converged", sol.converged);
    rec.record_verdict("fixed_point_residual", sol.final_residual <= 10.0 * tol);
    Ok(())
}

fn run_perturb(
    cfg: &ExperimentConfig,
    args: &PerturbArgs,
    rec: &mut RunRecorder,
) -> Result<(), Box<dyn Error>> {
    let grid = Grid::new(cfg.box_length, cfg.resolution)?;
    let ws = SpectralWorkspace::new(grid);
    let v0 = initial_data(&ws, cfg, &args.init)?;
    let t_end = args.horizon.or(cfg.horizon).unwrap_or(0.1);
    let dt = args.dt.unwrap_or(cfg.dt);
    let rho = args.rho.unwrap_or(cfg.rho);
    let pcfg = PerturbationConfig::new(t_end, dt)
        .with_rho(rho)
        .recording_every(cfg.record_every);
    let run = run_perturbation(&ws, &v0, &pcfg)?;

    let mut csv = String::from("t,kinetic,dissipation,work,residual\n");
    for row in &run.ledger {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.t, row.kinetic, row.dissipation_cum, row.work_cum, row.residual
        ));
    }
    rec.write_text("energy_ledger.csv", &csv)?;
    rec.write_text(
        "schema/energy_ledger.schema.json",
        &csv_schema(
            "energy_ledger.csv",
            &[
                ("t", "time"),
                ("kinetic", "0.5 |v2(t)|_2^2"),
                ("dissipation", "int_0^t |grad v2|_2^2 ds"),
                ("work", "int_0^t int v1 (x) v : grad v2 dx ds"),
                ("residual", "kinetic + dissipation - work"),
            ],
        ),
    )?;

    for audit in args.audit.split(',').filter(|s| !s.is_empty()) {
        match audit.trim() {
            "global" => {
                let rep = global_energy_audit(&run, t_end, cfg.eps_energy_or_default())?;
                rec.write_report("global_energy_audit.json", &rep)?;
            }
            "local" => {
                let c = ws.grid().center();
                let phi = TestBump::radial(
                    c,
                    ws.grid().box_length() * 0.3,
                    t_end * 0.1,
                    t_end * 0.2,
                );
                let rep = local_energy_audit(&ws, &run, &phi, t_end, 1e-4)?;
                rec.write_report("local_energy_audit.json", &rep)?;
            }
            other => return Err(format!("unknown audit `{other}` (global, local)").into()),
        }
    }

    let split = force_split(&ws, &run)?;
    let reports_json = serde_json::to_string_pretty(&split.reports)?;
    rec.write_text("force_split.json", &reports_json)?;
    for rep in &split.reports {
        rec.record_verdict(&rep.name, rep.pass);
    }

    let total = reconstruct_total(&run)?;
    let last = total.len() - 1;
    for path in write_snapshot(total.slice(last), rec.out_dir(), "velocity_total_final")? {
        rec.track(path);
    }
    for path in write_snapshot(run.q2.slice(last), rec.out_dir(), "pressure_final")? {
        rec.track(path);
    }
    Ok(())
}

fn run_lab(
    cfg: &ExperimentConfig,
    args: &LabArgs,
    rec: &mut RunRecorder,
) -> Result<(), Box<dyn Error>> {
    let grid = Grid::new(cfg.box_length, cfg.resolution)?;
    let ws = SpectralWorkspace::new(grid);
    let preset_name = args.preset.clone().unwrap_or_else(|| cfg.preset.clone());
    let preset: Preset = preset_name.parse()?;
    let v0 = preset_initial_data(&ws, &preset, cfg.target_l3, cfg.seed)?;
    let experiment = args.experiment.as_deref().unwrap_or_default();

    match experiment {
        "scaling" => {
            let t_end = cfg.horizon.unwrap_or(0.05);
            let pcfg = PerturbationConfig::new(t_end, cfg.dt).recording_every(cfg.record_every);
            let run = run_perturbation(&ws, &v0, &pcfg)?;
            let total = reconstruct_total(&run)?;
            let rep = scaling_check(&total, &run.q2, 2.0)?;
            rec.write_report("scaling_check.json", &rep)?;
        }
        "embedding" => {
            let heat = HeatPropagator::new(&ws);
            let times = graded_times(cfg.horizon.unwrap_or(0.5), cfg.steps);
            let hist = heat.history(&v0, &times)?;
            let chain = embedding_chain_check(&ws, &hist)?;
            rec.write_report("embedding_chain.json", &chain.report)?;
            let norms = serde_json::json!({
                "norm_3/2_inf": chain.norm_32_inf,
                "norm_5/2_5/2": chain.norm_52_52,
                "norm_2_4": chain.norm_2_4,
                "norm_2_2": chain.norm_2_2,
            });
            rec.write_text("embedding_norms.json", &serde_json::to_string_pretty(&norms)?)?;
        }
        "uniqueness" => {
            let opts = UniquenessOptions {
                n_steps: cfg.steps,
                tol: cfg.tol,
                k_max: cfg.k_max,
                horizon: cfg.horizon,
            };
            let out = uniqueness_experiment(&ws, &v0, opts)?;
            rec.write_report("solver_agreement.json", &out.report)?;
        }
        "weak-convergence" => {
            let kind = match args.family.as_str() {
                "oscillatory" => FamilyKind::Oscillatory,
                "translated" => FamilyKind::Translated,
                other => return Err(format!("unknown family `{other}`").into()),
            };
            let t_end = cfg.horizon.unwrap_or(0.03);
            let out = weak_convergence_harness(
                &ws,
                kind,
                &args.members,
                cfg.target_l3,
                t_end,
                cfg.dt,
                cfg.seed,
            )?;
            rec.write_text("weak_convergence_local.csv", &out.local_trace.to_csv())?;
            rec.write_text("weak_convergence_global.csv", &out.global_trace.to_csv())?;
            rec.write_text(
                "schema/weak_convergence.schema.json",
                &csv_schema(
                    "weak_convergence_*.csv",
                    &[
                        ("member", "family index m"),
                        ("local_l3_distance", "|u_m - u| in L3(K x [0,T]), K the central half-box"),
                        ("global_l2_distance", "|u_m - u| in L2(Q_T)"),
                    ],
                ),
            )?;
            let mut csv = String::from("member,data_l3_distance\n");
            for (m, d) in args.members.iter().zip(&out.data_distances) {
                csv.push_str(&format!("{m},{d}\n"));
            }
            rec.write_text("weak_convergence_data_distance.csv", &csv)?;
            rec.record_verdict("weak_convergence_local_decrease", out.pass);
        }
        "modulus" => {
            let t0 = cfg.horizon.unwrap_or(0.064);
            let ts: Vec<f64> = (0..7).map(|i| t0 / 4f64.powi(i)).collect();
            let trace = modulus_of_continuity(&ws, &v0, &ts, cfg.steps.min(16))?;
            rec.write_text("modulus_of_continuity.csv", &trace.to_csv())?;
            let monotone = trace
                .metric_values
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-9));
            rec.record_verdict("modulus_monotone_to_zero", monotone);
        }
        other => {
            return Err(format!(
                "unknown experiment `{other}` (scaling, embedding, uniqueness, weak-convergence, modulus)"
            )
            .into())
        }
    }
    Ok(())
}

fn run_verify_linear(
    cfg: &ExperimentConfig,
    args: &VerifyLinearArgs,
    rec: &mut RunRecorder,
) -> Result<(), Box<dyn Error>> {
    let grid = Grid::new(cfg.box_length, cfg.resolution)?;
    let ws = SpectralWorkspace::new(grid);
    let heat = HeatPropagator::new(&ws);
    let v0 = initial_data(&ws, cfg, &args.init)?;
    let t_end = cfg.horizon.unwrap_or(1.0);

    let first = verify_first_stokes_estimate(&heat, &v0, t_end, cfg.steps * 2)?;
    rec.write_report("first_stokes_estimate.json", &first)?;

    let times = log_times(0.02, 1.0, 12);
    for &s in &args.s_exponents {
        let rep = verify_gradient_decay(&heat, &v0, s, &times)?;
        rec.write_report(&format!("gradient_decay_s{s}.json"), &rep)?;
    }

    // boundedness across a family of unit-norm data
    let family = bump_variants(&ws, args.family, cfg.target_l3)?;
    let mut ratios = Vec::new();
    let mut csv = String::from("member,ratio\n");
    for (i, member) in family.iter().enumerate() {
        let rep = verify_first_stokes_estimate(&heat, member, t_end, cfg.steps * 2)?;
        csv.push_str(&format!("{i},{}\n", rep.ratio));
        ratios.push(rep.ratio);
    }
    rec.write_text("family_ratios.csv", &csv)?;
    rec.write_text(
        "schema/family_ratios.schema.json",
        &csv_schema(
            "family_ratios.csv",
            &[
                ("member", "family member index"),
                ("ratio", "(|v1|_{3,inf} + |v1|_5) / |v0|_3"),
            ],
        ),
    )?;
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
    let spread = (hi - lo) / hi;
    let sweep = EstimateReport::new("first_estimate_family_spread", hi, lo, spread <= 0.05)
        .with_notes(format!("relative spread {spread:.4e} across {} members", ratios.len()));
    rec.write_report("family_spread.json", &sweep)?;

    // homogeneity: data scaling x2 leaves the ratio invariant
    let doubled = verify_first_stokes_estimate(&heat, &v0.scaled(2.0), t_end, cfg.steps * 2)?;
    let drift = (doubled.ratio - first.ratio).abs() / first.ratio;
    let hom = EstimateReport::new("first_estimate_homogeneity", doubled.ratio, first.ratio, drift <= 1e-8)
        .with_notes(format!("relative drift {drift:.3e} under data scaling x2"));
    rec.write_report("homogeneity.json", &hom)?;
    Ok(())
}

fn run_kernel(args: &KernelArgs, rec: &mut RunRecorder) -> Result<(), Box<dyn Error>> {
    let samples = kernel_sample_grid(args.shells, args.angles);
    let mut csv = String::from("x1,x2,x3,t,k_max_component,normalized\n");
    for &(x, t) in &samples {
        let s = sample_kernel(x, t)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            x[0], x[1], x[2], t, s.k_max, s.normalized
        ));
    }
    rec.write_text("kernel_samples.csv", &csv)?;
    rec.write_text(
        "schema/kernel_samples.schema.json",
        &csv_schema(
            "kernel_samples.csv",
            &[
                ("x1", "sample offset, component 1"),
                ("x2", "sample offset, component 2"),
                ("x3", "sample offset, component 3"),
                ("t", "sample time"),
                ("k_max_component", "|K(x,t)| in the max-component norm"),
                ("normalized", "|K(x,t)| (|x|^2 + t)^2"),
            ],
        ),
    )?;
    let rep = verify_kernel_bound(&samples)?;
    rec.write_report("kernel_bound.json", &rep)?;
    Ok(())
}
