use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dyadmnar::diagnostics::{
    getting_it_right, ig_prior_sensitivity, oracle_suite, sensitivity_sweep, GirConfig,
    SensitivityGrid, SensitivityTable,
};
use dyadmnar::gibbs::{run_chain, FaultInjection};
use dyadmnar::io::{parse_panel, save_panel, RunConfig};
use dyadmnar::model::{DyadPanel, ModelSpec};
use dyadmnar::sim::{generate_dataset, run_replicates, Method, SimDesign, Variant};
use dyadmnar::Error;

#[derive(Parser)]
#[command(
    name = "dyadmnar",
    version,
    about = "Selection models for dyadic panels with nonignorable dropout"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    A,
    B,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::A => Variant::A,
            VariantArg::B => Variant::B,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate panels from a simulation design.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "a")]
        variant: VariantArg,
        /// Number of datasets.
        #[arg(long = "R", default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = 200)]
        n_dyads: usize,
    },
    /// Fit the selection model to a panel CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        panel: PathBuf,
    },
    /// Replicate study: bias, SE and coverage per method.
    Replicate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "a")]
        variant: VariantArg,
        #[arg(long = "R", default_value_t = 100)]
        replicates: usize,
        /// Comma-separated: complete-case, available-case, proposed
        /// (selection-linear), misspecified, flexible (selection-quadratic).
        #[arg(long)]
        methods: Option<String>,
    },
    /// Prior sensitivity: informative priors on phi and inverse-gamma settings.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Panel CSV; without it a dataset is simulated from --variant.
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "a")]
        variant: VariantArg,
    },
    /// Sampler correctness suite.
    Check {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

enum Failure {
    Input(Error),
    Sampler(Error),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        if e.is_sampler_failure() {
            Failure::Sampler(e)
        } else {
            Failure::Input(e)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Input(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn run_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.sampler.seed = s;
    }
    Ok(cfg)
}

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn design(variant: VariantArg, seed: u64, replicates: usize) -> SimDesign {
    SimDesign {
        n_replicates: replicates,
        seed,
        ..SimDesign::new(variant.into())
    }
}

fn simulate(common: &Common, variant: VariantArg, replicates: usize, n_dyads: usize) -> Outcome {
    let cfg = run_config(common)?;
    let d = SimDesign {
        n_dyads,
        ..design(variant, cfg.sampler.seed, replicates)
    };
    fs::create_dir_all(&common.out_dir)?;
    for r in 0..replicates {
        let data = generate_dataset(&d, r as u64);
        save_panel(
            &data.panel,
            common.out_dir.join(format!("panel_{r:03}.csv")),
        )?;
        let latent = latent_panel(&data.panel, &data.latent)?;
        save_panel(&latent, common.out_dir.join(format!("latent_{r:03}.csv")))?;
    }
    println!(
        "wrote {replicates} panel(s) to {}",
        common.out_dir.display()
    );
    Ok(())
}

fn latent_panel(
    panel: &DyadPanel,
    latent: &dyadmnar::model::CompletedOutcomes,
) -> Result<DyadPanel, Failure> {
    let mut data = panel.clone().into_data();
    for m in dyadmnar::Member::BOTH {
        data.outcomes[m.index()] = latent.values(m).iter().map(|&v| Some(v)).collect();
    }
    Ok(DyadPanel::new(data)?)
}

fn fit(common: &Common, panel_path: &Path) -> Outcome {
    let cfg = run_config(common)?;
    let panel = parse_panel(panel_path)?;
    let (panel, model) = cfg.resolve(&panel)?;
    let out = run_chain(&panel, &model, &cfg.sampler_config()?)?;
    out.write_draws_csv(out_file(&common.out_dir, "draws.csv")?)?;
    fs::write(
        common.out_dir.join("summary.json"),
        out.summary_json()? + "\n",
    )?;
    for (name, s) in out.names.iter().zip(&out.summaries) {
        println!("{name:24} {:>10.4} ({:.4}, {:.4})", s.mean, s.q025, s.q975);
    }
    Ok(())
}

fn replicate(
    common: &Common,
    variant: VariantArg,
    replicates: usize,
    methods: Option<&str>,
) -> Outcome {
    let cfg = run_config(common)?;
    let methods = match methods {
        Some(s) => Method::parse_list(s)?,
        None => match variant {
            VariantArg::A => vec![
                Method::CompleteCase,
                Method::AvailableCase,
                Method::SelectionLinear,
            ],
            VariantArg::B => vec![
                Method::CompleteCase,
                Method::AvailableCase,
                Method::SelectionLinear,
                Method::SelectionQuadratic,
            ],
        },
    };
    let d = design(variant, cfg.sampler.seed, replicates);
    let report = run_replicates(&d, &methods, &cfg.sampler_config()?)?;
    report.write_csv(out_file(&common.out_dir, "report.csv")?)?;
    report.write_dropout_csv(out_file(&common.out_dir, "dropout.csv")?)?;
    report.write_estimates_csv(out_file(&common.out_dir, "estimates.csv")?)?;
    fs::write(common.out_dir.join("report.json"), report.to_json()? + "\n")?;
    for r in &report.rows {
        println!(
            "{:20} {:20} bias {:+.3}  se {:.3}  coverage {:.2}",
            r.method, r.parameter, r.bias, r.se, r.coverage
        );
    }
    for (m, n) in &report.failures {
        if *n > 0 {
            println!("{m}: {n} replicate(s) failed and were excluded");
        }
    }
    Ok(())
}

fn write_table(dir: &Path, stem: &str, table: &SensitivityTable) -> Outcome {
    table.write_long_csv(out_file(dir, &format!("{stem}_long.csv"))?)?;
    table.write_wide_csv(out_file(dir, &format!("{stem}_wide.csv"))?)?;
    for (s, e) in &table.failures {
        eprintln!("{stem}: setting {s} failed: {e}");
    }
    Ok(())
}

fn sensitivity(common: &Common, panel_path: Option<&Path>, variant: VariantArg) -> Outcome {
    let cfg = run_config(common)?;
    let (panel, model) = match panel_path {
        Some(p) => cfg.resolve(&parse_panel(p)?)?,
        None => {
            let d = design(variant, cfg.sampler.seed, 1);
            let (panel, model) = cfg.resolve(&generate_dataset(&d, 0).panel)?;
            (panel, model)
        }
    };
    let model = ModelSpec {
        hazard: dyadmnar::model::HazardSpec {
            current_outcome: true,
            ..model.hazard
        },
        ..model
    };
    let sampler = cfg.sampler_config()?;
    let grid = SensitivityGrid::default();
    let sweep = sensitivity_sweep(&panel, &model, &grid, &sampler)?;
    write_table(&common.out_dir, "phi_sweep", &sweep)?;
    let ig = ig_prior_sensitivity(&panel, &model, &grid.ig_settings, &sampler)?;
    write_table(&common.out_dir, "ig_priors", &ig)?;
    println!(
        "wrote phi sweep ({} settings) and inverse-gamma table ({} settings) to {}",
        sweep.settings.len(),
        ig.settings.len(),
        common.out_dir.display()
    );
    Ok(())
}

fn check(seed: u64) -> Outcome {
    let mut ok = true;
    println!("kernel checks (KS < 0.02, moments within 1%):");
    for c in oracle_suite(seed)? {
        let moments = c
            .moment_error
            .map_or(String::from("-"), |m| format!("{m:.4}"));
        println!(
            "  {:28} ks {:.4}  moments {:>6}  {}",
            c.name,
            c.ks,
            moments,
            if c.passed { "ok" } else { "FAIL" }
        );
        ok &= c.passed;
    }
    let base = GirConfig {
        seed,
        ..GirConfig::default()
    };
    let report = getting_it_right(&base)?;
    let z = report.max_abs_z();
    let pass = z < 4.0;
    println!(
        "joint-distribution test: max |z| = {z:.2} (< 4) {}",
        if pass { "ok" } else { "FAIL" }
    );
    ok &= pass;
    for fault in [
        FaultInjection::SigmaShapeOffByOne,
        FaultInjection::DropHazardFactor,
    ] {
        let r = getting_it_right(&GirConfig {
            fault: Some(fault),
            ..base.clone()
        })?;
        let z = r.max_abs_z();
        let detected = z >= 4.0;
        println!(
            "  with injected fault {fault:?}: max |z| = {z:.2} (>= 4) {}",
            if detected { "detected" } else { "NOT DETECTED" }
        );
        ok &= detected;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            common,
            variant,
            replicates,
            n_dyads,
        } => simulate(common, *variant, *replicates, *n_dyads),
        Command::Fit { common, panel } => fit(common, panel),
        Command::Replicate {
            common,
            variant,
            replicates,
            methods,
        } => replicate(common, *variant, *replicates, methods.as_deref()),
        Command::Sensitivity {
            common,
            panel,
            variant,
        } => sensitivity(common, panel.as_deref(), *variant),
        Command::Check { seed } => check(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => {
            eprintln!("correctness checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Sampler(e)) => {
            eprintln!("sampler aborted: {e}");
            ExitCode::from(3)
        }
    }
}
