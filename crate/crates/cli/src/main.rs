use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use triage_cli::output::{write_table, Meta};
use triage_cli::sweep::{Effort, RocSweepSpec, SweepSpec};
use triage_cli::{compare, estimate, oracle, sweep, synth, Config, ParameterFile};
use triage_core::estimation::ingest_exam_log;
use triage_core::{Error, Preemption, Result};

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Reading-queue time-savings of AI triage devices")]
struct Cli {
    /// Master seed of every random stream.
    #[arg(long, global = true, default_value_t = 20240601)]
    seed: u64,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// 20 trials of 20,000 patients instead of 100 of 100,000.
    #[arg(long, global = true)]
    quick: bool,
    /// Directory receiving the output tables.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct EffortArgs {
    /// Trials per grid point; overrides the effort preset.
    #[arg(long)]
    trials: Option<usize>,
    /// Patients per trial; overrides the effort preset.
    #[arg(long)]
    patients: Option<usize>,
}

impl EffortArgs {
    fn resolve(&self, quick: bool) -> Effort {
        let base = Effort::select(quick);
        Effort { n_trials: self.trials.unwrap_or(base.n_trials), n_patients: self.patients.unwrap_or(base.n_patients) }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate workflow parameters from timestamp logs.
    Estimate {
        /// Exam log CSV.
        #[arg(long)]
        exam_log: PathBuf,
        /// Case-closure log; without it only exam-log fields are estimated.
        #[arg(long)]
        closure_log: Option<PathBuf>,
    },
    /// Savings over an inter-arrival by radiologist-count grid.
    Sweep {
        /// Parameter file; the published inputs when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Comma-separated mean inter-arrival times in minutes.
        #[arg(long, value_delimiter = ',')]
        interarrival: Option<Vec<f64>>,
        /// Comma-separated radiologist counts.
        #[arg(long, value_delimiter = ',')]
        radiologists: Option<Vec<u32>>,
        #[command(flatten)]
        effort: EffortArgs,
    },
    /// Savings along the device's bi-normal ROC curve.
    RocSweep {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Evenly spaced raw FPF values from 0 to 1.
        #[arg(long, default_value_t = 51)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        radiologists: u32,
        #[arg(long, default_value_t = 2.17)]
        interarrival: f64,
        /// Out-of-scope to non-diseased target ratio; the parameter file's by default.
        #[arg(long)]
        ratio: Option<f64>,
        #[command(flatten)]
        effort: EffortArgs,
    },
    /// Analytic priority-queue waits, optionally against simulation.
    Oracle {
        /// Number of radiologists.
        #[arg(long)]
        servers: u32,
        /// Utilization per radiologist.
        #[arg(long)]
        rho: f64,
        /// Fraction of exams flagged.
        #[arg(long)]
        flag_fraction: f64,
        /// Mean read time, equal for both classes.
        #[arg(long, default_value_t = 1.0)]
        service_mean: f64,
        /// Flagged exams interrupt unflagged reads.
        #[arg(long)]
        preemptive: bool,
        /// Also simulate and report z-scores.
        #[arg(long)]
        compare: bool,
        #[arg(long, default_value_t = 100_000)]
        patients: usize,
        /// Leading exams excluded from simulated means.
        #[arg(long, default_value_t = 1_000)]
        burn_in: usize,
    },
    /// Observed diseased-exam TAT before and after deployment.
    Compare {
        /// Exam log CSV.
        #[arg(long)]
        exam_log: PathBuf,
        /// Overrides `periods.ai_deployed_on` of the config.
        #[arg(long)]
        deployed_on: Option<NaiveDate>,
    },
    /// Write a synthetic exam log and closure log.
    Synth {
        #[arg(long, value_enum)]
        preset: synth::Preset,
    },
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    let out = cli.out.as_path();
    let load_params = |p: &Option<PathBuf>| ParameterFile::load(p.as_deref());
    match &cli.command {
        Command::Estimate { exam_log, closure_log } => {
            let report = estimate::estimate(exam_log, closure_log.as_deref(), &cfg)?;
            std::fs::create_dir_all(out)?;
            std::fs::write(out.join("parameters.toml"), report.params.to_toml())?;
            let meta = Meta::new("estimate")
                .with("exam_log", file_name(exam_log))
                .with("closure_log", closure_log.as_deref().map(file_name));
            write_table(out, "interarrival_fits", &report.fits_table(), &meta)?;
            if !report.params.missing_fields.is_empty() {
                log::warn!("not estimated: {}", report.params.missing_fields.join(", "));
            }
        }
        Command::Sweep { params, interarrival, radiologists, effort } => {
            let p = load_params(params)?;
            let mut spec = SweepSpec::new(cli.seed, cli.quick);
            spec.effort = effort.resolve(cli.quick);
            if let Some(g) = interarrival {
                spec.interarrival_grid = g.clone();
            }
            if let Some(g) = radiologists {
                spec.radiologist_grid = g.clone();
            }
            let sim = cfg.sim_config();
            let rows = sweep::sweep(&p, &spec, &sim)?;
            write_table(out, "sweep", &sweep::sweep_table(&rows), &sweep::sweep_meta(&spec, &sim))?;
        }
        Command::RocSweep { params, points, radiologists, interarrival, ratio, effort } => {
            let p = load_params(params)?;
            let spec = RocSweepSpec {
                n_points: *points,
                n_radiologists: *radiologists,
                interarrival: *interarrival,
                ncct_to_npp_ratio: match ratio {
                    Some(r) => *r,
                    None => p.ncct_to_npp_ratio()?,
                },
                slope: cfg.roc.slope,
                effort: effort.resolve(cli.quick),
                master_seed: cli.seed,
            };
            let sim = cfg.sim_config();
            let rows = sweep::roc_sweep(&p, &spec, &sim)?;
            write_table(out, "roc_sweep", &sweep::roc_table(&rows), &sweep::roc_meta(&spec, &sim))?;
        }
        Command::Oracle { servers, rho, flag_fraction, service_mean, preemptive, compare, patients, burn_in } => {
            let load = oracle::LoadSpec {
                n_radiologists: *servers,
                rho: *rho,
                flag_fraction: *flag_fraction,
                service_mean: *service_mean,
                preemption: if *preemptive { Preemption::PreemptiveResume } else { Preemption::NonPreemptive },
            };
            let cmp = compare.then_some((*patients, cli.seed));
            let rows = oracle::oracle(&load, cmp, *burn_in)?;
            write_table(out, "oracle", &oracle::oracle_table(&rows), &oracle::oracle_meta(&load, cmp, *burn_in))?;
        }
        Command::Compare { exam_log, deployed_on } => {
            let date = deployed_on.or(cfg.periods.ai_deployed_on).ok_or_else(|| {
                Error::Parameter("compare needs --deployed-on or periods.ai_deployed_on in the config".into())
            })?;
            let file = triage_cli::output::read_file(exam_log, "exam log")?;
            let ingest = ingest_exam_log(std::io::BufReader::new(file), cfg.delimiter())?;
            let rows = compare::compare(&ingest.records, &cfg.calendar()?, date)?;
            write_table(out, "compare", &compare::compare_table(&rows), &compare::compare_meta(date))?;
        }
        Command::Synth { preset } => synth::write_corpus(*preset, cli.seed, &cfg, out)?,
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
