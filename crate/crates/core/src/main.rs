use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use sidmrs::harness::{
    read_dataset, run_sweep, write_csv, write_dataset, write_json, DatasetHeader, DatasetRecord, Link, ReceiverKind,
    RunConfig,
};
use sidmrs::scenario::{DmrsScheme, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "sidmrs",
    version,
    about = "Uplink MU-MIMO link simulator with superimposed DMRS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an SNR sweep and write CSV (plus a JSON mirror next to it).
    Sweep(Common),
    /// Export simulated slots as a binary dataset, SNRs drawn from the sweep range.
    Export {
        #[command(flatten)]
        common: Common,
        /// Number of records.
        #[arg(long, default_value_t = 100)]
        records: usize,
    },
    /// Quick end-to-end sanity checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    receiver: Option<ReceiverKind>,
    #[arg(long)]
    scheme: Option<DmrsScheme>,
    #[arg(long, allow_hyphen_values = true)]
    snr_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_stop: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; `sweep` prints CSV to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn run_config(&self) -> anyhow::Result<RunConfig> {
        let mut run = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::from_config_text(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::new(ScenarioConfig::default())?,
        };
        if let Some(v) = self.receiver {
            run.receiver = v;
        }
        if let Some(v) = self.scheme {
            run.link.scenario.dmrs_scheme = v;
        }
        if let Some(v) = self.snr_start {
            run.snr_start = v;
        }
        if let Some(v) = self.snr_stop {
            run.snr_stop = v;
        }
        if let Some(v) = self.snr_step {
            run.snr_step = v;
        }
        if let Some(v) = self.drops {
            run.drops = v;
        }
        if let Some(v) = self.seed {
            run.link.scenario.master_seed = v;
        }
        run.validate()?;
        Ok(run)
    }
}

fn sweep(common: &Common) -> anyhow::Result<()> {
    let run = common.run_config()?;
    let link = Link::new(run.link.clone())?;
    let result = run_sweep(&link, run.receiver, &run.snr_points()?, run.drops)?;
    match &common.out {
        Some(path) => {
            write_csv(
                &result,
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )?;
            let json = path.with_extension("json");
            write_json(
                &result,
                File::create(&json).with_context(|| format!("creating {}", json.display()))?,
            )?;
            eprintln!("wrote {} and {}", path.display(), json.display());
        }
        None => write_csv(&result, io::stdout().lock())?,
    }
    Ok(())
}

fn export(common: &Common, records: usize) -> anyhow::Result<()> {
    let Some(path) = &common.out else {
        bail!("export needs --out");
    };
    let run = common.run_config()?;
    let link = Link::new(run.link.clone())?;
    let header = sidmrs::harness::export_dataset(&link, records, (run.snr_start, run.snr_stop), path)?;
    for (k, alist) in header.alist.iter().enumerate() {
        let p = alist_path(path, k);
        std::fs::write(&p, alist).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!(
        "wrote {} records of {} bytes to {}",
        header.record_count,
        header.record_bytes(),
        path.display()
    );
    Ok(())
}

fn alist_path(dataset: &Path, user: usize) -> PathBuf {
    let stem = dataset.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    dataset.with_file_name(format!("{stem}.user{user}.alist"))
}

fn selftest() -> anyhow::Result<bool> {
    let mut ok = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    for scheme in [DmrsScheme::Superimposed, DmrsScheme::Orthogonal, DmrsScheme::GenieCsi] {
        let mut run = RunConfig::new(ScenarioConfig::default())?;
        run.link.scenario.dmrs_scheme = scheme;
        let link = Link::new(run.link)?;
        let r = run_sweep(&link, ReceiverKind::GenieLmmse, &[60.0], 4)?;
        let p = &r.points[0];
        report(
            &format!("genie_{scheme}_noiseless"),
            p.bler == 0.0 && p.throughput == link.n_d() as f64 * 2.0,
            format!("bler={} throughput={}", p.bler, p.throughput),
        );
    }

    let link = Link::new(RunConfig::new(ScenarioConfig::default())?.link)?;
    let a = run_sweep(&link, ReceiverKind::Iterative, &[10.0, 20.0], 16)?;
    let b = run_sweep(&link, ReceiverKind::Iterative, &[10.0, 20.0], 16)?;
    report("sweep_reproducible", a == b, format!("{} points", a.points.len()));
    let bler = a.points[1].bler;
    report("iterative_qpsk_20db", bler <= 0.1, format!("bler={bler}"));

    let tx = link.transmit(0)?;
    let record = DatasetRecord::from_transmission(&link, &tx, 0.1)?;
    let sc = link.config().scenario.clone();
    let header = DatasetHeader {
        record_count: 1,
        scheme: sc.dmrs_scheme.name().into(),
        power_ratio: link.config().power_ratio,
        snr_db_range: (10.0, 10.0),
        drop_indices: vec![0],
        alist: vec![link.code(0).to_alist()],
        tensors: sidmrs::harness::record_tensors(&sc),
        scenario: sc,
    };
    let mut bytes = Vec::new();
    write_dataset(&header, std::slice::from_ref(&record), &mut bytes)?;
    let (h2, r2) = read_dataset(bytes.as_slice())?;
    report(
        "dataset_round_trip",
        h2 == header && r2 == [record],
        format!("{} bytes", bytes.len()),
    );
    io::stdout().flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(common) => sweep(common).map(|_| true),
        Command::Export { common, records } => export(common, *records).map(|_| true),
        Command::Selftest => selftest(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
