use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use ssb_sync::channel::rng::{stream_rng, STREAM_TRIAL};
use ssb_sync::channel::{apply_channel, read_iq, write_iq, IqMetadata};
use ssb_sync::harness::{emit_report, run_scenario_with, Pipeline, Receiver, Report, RunOptions, Scenario, StageValues};
use ssb_sync::waveform::{place_ssb_in_frame, ssb_waveform, CellId, PBCH_PAYLOAD_BITS};
use ssb_sync::{Error, Result};

use crate::config::{format_bits, parse_bits, CliConfig, Overrides};
use crate::EXIT_INTERRUPTED;

fn resolve(config: Option<&Path>, o: &Overrides) -> Result<CliConfig> {
    let mut c = CliConfig::load(config)?;
    c.apply(o);
    c.validate()?;
    Ok(c)
}

pub fn generate(config: Option<&Path>, o: &Overrides, out: &Path) -> Result<u8> {
    let c = resolve(config, o)?;
    let cfg = &c.frame;
    let mut rng = stream_rng(c.seed, STREAM_TRIAL);
    let n_id = rng.random_range(0..1008u16);
    let cell = CellId::from_n_id(c.cell_id.unwrap_or(n_id))?;
    let drawn: Vec<u8> = (0..PBCH_PAYLOAD_BITS).map(|_| rng.random_range(0..2u8)).collect();
    let payload = match &c.payload_bits {
        Some(s) => parse_bits(s)?,
        None => drawn,
    };

    let ssb = ssb_waveform(cell, &payload, cfg)?;
    let tx = place_ssb_in_frame(&ssb, cfg, 0)?;
    let mut channel = c.channel.clone();
    channel.seed = c.seed;
    let rx = apply_channel(&tx, &channel, cfg)?;

    let mut meta = IqMetadata::for_buffer(&rx, "two SSB periods, one SSB per period");
    meta.seed = Some(c.seed);
    meta.offset = Some(channel.timing_offset);
    meta.cell_id = Some(cell);
    meta.snr_db = channel.snr_db;
    meta.payload_bits = Some(format_bits(&payload));
    meta.frame = Some(*cfg);
    write_iq(out, &rx, &meta)?;
    println!(
        "wrote {} samples to {} (cell {}, offset {}, snr {})",
        rx.len(),
        out.display(),
        cell.n_id(),
        channel.timing_offset,
        channel.snr_db.map_or("none".to_string(), |s| format!("{s} dB"))
    );
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SearchReport {
    pipeline: Pipeline,
    seed: u64,
    tau_ssb: Option<usize>,
    cell_id: Option<u16>,
    n_id1: Option<u16>,
    n_id2: Option<u8>,
    pbch_crc_ok: Option<bool>,
    payload_bits: Option<String>,
    cfo_hz: Option<f64>,
    times_ms: StageValues<f64>,
    macs: StageValues<u64>,
}

pub fn search(
    config: Option<&Path>,
    o: &Overrides,
    input: &Path,
    pipeline: Pipeline,
    out: Option<&Path>,
) -> Result<u8> {
    let mut c = resolve(config, o)?;
    let (rx, meta) = read_iq(input)?;
    // Without a config file the capture's own frame description applies.
    if config.is_none() {
        if let Some(frame) = meta.frame {
            c.frame = frame;
            if o.delta_n.is_none() {
                c.search = None;
            }
            c.validate()?;
        }
    }
    if !rx.is_full_rate(&c.frame) {
        return Err(Error::Config {
            field: "frame",
            reason: format!(
                "capture rate {} Hz differs from the configured {} Hz",
                rx.rate_hz, c.frame.sample_rate_hz
            ),
        });
    }
    let mut receiver = Receiver::new(&rx, &c.frame, &c.params(), c.discard_gap)?;
    let run = receiver.run(pipeline)?;
    let report = SearchReport {
        pipeline,
        seed: c.seed,
        tau_ssb: run.tau_ssb,
        cell_id: run.cell_id.map(|c| c.n_id()),
        n_id1: run.cell_id.map(|c| c.n_id1()),
        n_id2: run.n_id2,
        pbch_crc_ok: run.pbch.as_ref().map(|p| p.crc_ok),
        payload_bits: run.pbch.as_ref().map(|p| format_bits(&p.payload_bits)),
        cfo_hz: run.cfo_hz,
        times_ms: run.times_ms,
        macs: run.macs,
    };

    let show = |v: Option<String>| v.unwrap_or_else(|| "not found".into());
    println!("pipeline: {pipeline}");
    println!("seed:     {}", c.seed);
    println!("tau_ssb:  {}", show(report.tau_ssb.map(|t| t.to_string())));
    println!("cell id:  {}", show(report.cell_id.map(|t| t.to_string())));
    let verdict = match report.pbch_crc_ok {
        Some(true) => "crc ok".to_string(),
        Some(false) => "crc failed".to_string(),
        None => "not decoded".to_string(),
    };
    println!("pbch:     {verdict}");
    println!("{:<12} {:>10} {:>14}", "stage", "ms", "complex MACs");
    for ((name, ms), (_, macs)) in run.times_ms.entries().into_iter().zip(run.macs.entries()) {
        println!("{name:<12} {ms:>10.3} {macs:>14}");
    }

    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&report).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(0)
}

pub struct BenchArgs {
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
    pub snr: Option<f64>,
    pub trials: Option<usize>,
}

fn load_scenario(arg: Option<&str>, c: &CliConfig) -> Result<Scenario> {
    match arg {
        Some(name) => match Scenario::builtin(name) {
            Some(s) if !Path::new(name).exists() => Ok(s),
            _ => Scenario::load(Path::new(name)),
        },
        None => c.scenario.clone().ok_or_else(|| Error::Config {
            field: "scenario",
            reason: "give a scenario file, a built-in name or a `scenario` entry in the config".into(),
        }),
    }
}

pub fn bench(config: Option<&Path>, o: &Overrides, args: &BenchArgs) -> Result<u8> {
    let c = resolve(config, o)?;
    let mut s = load_scenario(args.scenario.as_deref(), &c)?;
    if let Some(seed) = o.seed {
        s.seed = seed;
    }
    if let Some(d) = o.delta_n {
        s.params.delta_n = d;
    }
    if let Some(snr) = args.snr {
        s.snr_grid_db = vec![Some(snr)];
    }
    if let Some(n) = args.trials {
        s.n_trials = n;
    }
    s.validate()?;

    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("results").join(&s.name));
    let cancel = Arc::new(AtomicBool::new(false));
    {
        let cancel = Arc::clone(&cancel);
        // A second handler cannot be installed in the same process; ignore.
        let _ = ctrlc::set_handler(move || cancel.store(true, Ordering::Relaxed));
    }
    let flush = |r: &Report| {
        if let Err(e) = emit_report(r, &dir) {
            eprintln!("warning: partial flush failed: {e}");
        }
    };
    let opts = RunOptions {
        workers: c.workers,
        cancel: Some(&cancel),
        on_point: Some(&flush),
    };
    let report = run_scenario_with(&s, &opts)?;
    let paths = emit_report(&report, &dir)?;
    print_summary(&report);
    println!("reports written to {}", paths.json.parent().unwrap_or(&dir).display());
    if report.interrupted {
        eprintln!("interrupted after {} trials; partial results flushed", report.completed_trials);
        return Ok(EXIT_INTERRUPTED);
    }
    Ok(0)
}

fn print_summary(r: &Report) {
    println!(
        "scenario {} (seed {}, {} trials completed)",
        r.scenario.name, r.scenario.seed, r.completed_trials
    );
    println!("{:>8} {:>7} {:<9} {:>11} {:>9}", "snr_db", "drift", "pipeline", "cellid_fail", "pbch_fail");
    for p in &r.points {
        let snr = p.snr_db.map_or("none".to_string(), |s| format!("{s:.1}"));
        for q in &p.pipelines {
            println!(
                "{snr:>8} {:>7.1} {:<9} {:>11.4} {:>9.4}",
                p.drift_samples, q.pipeline, q.cellid_fail_rate, q.pbch_fail_rate
            );
        }
    }
    println!();
    println!("{:<9} {:<11} {:>10} {:>14}", "pipeline", "stage", "mean_ms", "mean_macs");
    for t in &r.timing {
        println!("{:<9} {:<11} {:>10.3} {:>14.0}", t.pipeline, t.stage, t.mean_ms, t.mean_macs);
    }
    match r.mac_ratio {
        Some(x) => println!("MAC ratio proposed/baseline: {x:.6}"),
        None => println!("MAC ratio proposed/baseline: n/a"),
    }
}
