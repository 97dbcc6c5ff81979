use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use gwdc::audio::{read_wav, write_wav, SampleFormat};
use gwdc::container::{
    decode_signal, parse_header, rate_control_search, Encoder, RateTarget, SearchOptions,
};
use gwdc::dictionary::{DictionaryConfig, PrototypeAtom};
use gwdc::metrics::{
    align_reference, compression_ratio, format_db, sparsity_summary, summary_to_csv, QualityReport,
};
use gwdc::pursuit::StopRule;
use serde::Deserialize;

use crate::args::{DecodeArgs, DumpHeaderArgs, EncodeArgs, MetricsArgs, SummaryArgs};
use crate::Status;

#[derive(Debug, Deserialize)]
struct PrototypeEntry {
    label: String,
    samples: Vec<f64>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn load_prototypes(path: &Path) -> Result<Vec<PrototypeAtom>> {
    let text = read(path)?;
    let entries: Vec<PrototypeEntry> = serde_json::from_slice(&text)
        .map_err(|e| gwdc::Error::Input(format!("{}: {e}", path.display())))?;
    Ok(entries
        .into_iter()
        .map(|p| PrototypeAtom::new(p.label, p.samples))
        .collect::<gwdc::Result<_>>()?)
}

fn print_quality(report: &QualityReport) {
    println!("snr_db={}", format_db(report.snr_db));
    println!("mean_snr_db={}", format_db(report.mean_snr_db));
    match report.std_snr_db {
        Some(std) => println!("std_snr_db={}", format_db(std)),
        None => println!("std_snr_db=nan"),
    }
    let skipped = report.block_snr_db.iter().filter(|v| v.is_none()).count();
    if skipped > 0 {
        println!("skipped_blocks={skipped}");
    }
    if let Some(cr) = report.cr {
        println!("cr={cr:.6}");
    }
}

pub fn encode(args: &EncodeArgs) -> Result<Status> {
    let input = read(&args.input)?;
    let signal = read_wav(&input)?;
    let mut config = DictionaryConfig::with_redundancy(args.block_size, args.redundancy);
    if let Some(path) = &args.prototypes {
        config.prototypes = load_prototypes(path)?;
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let encoder = Encoder::new(config)?.with_workers(workers);

    let target = match (args.target_snr, args.target_mean_snr, args.rho_db, args.rho) {
        (Some(db), ..) => RateTarget::MatchSnr {
            target_db: db,
            tolerance_db: args.tolerance,
        },
        (_, Some(db), ..) => RateTarget::MatchMeanSnr {
            target_db: db,
            tolerance_db: args.tolerance,
        },
        (_, _, Some(db), _) => RateTarget::Fixed {
            stop: StopRule::block_snr_db(db),
            delta: args.delta,
        },
        (_, _, _, Some(rho)) => RateTarget::Fixed {
            stop: StopRule::residual_norm(rho),
            delta: args.delta,
        },
        _ => unreachable!("clap requires one mode"),
    };
    let outcome = rate_control_search(
        &encoder,
        &signal.samples,
        signal.sample_rate,
        &target,
        &SearchOptions::default(),
    )?;
    write(&args.output, &outcome.encoded.bytes)?;

    let cr = compression_ratio(input.len() as u64, outcome.encoded.bytes.len() as u64)?;
    let silent = signal.samples.iter().all(|&x| x == 0.0);
    if silent {
        println!("snr_db=inf");
        println!("mean_snr_db=inf");
        println!("std_snr_db=nan");
        println!("cr={cr:.6}");
    } else {
        let report = QualityReport::evaluate(
            &signal.samples,
            &outcome.encoded.reconstruction,
            args.block_size,
        )?
        .with_cr(input.len() as u64, outcome.encoded.bytes.len() as u64)?;
        print_quality(&report);
        if let Some(path) = &args.csv {
            write(path, report.to_csv().as_bytes())?;
        }
    }
    println!("atoms={}", outcome.encoded.atom_count());
    println!("blocks={}", outcome.encoded.quantized.len());
    println!("delta={:.6e}", outcome.delta);
    if let Some(g) = outcome.quality_db {
        println!("quality_db={}", format_db(g));
    }
    println!("bytes={}", outcome.encoded.bytes.len());
    println!("steps={}", outcome.steps);
    println!("converged={}", outcome.converged);
    if outcome.converged {
        Ok(Status::Ok)
    } else {
        log::error!(
            "target not reached; best result written to {}",
            args.output.display()
        );
        Ok(Status::NotConverged)
    }
}

pub fn decode(args: &DecodeArgs) -> Result<Status> {
    let format = SampleFormat::pcm(args.bit_depth)?;
    let decoded = decode_signal(&read(&args.input)?)?;
    let wav = write_wav(&decoded.samples, decoded.sample_rate, format)?;
    if wav.clipped > 0 {
        log::warn!("{} samples clipped to [-1, 1]", wav.clipped);
    }
    write(&args.output, &wav.bytes)?;
    println!("samples={}", decoded.samples.len());
    println!("sample_rate={}", decoded.sample_rate);
    println!("clipped={}", wav.clipped);
    Ok(Status::Ok)
}

pub fn metrics(args: &MetricsArgs) -> Result<Status> {
    let original_bytes = read(&args.original)?;
    let original = read_wav(&original_bytes)?;
    let test = read_wav(&read(&args.test)?)?;
    if original.samples.len() != test.samples.len() {
        return Err(gwdc::Error::Dimension {
            expected: original.samples.len(),
            found: test.samples.len(),
        }
        .into());
    }
    let mut candidate = test.samples;
    if args.align {
        let fit = align_reference(&original.samples, &candidate)?;
        println!("shift={}", fit.shift);
        println!("scale={:.6}", fit.scale);
        println!("offset={:.6}", fit.offset);
        candidate = fit.aligned;
    }
    let mut report = QualityReport::evaluate(&original.samples, &candidate, args.block_size)?;
    if let Some(path) = &args.compressed {
        let size = fs::metadata(path)
            .with_context(|| format!("cannot stat {}", path.display()))?
            .len();
        report = report.with_cr(original_bytes.len() as u64, size)?;
    }
    print_quality(&report);
    if let Some(path) = &args.csv {
        write(path, report.to_csv().as_bytes())?;
    }
    Ok(Status::Ok)
}

pub fn summary(args: &SummaryArgs) -> Result<Status> {
    let decoded = decode_signal(&read(&args.input)?)?;
    let block_size = decoded.header.block_size as usize;
    let points = sparsity_summary(decoded.blocks.iter().map(|b| b.len()), block_size)?;
    write(&args.output, summary_to_csv(&points).as_bytes())?;
    println!("points={}", points.len());
    println!(
        "atoms={}",
        decoded.blocks.iter().map(|b| b.len()).sum::<usize>()
    );
    Ok(Status::Ok)
}

pub fn dump_header(args: &DumpHeaderArgs) -> Result<Status> {
    let header = parse_header(&read(&args.input)?)?;
    print!("{}", header.describe());
    Ok(Status::Ok)
}
