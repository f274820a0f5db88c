//! Writes a synthetic raw-report archive as JSONL, ready for `patharchive ingest`.
//!
//! cargo run --example synth_archive -- reports.jsonl 500

use std::io::Write;

use patharchive::synth::{generate_reports, SynthOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "reports.jsonl".into());
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let reports = generate_reports(n, 7, &SynthOptions::default());
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    for r in &reports {
        writeln!(out, "{}", serde_json::to_string(&r.raw)?)?;
    }
    println!("wrote {n} reports to {path}");
    println!("--- {} ---\n{}", reports[0].raw.report_id, reports[0].raw.raw_text);
    Ok(())
}
