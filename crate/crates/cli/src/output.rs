//! Report assembly: summary lines, the JSON report with its manifest, and CSV tables.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::Global;

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Default)]
pub struct Output {
    pub summary: Vec<String>,
    pub report: Value,
    pub table: Option<Table>,
    /// Input files as `(path, bytes)`, hashed into the manifest.
    pub inputs: Vec<(String, Vec<u8>)>,
}

fn is_stdout(p: &Option<std::path::PathBuf>) -> bool {
    p.as_deref() == Some(Path::new("-"))
}

fn write_to(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        return out.write_all(bytes).map_err(|e| CliError::usage(format!("stdout: {e}")));
    }
    std::fs::write(path, bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn manifest(g: &Global, subcommand: &str, args: &[String], inputs: &[(String, Vec<u8>)]) -> Value {
    let inputs: Vec<Value> = inputs
        .iter()
        .map(|(p, b)| {
            let digest: String = Sha256::digest(b).iter().map(|x| format!("{x:02x}")).collect();
            json!({"path": p, "sha256": digest})
        })
        .collect();
    json!({
        "tool": "nilwalk",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "args": args,
        "inputs": inputs,
        "seed": g.seed,
        "cap": g.cap,
    })
}

pub fn emit(g: &Global, subcommand: &str, args: &[String], out: Output) -> Result<(), CliError> {
    let quiet = is_stdout(&g.out) || is_stdout(&g.csv);
    for line in &out.summary {
        if quiet {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
    if let Some(path) = &g.out {
        let doc = json!({"manifest": manifest(g, subcommand, args, &out.inputs), "report": out.report});
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        write_to(path, text.as_bytes())?;
    }
    if let Some(path) = &g.csv {
        let table = out.table.ok_or_else(|| CliError::usage(format!("{subcommand} has no CSV output")))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::usage(format!("csv: {e}"));
        w.write_record(&table.header).map_err(fail)?;
        for r in &table.rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
        write_to(path, &bytes)?;
    }
    Ok(())
}
