//! The `cclab` command line: generation, solving, verification, quotients and reports.

pub mod oracle;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::examples::{generate, ExampleKind, ExampleSpec};
use crate::io::{certificate_from_json, certificate_to_json, instance_to_json, structure_from_json, structure_to_json};
use crate::measures::{
    dichotomy_solve, tower_limit, verify_certificate, CertificateKind, LimitStatus, Schedule, SolveOptions, TowerLimit,
};
use crate::model::{quotient_by, FiniteSubrelation, Instance, Mode, Structure};
use crate::rational::{fmt_q, parse_q, Q};

pub const REPORT_SCHEMA: &str = "cclab.run/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MALFORMED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cclab", version, about = "Invariant measures and compressions of cocycles on finite data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated instance or tower.
    Gen {
        kind: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        p: Option<String>,
        #[arg(long, default_value_t = 1)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Produce a measure or compression certificate.
    Solve {
        file: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Comma-separated convex weights over classes.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Check a certificate against its instance or tower.
    Verify { file: PathBuf, cert: PathBuf },
    /// Write the quotient by `classes`, `identity` or blocks like `a,b;c,d`.
    Quotient {
        file: PathBuf,
        #[arg(long)]
        subrel: String,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Summarise level measures and convergence.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Conditional,
    Invalid,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    /// SHA-256 of the input files in argument order, or of the written file for `gen`.
    pub input_digest: Option<String>,
    pub certificate_kind: Option<CertificateKind>,
    pub verification: Option<Verdict>,
    pub timing_ms: f64,
    pub inconclusive: Vec<String>,
    pub messages: Vec<String>,
    pub exit_code: i32,
}

impl RunReport {
    fn new(command: &str) -> Self {
        RunReport {
            schema: REPORT_SCHEMA,
            command: command.to_string(),
            input_digest: None,
            certificate_kind: None,
            verification: None,
            timing_ms: 0.0,
            inconclusive: Vec::new(),
            messages: Vec::new(),
            exit_code: EXIT_OK,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: RunReport,
    /// Text for standard output.
    pub stdout: String,
}

fn digest(chunks: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for c in chunks {
        h.update(c);
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn env_mode() -> Result<Option<Mode>> {
    match std::env::var("CCLAB_MODE") {
        Ok(v) if !v.is_empty() => Ok(Some(v.parse()?)),
        _ => Ok(None),
    }
}

fn load(path: &Path, mode: Option<Mode>) -> Result<(Vec<u8>, Structure)> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Malformed(format!("{} is not UTF-8", path.display())))?;
    Ok((bytes.clone(), structure_from_json(text, mode)?))
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Inconclusive(_) => EXIT_INVALID,
        _ => EXIT_MALFORMED,
    }
}

/// Parses `argv` (program name first) and runs one command.
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let start = Instant::now();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
            let mut report = RunReport::new("parse");
            report.exit_code = code;
            report.messages.push(e.to_string());
            return Outcome { code, report, stdout: if code == EXIT_OK { e.to_string() } else { String::new() } };
        }
    };
    let name = match &cli.command {
        Command::Gen { .. } => "gen",
        Command::Solve { .. } => "solve",
        Command::Verify { .. } => "verify",
        Command::Quotient { .. } => "quotient",
        Command::Report { .. } => "report",
    };
    let mut report = RunReport::new(name);
    let mut stdout = None;
    let result = env_mode().and_then(|mode| execute(cli.command, mode, &mut report, &mut stdout));
    if let Err(e) = result {
        report.exit_code = exit_code_for(&e);
        match e {
            Error::Inconclusive(reasons) => report.inconclusive = reasons,
            other => report.messages.push(other.to_string()),
        }
    }
    report.timing_ms = start.elapsed().as_secs_f64() * 1000.0;
    let stdout = stdout.unwrap_or_else(|| serde_json::to_string_pretty(&report).expect("serialisable") + "\n");
    Outcome { code: report.exit_code, report, stdout }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(cmd: Command, mode: Option<Mode>, report: &mut RunReport, stdout: &mut Option<String>) -> Result<()> {
    match cmd {
        Command::Gen { kind, levels, p, classes, seed, output } => {
            let spec = ExampleSpec {
                kind: kind.parse::<ExampleKind>()?,
                levels,
                classes,
                p: p.as_deref().map(parse_q).transpose()?,
                seed,
            };
            let mut s = generate(&spec)?;
            if let Some(m) = mode {
                s = structure_from_json(&structure_to_json(&s)?, Some(m))?;
            }
            let text = structure_to_json(&s)?;
            write_file(&output, &text)?;
            report.input_digest = Some(digest(&[text.as_bytes()]));
            report.messages.push(format!("wrote {}", output.display()));
        }
        Command::Solve { file, output, weights } => {
            let (bytes, s) = load(&file, mode)?;
            report.input_digest = Some(digest(&[&bytes]));
            let class_weights = match weights {
                None => None,
                Some(w) => Some(w.split(',').map(|v| parse_q(v.trim())).collect::<Result<Vec<Q>>>()?),
            };
            let opts = SolveOptions { class_weights, ..Default::default() };
            let cert = dichotomy_solve(s.domain(), &opts)?;
            report.certificate_kind = Some(cert.kind());
            report.messages.push(format!("route: {}", cert.route));
            let v = verify_certificate(s.domain(), &cert)?;
            report.verification = Some(verdict(v.valid, v.conditional));
            report.messages.extend(v.messages);
            if let Some(out) = output {
                write_file(&out, &certificate_to_json(s.domain(), &cert)?)?;
            }
            if !v.valid {
                report.exit_code = EXIT_INVALID;
            }
        }
        Command::Verify { file, cert } => {
            let (bytes, s) = load(&file, mode)?;
            let cert_bytes = std::fs::read(&cert)?;
            report.input_digest = Some(digest(&[&bytes, &cert_bytes]));
            let text =
                std::str::from_utf8(&cert_bytes).map_err(|_| Error::Malformed("certificate is not UTF-8".into()))?;
            let c = certificate_from_json(s.domain(), text)?;
            report.certificate_kind = Some(c.kind());
            let v = verify_certificate(s.domain(), &c)?;
            report.verification = Some(verdict(v.valid, v.conditional));
            report.messages.extend(v.messages);
            if !v.valid {
                report.exit_code = EXIT_INVALID;
            }
        }
        Command::Quotient { file, subrel, output } => {
            let (bytes, s) = load(&file, mode)?;
            report.input_digest = Some(digest(&[&bytes]));
            let inst = s.top();
            let f = parse_subrelation(inst, &subrel)?;
            let qt = quotient_by(inst, &f)?;
            write_file(&output, &instance_to_json(&qt.instance)?)?;
            report.messages.push(format!("{} blocks written to {}", f.len(), output.display()));
        }
        Command::Report { files, json, csv } => {
            let mut chunks = Vec::new();
            let mut text = String::new();
            let mut summaries = Vec::new();
            let mut rows = String::from("file,level,set,min,max\n");
            for path in &files {
                let (bytes, s) = load(path, mode)?;
                chunks.push(bytes);
                let summary = summarize(&path.display().to_string(), &s)?;
                text.push_str(&summary.text());
                summary.csv_rows(&mut rows);
                summaries.push(summary);
            }
            let refs: Vec<&[u8]> = chunks.iter().map(|c| c.as_slice()).collect();
            report.input_digest = Some(digest(&refs));
            if let Some(p) = json {
                write_file(&p, &(serde_json::to_string_pretty(&summaries)? + "\n"))?;
            }
            if let Some(p) = csv {
                write_file(&p, &rows)?;
            }
            *stdout = Some(text);
        }
    }
    Ok(())
}

fn verdict(valid: bool, conditional: bool) -> Verdict {
    match (valid, conditional) {
        (false, _) => Verdict::Invalid,
        (true, true) => Verdict::Conditional,
        (true, false) => Verdict::Valid,
    }
}

/// `classes`, `identity`, or `;`-separated blocks of `,`-separated point names;
/// unlisted points become singletons.
pub fn parse_subrelation(inst: &Instance, spec: &str) -> Result<FiniteSubrelation> {
    match spec.trim() {
        "classes" => Ok(FiniteSubrelation::whole_classes(inst)),
        "identity" => Ok(FiniteSubrelation::identity(inst.len())),
        blocks => {
            let mut seen = vec![false; inst.len()];
            let mut out = Vec::new();
            for b in blocks.split(';').filter(|b| !b.trim().is_empty()) {
                let mut ids = Vec::new();
                for name in b.split(',') {
                    let x = inst.id(name.trim())?;
                    if seen[x] {
                        return Err(Error::MultiplyAssigned(name.trim().to_string()));
                    }
                    seen[x] = true;
                    ids.push(x);
                }
                out.push(ids);
            }
            out.extend((0..inst.len()).filter(|&x| !seen[x]).map(|x| vec![x]));
            FiniteSubrelation::from_blocks(inst, out)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SetRow {
    pub level: usize,
    pub set: String,
    pub min: String,
    pub max: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitRow {
    pub set: String,
    pub status: String,
    pub value: Option<String>,
    pub bound: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub file: String,
    pub levels: usize,
    pub points: Vec<usize>,
    pub classes: Vec<usize>,
    /// Top-level class masses relative to each basepoint.
    pub class_masses: Vec<String>,
    pub values: Vec<SetRow>,
    pub limits: Vec<LimitRow>,
    pub defects: Vec<String>,
}

impl Summary {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== {} ==", self.file);
        let _ = writeln!(s, "levels: {}", self.levels);
        for (n, (p, c)) in self.points.iter().zip(&self.classes).enumerate() {
            let _ = writeln!(s, "  level {n}: {p} points, {c} classes");
        }
        let _ = writeln!(s, "top class masses: {}", self.class_masses.join(" "));
        if !self.values.is_empty() {
            let _ = writeln!(s, "{:<6} {:<12} {:>14} {:>14}", "level", "set", "min", "max");
            for r in &self.values {
                let _ = writeln!(s, "{:<6} {:<12} {:>14} {:>14}", r.level, r.set, r.min, r.max);
            }
        }
        for l in &self.limits {
            match (&l.value, &l.bound) {
                (Some(v), Some(b)) => {
                    let _ = writeln!(s, "limit {}: {} (+/- {})", l.set, v, b);
                }
                _ => {
                    let _ = writeln!(s, "limit {}: {}", l.set, l.status);
                }
            }
        }
        for d in &self.defects {
            let _ = writeln!(s, "defect {d}");
        }
        s
    }

    fn csv_rows(&self, out: &mut String) {
        for r in &self.values {
            let _ = writeln!(out, "{},{},{},{},{}", self.file, r.level, r.set, r.min, r.max);
        }
    }
}

pub fn summarize(file: &str, s: &Structure) -> Result<Summary> {
    let mut summary = Summary {
        file: file.to_string(),
        levels: 1,
        points: vec![s.top().len()],
        classes: vec![s.top().num_classes()],
        class_masses: (0..s.top().num_classes()).map(|c| fmt_q(&s.top().class_mass(c))).collect(),
        values: Vec::new(),
        limits: Vec::new(),
        defects: Vec::new(),
    };
    let Structure::Tower(t) = s else { return Ok(summary) };
    summary.levels = t.num_levels();
    summary.points = t.levels().iter().map(|l| l.len()).collect();
    summary.classes = t.levels().iter().map(|l| l.num_classes()).collect();
    if t.algebra(t.top_index()).is_empty() {
        return Ok(summary);
    }
    let lim: TowerLimit = tower_limit(t, &Schedule::default())?;
    for lr in &lim.levels {
        for (name, v) in &lr.values {
            summary.values.push(SetRow { level: lr.level, set: name.clone(), min: fmt_q(&v.min), max: fmt_q(&v.max) });
        }
    }
    for (name, st) in &lim.limits {
        let row = match st {
            LimitStatus::Declared { value, bound, .. } => LimitRow {
                set: name.clone(),
                status: "declared".into(),
                value: Some(fmt_q(value)),
                bound: Some(fmt_q(bound)),
            },
            LimitStatus::TopOnly => {
                LimitRow { set: name.clone(), status: "top level only".into(), value: None, bound: None }
            }
            LimitStatus::Inconclusive(why) => {
                LimitRow { set: name.clone(), status: format!("inconclusive: {why}"), value: None, bound: None }
            }
        };
        summary.limits.push(row);
    }
    for d in &lim.defects {
        summary.defects.push(format!(
            "{}: prefix {} margin {} trend {} certified {}",
            d.family,
            d.prefix,
            fmt_q(&d.margin),
            d.trend,
            d.certified
        ));
    }
    Ok(summary)
}
