//! The `arbcheck` command line: argument parsing and command execution with
//! injectable output streams, so tests can drive it without a subprocess.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use arbcheck_core::detector::{self, ArbitrageReport};
use arbcheck_core::io::document::{parse_model, serialize_model, Certificate};
use arbcheck_core::io::generator::{generate, GeneratorConfig, GeneratorMode, RationalRange};
use arbcheck_core::pricing::{self, Construction};
use arbcheck_core::rational::{parse_rational, Display as Q};
use arbcheck_core::verify::{self, Location, VerificationReport};
use arbcheck_core::MarketModel;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ARBITRAGE: i32 = 10;
pub const EXIT_VERIFY_FAILED: i32 = 11;

/// Environment variable naming the directory for certificates written by
/// `check` when `--output` is absent.
pub const OUTPUT_DIR_VAR: &str = "ARBCHECK_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "arbcheck",
    version,
    about = "Exact arbitrage checks for event-tree markets with bid-ask spreads"
)]
pub struct Cli {
    /// Output format for verdicts and reports.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Decide arbitrage and write the certificate (exit 0 no arbitrage, 10 arbitrage).
    Check {
        model: PathBuf,
        /// Certificate path; defaults to `<stem>.<kind>.json` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Default certificate directory.
        #[arg(long, env = OUTPUT_DIR_VAR, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Print an equivalent martingale triple, or the arbitrage certificate when none exists.
    FindTriple {
        model: PathBuf,
        /// Write the certificate here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-verify a certificate against its model (exit 0 pass, 11 fail).
    Verify { model: PathBuf, certificate: PathBuf },
    /// Draw a random model.
    Generate {
        /// Equal seeds give identical models.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Horizon, `N` or `MIN..MAX`.
        #[arg(long, default_value = "1..3", value_parser = parse_count_range)]
        horizon: (usize, usize),
        /// Children per node, `N` or `MIN..MAX`.
        #[arg(long, default_value = "1..3", value_parser = parse_count_range)]
        branching: (usize, usize),
        /// Relative spread, a rational or `MIN..MAX`.
        #[arg(long, default_value = "0..0.05", value_parser = parse_rational_range)]
        spread: RationalRange,
        /// Credit minus deposit rate, a rational or `MIN..MAX`.
        #[arg(long, default_value = "0..0.02", value_parser = parse_rational_range)]
        rate_gap: RationalRange,
        /// `arbitrage-prone` shrinks spreads and rate gaps toward zero; `wide-spread` draws spreads between the spread maximum and three times it.
        #[arg(long, value_enum, default_value_t = Mode::Unconstrained)]
        mode: Mode,
        /// Write the model here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check every model and verify the dichotomy (exit 0 all pass, 11 any fail, 2 any unreadable).
    Report {
        #[arg(required = true)]
        models: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Unconstrained,
    ArbitrageProne,
    WideSpread,
}

impl From<Mode> for GeneratorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Unconstrained => GeneratorMode::Unconstrained,
            Mode::ArbitrageProne => GeneratorMode::ArbitrageProne,
            Mode::WideSpread => GeneratorMode::WideSpread,
        }
    }
}

fn split_range(text: &str) -> (&str, &str) {
    text.split_once("..").unwrap_or((text, text))
}

fn parse_count_range(text: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = split_range(text);
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn parse_rational_range(text: &str) -> Result<RationalRange, String> {
    let (lo, hi) = split_range(text);
    let parse = |s: &str| parse_rational(s).map_err(|e| e.to_string());
    Ok(RationalRange::new(parse(lo)?, parse(hi)?))
}

/// A failure that ends the command with the given exit code and message.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (program name first) and runs the command. Returns the exit
/// code; usage errors exit with 2.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Check {
            model,
            output,
            output_dir,
        } => check(cli.format, model, output.as_deref(), output_dir, out),
        Command::FindTriple { model, output } => find_triple(cli.format, model, output.as_deref(), out),
        Command::Verify { model, certificate } => verify_certificate(cli.format, model, certificate, out),
        Command::Generate {
            seed,
            horizon,
            branching,
            spread,
            rate_gap,
            mode,
            output,
        } => {
            let config = GeneratorConfig {
                seed: *seed,
                horizon: *horizon,
                branching: *branching,
                spread: spread.clone(),
                rate_gap: rate_gap.clone(),
                mode: (*mode).into(),
                ..GeneratorConfig::default()
            };
            let model = generate(&config).map_err(|e| Failure::invalid(e.to_string()))?;
            emit(&serialize_model(&model), output.as_deref(), out)?;
            Ok(EXIT_OK)
        }
        Command::Report { models } => report(cli.format, models, out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<MarketModel, Failure> {
    let text = read(path)?;
    parse_model(&text).map_err(|e| {
        let lines: Vec<String> = e.0.iter().map(|l| format!("{}: {l}", path.display())).collect();
        Failure::invalid(lines.join("\n"))
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::invalid(format!("standard output: {e}"))),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| Failure::invalid(format!("standard output: {e}")))
}

fn json_line(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

/// The verdict and its certificate: a martingale triple when there is no
/// arbitrage, the detected strategy otherwise.
struct Analysis {
    arbitrage: Option<(usize, String)>,
    certificate: Certificate,
}

fn analyze(model: &MarketModel) -> Result<Analysis, Failure> {
    let internal = |e: String| Failure::invalid(format!("internal error: {e}"));
    match detector::detect(model).map_err(|e| internal(e.to_string()))? {
        ArbitrageReport::Arbitrage {
            strategy,
            witness,
            payoff,
        } => Ok(Analysis {
            arbitrage: Some((witness.0, Q(&payoff).to_string())),
            certificate: Certificate::from_strategy(model, &strategy),
        }),
        ArbitrageReport::NoArbitrage { .. } => match pricing::construct(model).map_err(|e| internal(e.to_string()))? {
            Construction::System(ps) => {
                let triple = pricing::system_to_triple(model, &ps).map_err(|e| internal(e.to_string()))?;
                Ok(Analysis {
                    arbitrage: None,
                    certificate: Certificate::from_triple(model, &triple),
                })
            }
            Construction::NoSystem => Err(internal("no arbitrage detected but no pricing system exists".into())),
        },
    }
}

#[derive(Serialize)]
struct Verdict<'a> {
    verdict: &'static str,
    model_hash: &'a str,
    certificate: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_node: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    payoff: Option<&'a str>,
}

fn check(format: Format, path: &Path, output: Option<&Path>, dir: &Path, out: &mut dyn Write) -> Outcome {
    let model = load_model(path)?;
    let a = analyze(&model)?;
    let target = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
            dir.join(format!("{stem}.{}.json", a.certificate.kind()))
        }
    };
    write_file(&target, &a.certificate.to_json())?;
    let verdict = if a.arbitrage.is_some() {
        "arbitrage"
    } else {
        "no_arbitrage"
    };
    let line = match format {
        Format::Json => json_line(&Verdict {
            verdict,
            model_hash: a.certificate.model_hash(),
            certificate: target.display().to_string(),
            witness_node: a.arbitrage.as_ref().map(|w| w.0),
            payoff: a.arbitrage.as_ref().map(|w| w.1.as_str()),
        }),
        Format::Text => match &a.arbitrage {
            Some((node, payoff)) => format!(
                "arbitrage: strategy pays {payoff} at node {node}; certificate written to {}",
                target.display()
            ),
            None => format!("no arbitrage: martingale triple written to {}", target.display()),
        },
    };
    say(out, &line)?;
    Ok(if a.arbitrage.is_some() { EXIT_ARBITRAGE } else { EXIT_OK })
}

fn find_triple(format: Format, path: &Path, output: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let model = load_model(path)?;
    let a = analyze(&model)?;
    if a.arbitrage.is_none() {
        emit(&a.certificate.to_json(), output, out)?;
        return Ok(EXIT_OK);
    }
    match (format, output) {
        (Format::Json, None) => {}
        (Format::Json, Some(p)) => say(
            out,
            &json_line(&serde_json::json!({ "triple": null, "certificate": p })),
        )?,
        (Format::Text, _) => say(out, "none exists: the model admits arbitrage")?,
    }
    emit(&a.certificate.to_json(), output, out)?;
    Ok(EXIT_ARBITRAGE)
}

fn condition_name(report: &VerificationReport, i: usize) -> String {
    serde_json::to_value(report.violations[i].condition)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn describe(report: &VerificationReport) -> Vec<String> {
    report
        .violations
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let place = match f.location {
                Location::Global => "global".to_string(),
                Location::Node(n) => n.to_string(),
            };
            format!(
                "{place}: {} (lhs {}, rhs {})",
                condition_name(report, i),
                Q(&f.lhs),
                Q(&f.rhs)
            )
        })
        .collect()
}

fn verify_certificate(format: Format, model_path: &Path, cert_path: &Path, out: &mut dyn Write) -> Outcome {
    let model = load_model(model_path)?;
    let located = |e: arbcheck_core::io::DocumentError| {
        let lines: Vec<String> = e.0.iter().map(|l| format!("{}: {l}", cert_path.display())).collect();
        Failure::invalid(lines.join("\n"))
    };
    let cert = Certificate::parse(&read(cert_path)?).map_err(located)?;
    cert.check_binding(&model).map_err(located)?;
    let report = match &cert {
        Certificate::Arbitrage { .. } => verify::verify_arbitrage(&model, &cert.to_strategy(&model).map_err(located)?),
        Certificate::MartingaleTriple { .. } => {
            verify::verify_triple(&model, &cert.to_triple(&model).map_err(located)?)
        }
        Certificate::PricingSystem { .. } => {
            verify::verify_pricing_system(&model, &cert.to_system(&model).map_err(located)?)
        }
        Certificate::DiscountFactor { .. } => {
            let df = cert.to_discount_factor(&model).map_err(located)?;
            verify::verify_discount_factor(&model, &df, &[]).expect("no strategies to check")
        }
    };
    match format {
        Format::Json => say(out, &json_line(&report))?,
        Format::Text => {
            let status = if report.passed { "pass" } else { "fail" };
            say(out, &format!("{status}: {} certificate", cert.kind()))?;
            for line in describe(&report) {
                say(out, &format!("  {line}"))?;
            }
        }
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[derive(Serialize)]
struct ReportRow {
    model: String,
    nodes: Option<usize>,
    verdict: String,
    dichotomy: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    findings: Vec<String>,
}

fn report_row(path: &Path) -> ReportRow {
    let mut row = ReportRow {
        model: path.display().to_string(),
        nodes: None,
        verdict: "invalid".into(),
        dichotomy: None,
        findings: Vec::new(),
    };
    let model = match load_model(path) {
        Ok(m) => m,
        Err(f) => {
            row.findings.push(f.message);
            return row;
        }
    };
    row.nodes = Some(model.tree().len());
    let (report, construction) = match (detector::detect(&model), pricing::construct(&model)) {
        (Ok(r), Ok(c)) => (r, c),
        (Err(e), _) => {
            row.verdict = "error".into();
            row.findings.push(e.to_string());
            return row;
        }
        (_, Err(e)) => {
            row.verdict = "error".into();
            row.findings.push(e.to_string());
            return row;
        }
    };
    row.verdict = if report.is_arbitrage() {
        "arbitrage"
    } else {
        "no_arbitrage"
    }
    .into();
    let check = verify::verify_arbitrage_dichotomy(&model, &report, &construction);
    row.dichotomy = Some(check.passed);
    row.findings = describe(&check);
    row
}

fn report(format: Format, models: &[PathBuf], out: &mut dyn Write) -> Outcome {
    let rows: Vec<ReportRow> = models.par_iter().map(|p| report_row(p)).collect();
    match format {
        Format::Json => say(out, &json_line(&rows))?,
        Format::Text => {
            let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
            say(
                out,
                &format!("{:<width$}  {:>5}  {:<12}  dichotomy", "model", "nodes", "verdict"),
            )?;
            for r in &rows {
                let nodes = r.nodes.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
                let status = match r.dichotomy {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "-",
                };
                say(
                    out,
                    &format!("{:<width$}  {nodes:>5}  {:<12}  {status}", r.model, r.verdict),
                )?;
                for f in &r.findings {
                    say(out, &format!("    {f}"))?;
                }
            }
            let arb = rows.iter().filter(|r| r.verdict == "arbitrage").count();
            let passed = rows.iter().filter(|r| r.dichotomy == Some(true)).count();
            say(
                out,
                &format!(
                    "{} models, {arb} with arbitrage, {passed} dichotomy checks passed",
                    rows.len()
                ),
            )?;
        }
    }
    Ok(if rows.iter().any(|r| r.dichotomy.is_none()) {
        EXIT_INVALID
    } else if rows.iter().any(|r| r.dichotomy == Some(false)) {
        EXIT_VERIFY_FAILED
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use arbcheck_core::Rational;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_count_range("2").unwrap(), (2, 2));
        assert_eq!(parse_count_range("1..4").unwrap(), (1, 4));
        assert!(parse_count_range("a..4").is_err());
        let r = parse_rational_range("0..1/20").unwrap();
        assert_eq!(r.max, Rational::new(1.into(), 20.into()));
        assert_eq!(
            parse_rational_range("0.01").unwrap().min,
            r.max / Rational::from_integer(5.into())
        );
    }
}
