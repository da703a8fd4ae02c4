//! `pedigree-infer`: validate pedigrees, predict inheritance patterns,
//! smooth genotype posteriors, simulate phenotypes and serve the HTTP API.
//!
//! Exit codes: 0 success, 1 domain error (invalid pedigree, impossible
//! evidence, unreadable input), 2 usage error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pedigree_core::mendel::{person_state_spaces, simulate, InheritancePattern, PriorSet, DEFAULT_PRIOR_STRENGTH};
use pedigree_core::predictor::{draw_parameters, DEFAULT_SAMPLES, DEFAULT_THRESHOLD};
use pedigree_core::{EvidenceSet, InferenceResult, Pedigree, PedigreeDocument, Person, Prediction};
use pedigree_service::api::{self, ApiError, InferRequest, PatternChoice, ValidationReport};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pedigree-infer", version, about = "Exact inference of Mendelian inheritance on pedigrees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a pedigree document against the structural rules.
    Validate {
        #[command(flatten)]
        io: Io,
    },
    /// Compare AD, AR and XL by Monte Carlo marginal likelihood.
    Predict {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        model: Model,
    },
    /// Smoothed genotype posteriors under one pattern.
    Smooth {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        model: Model,
    },
    /// Draw parameters from the prior and forward-simulate every person.
    Simulate {
        #[command(flatten)]
        io: Io,
        /// Inheritance pattern to simulate under.
        #[arg(long)]
        pattern: InheritancePattern,
        #[arg(long = "prior-strength", default_value_t = DEFAULT_PRIOR_STRENGTH)]
        strength: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the HTTP JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Address to bind; loopback by default.
        #[arg(long, default_value_t = Ipv4Addr::LOCALHOST)]
        host: Ipv4Addr,
    },
}

#[derive(Args)]
struct Io {
    /// Pedigree document (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Print JSON instead of a readable summary.
    #[arg(long)]
    json: bool,
    /// Also write the JSON result to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Model {
    /// AD, AR, XL, or all (prediction only accepts all).
    #[arg(long, default_value = "all")]
    pattern: PatternChoice,
    /// Evidence document: person id to list of allowed states.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Inline evidence ID=STATE[,STATE...]; repeatable, overrides --evidence.
    #[arg(long = "force", value_name = "ID=STATES")]
    force: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long = "prior-strength", default_value_t = DEFAULT_PRIOR_STRENGTH)]
    strength: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Do not restrict affected persons to disease-expressing genotypes.
    #[arg(long = "no-auto-carrier")]
    no_auto_carrier: bool,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        match e {
            ApiError::BadRequest(msg) => Self::usage(msg),
            other => Self::domain(other.to_string()),
        }
    }
}

/// What a command produced: the JSON body, a readable rendering of it, and
/// whether it counts as success.
struct Output {
    json: String,
    text: String,
    ok: bool,
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::domain(format!("cannot read {}: {e}", path.display())))
}

fn read_document(path: &Path) -> Result<PedigreeDocument, Failure> {
    PedigreeDocument::from_json(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn request(io: &Io, model: &Model) -> Result<InferRequest, Failure> {
    let mut evidence = match &model.evidence {
        Some(path) => EvidenceSet::from_json(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?,
        None => EvidenceSet::new(),
    };
    for entry in &model.force {
        evidence.parse_force(entry).map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(InferRequest {
        pedigree: read_document(&io.input)?,
        pattern: model.pattern,
        evidence,
        samples: model.samples,
        strength: model.strength,
        threshold: model.threshold,
        seed: model.seed,
        auto_carrier: !model.no_auto_carrier,
    })
}

fn validate_text(report: &ValidationReport, doc: &PedigreeDocument) -> String {
    let mut s = String::new();
    if report.valid {
        let _ = writeln!(s, "valid: {} persons, {} unions", doc.persons.len(), doc.unions.len());
    } else {
        let _ = writeln!(s, "invalid:");
        for v in &report.violations {
            let _ = writeln!(s, "  {}", v.message);
        }
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {}", w.message);
    }
    s
}

fn log_text(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.6}")
    }
}

fn predict_text(p: &Prediction) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8}{:>16}{:>12}", "pattern", "log marginal", "posterior");
    for (pattern, lm) in &p.log_marginals {
        let post = p
            .posterior
            .as_ref()
            .map_or("-".to_string(), |post| format!("{:.4}", post[pattern]));
        let _ = writeln!(s, "{:<8}{:>16}{:>12}", pattern.as_str(), log_text(lm.0), post);
    }
    match p.predicted {
        Some(pattern) => {
            let verdict = if p.confident { "confident" } else { "inconclusive" };
            let _ = writeln!(s, "predicted: {pattern} ({verdict})");
        }
        None => {
            let _ = writeln!(s, "the evidence is impossible under every pattern");
        }
    }
    let _ = writeln!(s, "samples: {}, seed: {}", p.samples, p.seed);
    s
}

fn smooth_text(r: &InferenceResult, pattern: PatternChoice) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "pattern {pattern}, log marginal {}", log_text(r.log_marginal.0));
    match &r.posteriors {
        Some(posteriors) => {
            for (id, row) in posteriors {
                let cells: Vec<String> = row.iter().map(|(label, q)| format!("{label}={q:.4}")).collect();
                let _ = writeln!(s, "  {id}: {}", cells.join(" "));
            }
        }
        None => {
            let _ = writeln!(s, "the evidence is impossible under this pattern");
        }
    }
    let fvs = if r.audit.fvs.is_empty() { "none".to_string() } else { r.audit.fvs.join(", ") };
    let _ = writeln!(s, "audit spread {:.1e}, cut at: {fvs}", r.audit.anchor_spread);
    s
}

#[derive(Serialize)]
struct Simulation {
    genotypes: BTreeMap<String, String>,
    pattern: InheritancePattern,
    pedigree: PedigreeDocument,
    seed: u64,
}

fn run_simulate(doc: PedigreeDocument, pattern: InheritancePattern, strength: f64, seed: u64) -> Result<Output, Failure> {
    let report = api::validate(&doc);
    if !report.valid {
        return Err(ApiError::Invalid(report).into());
    }
    let p = Pedigree::from_document(doc).map_err(|e| Failure::domain(e.to_string()))?;
    let priors = PriorSet::mendelian(pattern, strength).map_err(|e| Failure::usage(e.to_string()))?;
    let theta = draw_parameters(&priors, seed, 0);
    let sims = simulate(&p, &theta, seed).map_err(|e| Failure::domain(e.to_string()))?;
    let spaces = person_state_spaces(&p, pattern).map_err(|e| Failure::domain(e.to_string()))?;
    let mut genotypes = BTreeMap::new();
    let mut persons = Vec::new();
    for (n, (person, sim)) in p.persons().iter().zip(&sims).enumerate() {
        genotypes.insert(person.id.clone(), spaces[n].labels[sim.state].to_string());
        persons.push(Person::new(person.id.clone(), person.sex, sim.phenotype));
    }
    let mut text = String::new();
    for (id, g) in &genotypes {
        let ph = persons.iter().find(|q| &q.id == id).expect("same ids").phenotype;
        let _ = writeln!(text, "{id}: {g} {}", serde_json::to_value(ph).expect("serializes").as_str().unwrap_or(""));
    }
    let result = Simulation {
        genotypes,
        pattern,
        pedigree: PedigreeDocument {
            persons,
            unions: p.to_document().unions,
        },
        seed,
    };
    Ok(Output {
        json: api::render(&result),
        text,
        ok: true,
    })
}

fn execute(command: Command) -> Result<(Output, Io), Failure> {
    match command {
        Command::Validate { io } => {
            let doc = read_document(&io.input)?;
            let report = api::validate(&doc);
            let out = Output {
                json: api::render(&report),
                text: validate_text(&report, &doc),
                ok: report.valid,
            };
            Ok((out, io))
        }
        Command::Predict { io, model } => {
            let req = request(&io, &model)?;
            let reply = api::predict(&req)?;
            let prediction: Prediction = serde_json::from_str(&reply.body).expect("own output parses");
            let out = Output {
                text: predict_text(&prediction),
                json: reply.body,
                ok: reply.possible,
            };
            Ok((out, io))
        }
        Command::Smooth { io, model } => {
            let req = request(&io, &model)?;
            let reply = api::smooth(&req)?;
            let result: InferenceResult = serde_json::from_str(&reply.body).expect("own output parses");
            let out = Output {
                text: smooth_text(&result, req.pattern),
                json: reply.body,
                ok: reply.possible,
            };
            Ok((out, io))
        }
        Command::Simulate {
            io,
            pattern,
            strength,
            seed,
        } => {
            let out = run_simulate(read_document(&io.input)?, pattern, strength, seed)?;
            Ok((out, io))
        }
        Command::Serve { .. } => unreachable!("handled in main"),
    }
}

fn serve(host: Ipv4Addr, port: u16) -> ExitCode {
    let addr = SocketAddr::from((host, port));
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    eprintln!("listening on http://{addr}");
    match runtime.block_on(pedigree_service::serve(addr)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot serve on {addr}: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { port, host } = cli.command {
        return serve(host, port);
    }
    match execute(cli.command) {
        Ok((out, io)) => {
            if let Some(path) = &io.output {
                if let Err(e) = std::fs::write(path, &out.json) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            print!("{}", if io.json { &out.json } else { &out.text });
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
