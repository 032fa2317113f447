use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use modquot::cert::{self, AutomorphismJson, Certificate, SurfaceMapJson};
use modquot::defsub::{enumerate_classes, ClassTable, DefiningContext, EnumerationConfig, Strategy, DEFAULT_BUDGET};
use modquot::freegrp::{nielsen_generators, FreeWord};
use modquot::permgrp::{recognize_sym_alt, RecognitionConfig, DEFAULT_SEED};
use modquot::rfwitness::{out_rf_witness, rf_witness, DEFAULT_PRIME_CEILING};
use modquot::surface::{
    builtin_twist, containment_check, involve_certificate, nielsen_action, separability_witness, theorem1_certificate,
    PipelineConfig, SeparabilityOutcome, Theorem1Outcome, DEFAULT_GAMMA_DEPTH,
};
use modquot::{Error, Permutation};

const EXIT_INPUT: u8 = 1;
const EXIT_RESOURCE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "modquot", version, about = "PSL(2,p) quotients of free and surface groups, with certificates")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,

    #[command(subcommand)]
    command: Command,
}

/// Limits and locations shared by every subcommand.
#[derive(Args, Clone, Debug)]
struct RunConfig {
    /// Worker threads for enumeration
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Ceiling on tuple visits during enumeration
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,

    /// Largest prime tried by witness searches
    #[arg(long, global = true, default_value_t = DEFAULT_PRIME_CEILING)]
    prime_ceiling: u32,

    /// Seed for the random-word search in giant recognition
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Directory for class-table caches
    #[arg(long, global = true, env = "MODQUOT_CACHE_DIR", default_value = ".modquot-cache")]
    cache_dir: PathBuf,

    /// Do not read or write class-table caches
    #[arg(long, global = true)]
    no_cache: bool,

    /// Write the result here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate X(F_n, PSL(2,p)) and print the number of classes
    Enumerate {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        prime: u32,
        #[arg(long, default_value = "pruned")]
        strategy: Strategy,
    },
    /// Recognize the Nielsen action on X(F_n, PSL(2,p))
    Action {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        prime: u32,
    },
    /// Find a PSL(2,p) quotient of F_n in which a word survives
    RfWitness {
        #[arg(long)]
        rank: usize,
        /// Word such as x1.x2.X1.X2
        #[arg(long)]
        word: String,
    },
    /// Find a prime at which a Nielsen generator acts nontrivially
    OutWitness {
        #[arg(long)]
        rank: usize,
        /// One of the Nielsen generator names (cycle, swap, invert, transvect)
        #[arg(long)]
        generator: String,
        #[arg(long, default_value_t = 7)]
        pmax: u32,
    },
    /// Build a symmetric-action certificate
    #[command(subcommand)]
    Certificate(CertificateCommand),
    /// Separate the handlebody kernel from its image under a surface map
    Separate {
        #[arg(long)]
        genus: usize,
        /// JSON file with label, images and inverseImages in a1/b1 notation
        #[arg(long, conflicts_with = "twist")]
        map: Option<PathBuf>,
        /// Builtin twist name such as twist_a1 or twist_c1^-1
        #[arg(long)]
        twist: Option<String>,
        /// Longest conjugator tried when searching for gamma
        #[arg(long, default_value_t = DEFAULT_GAMMA_DEPTH)]
        depth: usize,
        /// Largest prime for the outer witness when the map stabilizes
        #[arg(long, default_value_t = 7)]
        pmax: u32,
    },
    /// Compare stabilizing twist words with the Nielsen action
    Containment {
        #[arg(long, default_value_t = 3)]
        genus: usize,
        #[arg(long, default_value_t = 5)]
        prime: u32,
        /// Longest twist word
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Replay every check recorded in a certificate
    Verify { file: PathBuf },
}

#[derive(Subcommand)]
enum CertificateCommand {
    /// Symmetric action of the handlebody stabilizer on at least r classes
    Theorem1 {
        #[arg(long, default_value_t = 3)]
        genus: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 7)]
        pmax: u32,
    },
    /// A symmetric action large enough to contain every group of the given order
    Involve {
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = 7)]
        pmax: u32,
    },
}

/// A failed verification, reported with exit code 3.
#[derive(Debug)]
struct VerificationFailed(Vec<String>);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for VerificationFailed {}

impl RunConfig {
    fn validate(&self) -> anyhow::Result<()> {
        if self.workers == 0 || self.budget == 0 || self.prime_ceiling == 0 {
            bail!("workers, budget and prime ceiling must be positive");
        }
        Ok(())
    }

    fn enumeration(&self, strategy: Strategy) -> EnumerationConfig {
        EnumerationConfig { strategy, workers: self.workers, budget: self.budget, ..EnumerationConfig::default() }
    }

    fn recognition(&self) -> RecognitionConfig {
        RecognitionConfig { seed: self.seed, ..RecognitionConfig::default() }
    }

    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { enumeration: self.enumeration(Strategy::Pruned), recognition: self.recognition() }
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.output {
            Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
            None => match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.context("writing stdout"),
            },
        }
    }

    fn emit_json(&self, value: &impl Serialize) -> anyhow::Result<()> {
        self.emit(&serde_json::to_string_pretty(value)?)
    }

    fn cache_path(&self, n: usize, p: u32) -> PathBuf {
        self.cache_dir.join(format!("classes-n{n}-p{p}.bin"))
    }

    /// Loads the class table from the cache, or enumerates and stores it.
    fn classes(&self, ctx: &DefiningContext, n: usize, strategy: Strategy) -> anyhow::Result<ClassTable> {
        let p = ctx.prime().get();
        if self.no_cache {
            return Ok(enumerate_classes(ctx, n, &self.enumeration(strategy))?);
        }
        let path = self.cache_path(n, p);
        if path.exists() {
            let table = ClassTable::load(&path)?;
            if table.prime() != p || table.rank() != n {
                bail!("cache file {} holds (n={}, p={})", path.display(), table.rank(), table.prime());
            }
            return Ok(table);
        }
        let table = enumerate_classes(ctx, n, &self.enumeration(strategy))?;
        fs::create_dir_all(&self.cache_dir).with_context(|| format!("creating {}", self.cache_dir.display()))?;
        table.save(&path)?;
        Ok(table)
    }
}

fn cmd_enumerate(run: &RunConfig, n: usize, p: u32, strategy: Strategy) -> anyhow::Result<()> {
    let ctx = DefiningContext::new(p)?;
    let table = run.classes(&ctx, n, strategy)?;
    if !run.no_cache {
        eprintln!("cache: {}", run.cache_path(n, p).display());
    }
    run.emit(&table.len().to_string())
}

fn cmd_action(run: &RunConfig, n: usize, p: u32) -> anyhow::Result<()> {
    let ctx = DefiningContext::new(p)?;
    let table = run.classes(&ctx, n, Strategy::Pruned)?;
    let (names, perms): (Vec<String>, Vec<Permutation>) = if n >= 2 {
        let (gens, perms) = nielsen_action(&ctx, &table)?;
        (gens.iter().map(|g| g.name().to_string()).collect(), perms)
    } else {
        (Vec::new(), Vec::new())
    };
    let rec = recognize_sym_alt(&perms, table.len(), &run.recognition())?;
    run.emit_json(&json!({
        "rank": n,
        "prime": p,
        "classCount": table.len(),
        "generators": names,
        "kind": rec.kind,
        "order": rec.evidence.order,
        "evidence": rec.evidence,
    }))
}

fn cmd_rf_witness(run: &RunConfig, n: usize, word: &str) -> anyhow::Result<()> {
    let alpha = FreeWord::parse(n, word)?;
    let c = rf_witness(n, &alpha, run.prime_ceiling)?;
    run.emit(&Certificate::rf_witness(run.seed, &c).to_json())
}

fn cmd_out_witness(run: &RunConfig, n: usize, name: &str, pmax: u32) -> anyhow::Result<()> {
    let s = nielsen_generators(n)?
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::Parse(format!("no Nielsen generator named {name:?} at rank {n}")))?;
    let found = out_rf_witness(n, &s, pmax, &run.enumeration(Strategy::Pruned))?;
    run.emit_json(&json!({
        "rank": n,
        "generator": AutomorphismJson::from(&s),
        "pmax": pmax,
        "witness": found.map(|w| json!({
            "prime": w.prime,
            "classCount": w.class_count,
            "movedClass": w.moved_class,
            "imageClass": w.image_class,
        })),
    }))
}

fn theorem1_outcome_report(run: &RunConfig, outcome: &Theorem1Outcome) -> serde_json::Value {
    let (tag, pmax) = match outcome {
        Theorem1Outcome::AlternatingOnly { pmax, .. } => ("alternating-only", *pmax),
        Theorem1Outcome::NotFound { pmax, .. } => ("not-found", *pmax),
        Theorem1Outcome::Certificate(_) => unreachable!("certificates are emitted directly"),
    };
    json!({ "kind": "theorem1-outcome", "outcome": tag, "pmax": pmax, "seed": run.seed, "scanned": outcome.scanned() })
}

fn cmd_certificate(run: &RunConfig, cmd: &CertificateCommand) -> anyhow::Result<()> {
    match *cmd {
        CertificateCommand::Theorem1 { genus, r, pmax } => {
            let outcome = theorem1_certificate(genus, r, pmax, &run.pipeline())?;
            match outcome.certificate() {
                Some(c) => run.emit(&Certificate::theorem1(run.seed, c).to_json()),
                None => run.emit_json(&theorem1_outcome_report(run, &outcome)),
            }
        }
        CertificateCommand::Involve { order, pmax } => {
            let c = involve_certificate(order, pmax, &run.pipeline())?;
            match Certificate::involve(run.seed, &c) {
                Some(cert) => run.emit(&cert.to_json()),
                None => run.emit_json(&theorem1_outcome_report(run, &c.outcome)),
            }
        }
    }
}

fn read_map(path: &Path, genus: usize) -> anyhow::Result<modquot::SurfaceAutomorphism> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let json: SurfaceMapJson = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(json.to_automorphism(genus)?)
}

fn cmd_separate(
    run: &RunConfig,
    genus: usize,
    map: Option<&Path>,
    twist: Option<&str>,
    depth: usize,
    pmax: u32,
) -> anyhow::Result<()> {
    let f = match (map, twist) {
        (Some(path), _) => read_map(path, genus)?,
        (None, Some(name)) => builtin_twist(genus, name)?,
        (None, None) => return Err(Error::Parse("one of --map or --twist is required".into()).into()),
    };
    match separability_witness(genus, &f, run.prime_ceiling, depth)? {
        SeparabilityOutcome::Witness(w) => run.emit(&Certificate::separability(run.seed, &w).to_json()),
        SeparabilityOutcome::StabilizesInstead(induced) => {
            let outer = if genus >= 3 && !induced.is_identity() {
                out_rf_witness(genus, &induced, pmax, &run.enumeration(Strategy::Pruned))?
            } else {
                None
            };
            run.emit_json(&json!({
                "kind": "stabilizes",
                "g": genus,
                "map": SurfaceMapJson::from(&f),
                "induced": AutomorphismJson::from(&induced),
                "inducedIsIdentity": induced.is_identity(),
                "outerWitness": outer.map(|w| json!({
                    "prime": w.prime,
                    "classCount": w.class_count,
                    "movedClass": w.moved_class,
                    "imageClass": w.image_class,
                })),
            }))
        }
    }
}

fn cmd_containment(run: &RunConfig, genus: usize, prime: u32, max_len: usize) -> anyhow::Result<()> {
    let rep = containment_check(genus, prime, max_len, &run.pipeline())?;
    run.emit_json(&json!({
        "genus": rep.genus,
        "prime": rep.prime,
        "classCount": rep.class_count,
        "stabilizingWords": rep.words_checked,
        "distinctPermutations": rep.distinct_permutations,
        "allContained": rep.all_contained,
        "membershipPath": rep.membership_path,
        "nielsenKind": rep.nielsen.kind,
        "twistKind": rep.twist.kind,
        "twistEvidence": rep.twist.evidence,
    }))
}

fn cmd_verify(run: &RunConfig, file: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let cert = Certificate::from_json(&text)?;
    let report = cert::verify(&cert, &run.recognition());
    run.emit_json(&json!({ "kind": cert.kind(), "passed": report.passed(), "checks": report.checks }))?;
    if !report.passed() {
        let failed = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        return Err(VerificationFailed(failed).into());
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let run = &cli.run;
    run.validate()?;
    match &cli.command {
        Command::Enumerate { rank, prime, strategy } => cmd_enumerate(run, *rank, *prime, *strategy),
        Command::Action { rank, prime } => cmd_action(run, *rank, *prime),
        Command::RfWitness { rank, word } => cmd_rf_witness(run, *rank, word),
        Command::OutWitness { rank, generator, pmax } => cmd_out_witness(run, *rank, generator, *pmax),
        Command::Certificate(cmd) => cmd_certificate(run, cmd),
        Command::Separate { genus, map, twist, depth, pmax } => {
            cmd_separate(run, *genus, map.as_deref(), twist.as_deref(), *depth, *pmax)
        }
        Command::Containment { genus, prime, max_len } => cmd_containment(run, *genus, *prime, *max_len),
        Command::Verify { file } => cmd_verify(run, file),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return EXIT_VERIFY;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::ResourceLimit { .. } | Error::PrimeCeilingExceeded(_)) => EXIT_RESOURCE,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1, not clap's default 2, which is reserved for resource limits.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
