//! `zkmech`: run hidden-mechanism sessions, verify transcripts and print the
//! analysis reports.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error.

mod session;

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::Rng;

use zkmech::analysis::{groves_extract_weights, groves_outcome, ic_lemma_report, noise_ratio_report, GrovesInstance};
use zkmech::codec::{transcript_read, transcript_to_string};
use zkmech::error::Error;
use zkmech::group::{
    derive_generators, gen_params, gen_params_seeded, random_seed, seeded_rng, GroupParams, RefString,
};
use zkmech::protocols::{verify_transcript, ExampleKind, Mechanism, MechanismSpec};

use session::Transport;

/// Largest H accepted on the command line.
const CLI_MAX_H: u64 = 1 << 16;
const GROUP_MAGIC: &str = "zkmech-group/1";

#[derive(Parser, Debug)]
#[command(name = "zkmech", version, about = "Hidden-mechanism commitments with zero-knowledge evaluation proofs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Use the 23-element toy group instead of the 2048-bit default.
    #[arg(long, global = true)]
    toy: bool,
    /// Group file written by `gen-params`.
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "toy")]
    group: Option<PathBuf>,
    /// Reference string seed from which the generators are derived.
    #[arg(long = "ref", global = true, default_value = "zkmech", value_name = "STRING")]
    reference: String,
    /// Deterministic randomness; OS entropy when absent.
    #[arg(long, global = true, value_name = "STRING")]
    seed: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a safe prime and print a group file.
    GenParams {
        #[arg(long)]
        bits: u32,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Commit to a mechanism and serve buyers.
    Seller {
        #[command(flatten)]
        mech: MechArgs,
        /// Number of buyers (ex1-multi).
        #[arg(long, default_value_t = 2)]
        buyers: usize,
        /// Listen address such as `:7000` or `127.0.0.1:7000`.
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        listen: Option<String>,
        /// Exchange frames over stdin and stdout.
        #[arg(long)]
        stdio: bool,
        /// Stop after this many sessions.
        #[arg(long)]
        sessions: Option<u64>,
    },
    /// Report a type and verify the seller's answer.
    Buyer {
        #[arg(long)]
        example: ExampleKind,
        #[arg(long = "H", default_value_t = 8)]
        h: u64,
        /// Reported value(s), comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "interactive")]
        value: Vec<u64>,
        /// Ask for the value once the commitment has been checked.
        #[arg(long, conflicts_with_all = ["value", "stdio"])]
        interactive: bool,
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        connect: Option<String>,
        #[arg(long)]
        stdio: bool,
        /// Write the transcript here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run seller and buyer in one process.
    Demo {
        #[command(flatten)]
        mech: MechArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        value: Vec<u64>,
        /// Write the transcript here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Re-run every check in a transcript file.
    Verify { file: PathBuf },
    /// Analysis reports.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Args, Debug, Clone)]
struct MechArgs {
    #[arg(long)]
    example: ExampleKind,
    #[arg(long = "H", default_value_t = 8)]
    h: u64,
    /// Price for ex1, ex1-multi and ex4.
    #[arg(long)]
    price: Option<u64>,
    /// First price for ex2 and ex3.
    #[arg(long)]
    s1: Option<u64>,
    /// Second price for ex2 and ex3.
    #[arg(long)]
    s2: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Analyze {
    /// Exhaustive incentive check of two-part pricing for every price pair.
    IcLemma {
        #[arg(long = "H", default_value_t = 8)]
        h: u64,
    },
    /// Shift ratios of the truncated two-sided geometric distribution.
    Noise {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1)]
        ell: u32,
        #[arg(long, default_value_t = 50)]
        window: i64,
    },
    /// Random weighted Groves instances and recovery of their weights.
    Groves {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        outcomes: usize,
        #[arg(long, default_value_t = 1)]
        instances: usize,
    },
}

/// Failure classes, mapped onto exit codes.
enum Failure {
    Rejected(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::VerificationFailed { .. }
            | Error::OutOfOrder { .. }
            | Error::Malformed { .. }
            | Error::Parse { .. }
            | Error::NonMember
            | Error::Io(_) => Failure::Rejected(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Rejected(format!("i/o error: {e}"))
    }
}

type Run<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Run {
    let common = cli.common;
    match cli.command {
        Command::GenParams { bits, out } => gen_params_cmd(&common, bits, out),
        Command::Seller { mech, buyers, listen, stdio, sessions } => {
            let spec = mech.spec(buyers)?;
            let rf = reference(&common)?;
            let transport = if stdio { Transport::Stdio } else { Transport::Tcp(listen.unwrap_or_default()) };
            session::serve(&rf, &spec, &transport, &Seeds::new(&common), sessions)
        }
        Command::Buyer { example, h, value, interactive, connect, stdio, out } => {
            check_h(h)?;
            let rf = reference(&common)?;
            let transport = if stdio { Transport::Stdio } else { Transport::Tcp(connect.unwrap_or_default()) };
            let values = if interactive { None } else { Some(value) };
            let (outcome, t) = session::buy(&rf, example, h, values, &transport, &Seeds::new(&common))?;
            if let Some(path) = out {
                fs::write(path, transcript_to_string(&t))?;
            }
            eprintln!("verified");
            // With --stdio, stdout carries frames.
            if stdio {
                eprintln!("outcome: {outcome}");
            } else {
                println!("outcome: {outcome}");
            }
            Ok(())
        }
        Command::Demo { mech, value, out } => {
            let spec = mech.spec(value.len())?;
            let rf = reference(&common)?;
            let seeds = Seeds::new(&common);
            let (outcome, t) =
                zkmech::protocols::run_example(&rf, &spec, &value, seeds.rng(b"seller", 0), seeds.rng(b"buyer", 0))?;
            let text = transcript_to_string(&t);
            match out {
                Some(path) => {
                    fs::write(path, text)?;
                    println!("outcome: {outcome}");
                }
                None => {
                    eprintln!("outcome: {outcome}");
                    print!("{text}");
                }
            }
            Ok(())
        }
        Command::Verify { file } => {
            let rf = if common.toy || common.group.is_some() { Some(reference(&common)?) } else { None };
            let f = fs::File::open(&file).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
            let t = transcript_read(io::BufReader::new(f))?;
            let outcome = verify_transcript(rf.as_ref(), &t)?;
            println!("verified {} H={}", t.kind, t.h);
            println!("outcome: {outcome}");
            Ok(())
        }
        Command::Analyze(a) => analyze(&common, a),
    }
}

impl MechArgs {
    fn spec(&self, buyers: usize) -> Run<MechanismSpec> {
        check_h(self.h)?;
        let need = |x: Option<u64>, name: &str| {
            x.ok_or_else(|| Failure::Usage(format!("--{name} is required for {}", self.example)))
        };
        let mech = match self.example {
            ExampleKind::Ex1 => Mechanism::Ex1 { s: need(self.price, "price")? },
            ExampleKind::Ex1Multi => Mechanism::Ex1Multi { s: need(self.price, "price")?, n_buyers: buyers },
            ExampleKind::Ex4 => Mechanism::Ex4 { s: need(self.price, "price")? },
            ExampleKind::Ex2 => Mechanism::Ex2 { s1: need(self.s1, "s1")?, s2: need(self.s2, "s2")? },
            ExampleKind::Ex3 => Mechanism::Ex3 { s1: need(self.s1, "s1")?, s2: need(self.s2, "s2")? },
        };
        Ok(MechanismSpec::new(mech, self.h)?)
    }
}

fn check_h(h: u64) -> Run {
    if !h.is_power_of_two() || !(2..=CLI_MAX_H).contains(&h) {
        return Err(Failure::Usage(format!("H must be a power of two between 2 and {CLI_MAX_H}, got {h}")));
    }
    Ok(())
}

/// Per-role randomness: derived from `--seed` when given, otherwise from
/// fresh OS entropy.
pub struct Seeds(Vec<u8>);

impl Seeds {
    fn new(common: &Common) -> Self {
        match &common.seed {
            Some(s) => Seeds(s.as_bytes().to_vec()),
            None => Seeds(random_seed(&mut rand::rngs::OsRng)),
        }
    }

    /// Session `i` of a role; session 0 uses the seed as is so that a
    /// single networked session matches `demo`.
    pub fn rng(&self, role: &[u8], i: u64) -> rand_chacha::ChaCha20Rng {
        let mut seed = self.0.clone();
        if i > 0 {
            seed.extend_from_slice(&i.to_be_bytes());
        }
        seeded_rng(role, &seed)
    }
}

fn reference(common: &Common) -> Run<RefString> {
    let params = if let Some(path) = &common.group {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        parse_group(&text)?
    } else if common.toy {
        GroupParams::toy23()
    } else {
        GroupParams::rfc3526_2048()
    };
    Ok(derive_generators(&params, common.reference.as_bytes())?)
}

fn parse_group(text: &str) -> Run<GroupParams> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(GROUP_MAGIC) {
        return Err(Failure::Usage(format!("group file must start with {GROUP_MAGIC}")));
    }
    let q = lines
        .find_map(|l| l.strip_prefix("q="))
        .and_then(|h| BigUint::parse_bytes(h.as_bytes(), 16))
        .ok_or_else(|| Failure::Usage("group file has no q=<hex> line".into()))?;
    Ok(GroupParams::from_safe_prime(q)?)
}

fn gen_params_cmd(common: &Common, bits: u32, out: Option<PathBuf>) -> Run {
    let params = match &common.seed {
        Some(s) => gen_params_seeded(bits, s.as_bytes())?,
        None => gen_params(bits, &mut rand::rngs::OsRng)?,
    };
    let text = format!("{GROUP_MAGIC}\nq={:x}\np={:x}\nbits={}\n", params.q(), params.p(), params.bit_length());
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn analyze(common: &Common, a: Analyze) -> Run {
    match a {
        Analyze::IcLemma { h } => {
            let report = ic_lemma_report(h)?;
            print!("{report}");
            if report.holds {
                Ok(())
            } else {
                Err(Failure::Rejected("lemma does not hold".into()))
            }
        }
        Analyze::Noise { alpha, eps, ell, window } => {
            let eps = match (alpha, eps) {
                (Some(a), Some(e)) if (a + e - 1.0).abs() > 1e-12 => {
                    return Err(Failure::Usage(format!("--alpha {a} and --eps {e} disagree; alpha must equal 1 - eps")))
                }
                (_, Some(e)) => e,
                (Some(a), None) => 1.0 - a,
                (None, None) => return Err(Failure::Usage("give --alpha or --eps".into())),
            };
            let report = noise_ratio_report(eps, ell, window)?;
            print!("{report}");
            if report.holds() {
                Ok(())
            } else {
                Err(Failure::Rejected("interior ratio exceeds the bound".into()))
            }
        }
        Analyze::Groves { n, outcomes, instances } => groves_cmd(common, n, outcomes, instances),
    }
}

fn groves_cmd(common: &Common, n: usize, outcomes: usize, instances: usize) -> Run {
    if n < 2 || outcomes == 0 {
        return Err(Failure::Usage("need at least two players and one outcome".into()));
    }
    let mut rng = Seeds::new(common).rng(b"groves", 0);
    let q = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let mut recovered = 0;
    for k in 0..instances {
        let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=20)).collect();
        let total: i64 = raw.iter().sum();
        let w: Vec<BigRational> = raw.iter().map(|&x| q(x, total)).collect();
        let t: Vec<Vec<BigRational>> =
            (0..n).map(|_| (0..outcomes).map(|_| q(rng.gen_range(0..=20), rng.gen_range(1..=5))).collect()).collect();
        let inst = GrovesInstance::new(w.clone(), t.clone())?;
        let out = groves_outcome(&inst);
        let back = groves_extract_weights(&t, &out)?;
        let show = |xs: &[BigRational]| xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        println!("instance={k} w={} {out} recovered={}", show(&w), show(&back));
        recovered += (back == w) as usize;
    }
    println!("instances={instances}");
    println!("recovered={recovered}");
    println!("exact={}", recovered == instances);
    if recovered == instances {
        Ok(())
    } else {
        Err(Failure::Rejected("weight recovery failed".into()))
    }
}

/// Prompts on stderr and reads comma separated values from stdin.
pub fn prompt_values(kind: ExampleKind, h: u64) -> zkmech::error::Result<Vec<u64>> {
    eprint!("commitment verified; enter value(s) for {kind} below H={h}: ");
    io::stderr().flush()?;
    let mut line = String::new();
    io::stdin().lock().read_line(&mut line)?;
    line.trim()
        .split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| Error::InvalidInput(format!("bad value {x:?}: {e}"))))
        .collect()
}
