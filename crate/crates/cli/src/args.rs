use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conjauth_core::protocol::SecurityLevel;

#[derive(Debug, Parser)]
#[command(
    name = "conjauth",
    version,
    about = "Matrix-conjugation authentication: keys, sessions and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key pair.
    Keygen(KeygenArgs),
    /// Serve prover sessions over TCP.
    Prove(ProveArgs),
    /// Authenticate a prover over TCP. Exits 0 on accept, 1 on reject,
    /// 2 on a protocol or transport error.
    Verify(VerifyArgs),
    /// Run one honest session in process and print its transcript.
    Session(SessionArgs),
    /// Parameter checks.
    #[command(subcommand)]
    Params(ParamsCommand),
    /// Attacks and forgery experiments.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Timings of the hot paths.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// n=3, k=10, N=1000, d=25, words of length 10
    Paper,
    /// n=3, k=4, N=64, d=9, words of length 6
    Desk,
    /// n=2, k=2, N=2
    Tiny,
    /// n=2, k=1, N=2, unmasked only
    Micro,
    /// n=3, k=2, N=16, for determinant experiments
    Det,
}

/// Where scheme parameters come from. A params file wins over a preset.
#[derive(Debug, Clone, Args)]
pub struct ParamsSource {
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    /// TOML file with every scheme parameter.
    #[arg(long, value_name = "FILE")]
    pub params_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out_pub: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out_priv: PathBuf,
    #[command(flatten)]
    pub params: ParamsSource,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[arg(long = "priv", value_name = "FILE")]
    pub priv_file: PathBuf,
    #[arg(long, value_name = "ADDR")]
    pub listen: SocketAddr,
    /// Seed for the prover's exponents; drawn from the OS and printed
    /// when absent.
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: Option<u64>,
    /// Exit after this many connections.
    #[arg(long)]
    pub max_sessions: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    ConstantsBeforeCommit,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long = "pub", value_name = "FILE")]
    pub pub_file: PathBuf,
    #[arg(long, value_name = "ADDR")]
    pub connect: SocketAddr,
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
    /// Break the protocol on purpose.
    #[arg(long, value_enum)]
    pub fault: Option<FaultArg>,
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    #[arg(long = "pub", value_name = "FILE")]
    pub pub_file: PathBuf,
    #[arg(long = "priv", value_name = "FILE")]
    pub priv_file: PathBuf,
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum ParamsCommand {
    /// Evaluate the security inequalities. Exits 1 when any fails.
    Check(ParamsCheckArgs),
}

#[derive(Debug, Args)]
pub struct ParamsCheckArgs {
    /// Security parameter, e.g. 1e20.
    #[arg(long)]
    pub t: SecurityLevel,
    #[arg(long, value_enum, default_value = "paper")]
    pub preset: Preset,
    #[arg(long, value_name = "FILE")]
    pub params_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Solve XP = AX for X and look for an invertible solution.
    Linear(LinearArgs),
    /// Impersonation attempts against the trace verifier.
    Forge(ForgeArgs),
    /// Determinant-matched forgeries against the determinant and trace
    /// verifiers.
    Det(DetArgs),
    /// Key-size formulas against measured encodings.
    Keysize(KeysizeArgs),
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    /// Public key to attack. Without one a key is generated from the seed.
    #[arg(long = "pub", value_name = "FILE")]
    pub pub_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "micro")]
    pub preset: Preset,
    /// Highest total degree of the unknown monomials.
    #[arg(long, default_value_t = 1)]
    pub degree_cap: u32,
    /// Largest dense system, in cells, that will be built.
    #[arg(long, default_value_t = 50_000_000)]
    pub budget: u64,
    /// Random combinations tried in the invertible search.
    #[arg(long, default_value_t = 10_000)]
    pub search_budget: usize,
    /// Sessions run with a recovered key.
    #[arg(long, default_value_t = 5)]
    pub sessions: usize,
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Honest,
    RandomMatrix,
    EchoChallenge,
    TraceMatched,
    All,
}

#[derive(Debug, Args)]
pub struct ForgeArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    /// Use keys that expand to the identity.
    #[arg(long)]
    pub trivial_keys: bool,
}

#[derive(Debug, Args)]
pub struct DetArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "det")]
    pub preset: Preset,
}

#[derive(Debug, Args)]
pub struct KeysizeArgs {
    #[arg(long, env = "CONJAUTH_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "paper")]
    pub preset: Preset,
    /// Also generate a full key pair and measure A and P.
    #[arg(long)]
    pub measure_public: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchTarget {
    PolyMul,
    Conjugate,
    Session,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub target: BenchTarget,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 1, env = "CONJAUTH_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
}
