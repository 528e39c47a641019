//! Impersonation experiments: a prover without the key answers with a
//! forged matrix and we count how often the verifier accepts.

use std::fmt;
use std::str::FromStr;
use std::thread;

use rand::Rng;

use crate::error::AlgebraError;
use crate::matrix::{ElementaryFactor, FactoredInvertible, Matrix, Word};
use crate::poly::{random_sparse_poly, TruncatedPoly};
use crate::protocol::{
    beta_verify, compute_challenge, keygen, prover_exponents, prover_respond, Message, PrivateKey,
    ProtocolError, PublicKey, SchemeParams, Verdict, VerifierSession,
};
use crate::rng::{seeded, TRIAL_STREAM_BASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// The honest response, for reference.
    Honest,
    /// `φ(R)` for an independent random matrix `R`. Responses outside the
    /// image of `φ` are no better and cost the verifier far more.
    RandomMatrix,
    /// `φ(B')`, the right answer only when `X` acts trivially.
    EchoChallenge,
    /// `φ(R)` with a corner entry shifted so the trace equals `φ(tr B')`.
    TraceMatched,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::Honest, Strategy::RandomMatrix, Strategy::EchoChallenge, Strategy::TraceMatched];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::RandomMatrix => "random-matrix",
            Strategy::EchoChallenge => "echo-challenge",
            Strategy::TraceMatched => "trace-matched",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// Where the key of each trial comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Generated,
    /// `E_ij(u) · E_ij(-u)`, which expands to the identity.
    Trivial,
}

fn trial_key<R: Rng + ?Sized>(
    sp: &SchemeParams,
    kind: KeyKind,
    rng: &mut R,
) -> Result<(PublicKey, PrivateKey), AlgebraError> {
    match kind {
        KeyKind::Generated => keygen(sp, rng),
        KeyKind::Trivial => {
            let a = Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng);
            let u = loop {
                let u = random_sparse_poly(&sp.ring, sp.sparsity(), true, rng);
                if !u.is_zero() {
                    break u;
                }
            };
            let x = FactoredInvertible::new(
                sp.ring,
                sp.n,
                vec![ElementaryFactor::new(0, 1, u.clone())?, ElementaryFactor::new(0, 1, u.neg())?],
            )?;
            let private = PrivateKey { x, a };
            Ok((private.public_key()?, private))
        }
    }
}

/// Runs `trials` independent trials, trial `i` drawing from stream
/// `TRIAL_STREAM_BASE + i` of `seed`, spread over the available cores.
fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> T + Sync,
{
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(trials.max(1));
    let chunk = trials.div_ceil(workers.max(1)).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = (0..trials)
            .step_by(chunk)
            .map(|start| {
                let f = &f;
                s.spawn(move || {
                    (start..(start + chunk).min(trials))
                        .map(|i| f(&mut seeded(seed, TRIAL_STREAM_BASE + i as u64)))
                        .collect::<Vec<T>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("trial thread panicked")).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeryStats {
    pub strategy: Strategy,
    pub trials: usize,
    pub accepted: usize,
    pub seed: u64,
}

impl ForgeryStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.trials.max(1) as f64
    }
}

impl fmt::Display for ForgeryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{:.4}\t{}",
            self.strategy.name(),
            self.trials,
            self.accepted,
            self.acceptance_rate(),
            self.seed
        )
    }
}

/// Column names matching the `Display` rows of [`ForgeryStats`].
pub const FORGERY_HEADER: &str = "strategy\ttrials\taccepted\trate\tseed";

/// The forged answer to challenge `b_prime` under `phi`.
fn forge<R: Rng + ?Sized>(
    strategy: Strategy,
    sp: &SchemeParams,
    private: &PrivateKey,
    phi: &crate::endo::Endomorphism,
    b_prime: &Matrix,
    rng: &mut R,
) -> Result<Matrix, AlgebraError> {
    Ok(match strategy {
        Strategy::Honest => prover_respond(&private.x, phi, b_prime)?,
        Strategy::RandomMatrix => Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng).apply_endo(phi)?,
        Strategy::EchoChallenge => b_prime.apply_endo(phi)?,
        Strategy::TraceMatched => {
            let mut c = Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng).apply_endo(phi)?;
            let target = phi.apply(&b_prime.trace())?;
            let shift = target.sub(&c.trace())?;
            let corner = c.get(0, 0).add(&shift)?;
            c.set(0, 0, corner)?;
            c
        }
    })
}

/// Full-protocol sessions against an honest verifier state machine, with
/// the response replaced according to `strategy`.
pub fn forgery_experiment_trace(
    sp: &SchemeParams,
    trials: usize,
    strategy: Strategy,
    keys: KeyKind,
    seed: u64,
) -> Result<ForgeryStats, ProtocolError> {
    let outcomes = run_trials(trials, seed, |rng| -> Result<bool, ProtocolError> {
        let (public, private) = trial_key(sp, keys, rng)?;
        let mut verifier = VerifierSession::new(&public, sp, seeded(rng.gen(), 1));
        // the forger plays the prover's part in the clear
        let mut forger_rng = seeded(rng.gen(), 2);
        let [_, commit] = verifier.open()?;
        let Message::Commit(commit) = commit else { unreachable!("open returns Hello then Commit") };
        let exps = prover_exponents(sp, &mut forger_rng);
        let Some(Message::Constants(constants)) = verifier.handle(Message::Exponents(exps))? else {
            return Err(ProtocolError::InvalidMessage("verifier skipped its constants".into()));
        };
        let b_prime = compute_challenge(&public.a, &commit.b, exps, constants.c)?;
        let response = forge(strategy, sp, &private, &commit.phi, &b_prime, &mut forger_rng)?;
        match verifier.handle(Message::Response(response))? {
            Some(Message::Verdict(v)) => Ok(v.is_accept()),
            _ => Err(ProtocolError::InvalidMessage("verifier gave no verdict".into())),
        }
    });
    let mut accepted = 0;
    for o in outcomes {
        accepted += o? as usize;
    }
    Ok(ForgeryStats { strategy, trials, accepted, seed })
}

/// Parameters for the determinant experiment: n = 3 over two variables
/// with N = 16. The unmasked words live in the full ring, which at the
/// desk size costs seconds per trial.
pub fn det_params() -> SchemeParams {
    let mut sp = SchemeParams::from_block(&crate::protocol::ParamsBlock {
        modulus: 11,
        k: 2,
        truncation: 16,
        n: 3,
        d: 9,
        word_len: 6,
        exp_bound: 1,
    })
    .expect("valid parameters");
    sp.m_range = (1, 2);
    sp
}

/// Accepts iff `det w(A, B) = det w(P, response)`.
pub fn det_verify(
    public: &PublicKey,
    b: &Matrix,
    response: &Matrix,
    word: &Word,
) -> Result<Verdict, AlgebraError> {
    let lhs = word.evaluate(&public.a, b)?.determinant()?;
    let rhs = word.evaluate(&public.p, response)?.determinant()?;
    Ok(if lhs == rhs { Verdict::Accept } else { Verdict::Reject })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetStats {
    pub trials: usize,
    pub honest_det_pass: usize,
    pub honest_trace_pass: usize,
    pub forged_det_pass: usize,
    pub forged_trace_pass: usize,
    /// Random matrices discarded because their determinant was not a unit.
    pub redraws: usize,
    pub seed: u64,
}

/// Draws for a random matrix with unit determinant before giving up.
const MAX_REDRAWS: usize = 10_000;

/// Unmasked-protocol instances answered by a random matrix `C` whose first
/// row is scaled so `det C = det B`. Both the honest and the forged answer
/// are checked by the determinant verifier and by the trace verifier with
/// the same word.
pub fn forgery_experiment_det(sp: &SchemeParams, trials: usize, seed: u64) -> Result<DetStats, AlgebraError> {
    if sp.n > 3 {
        return Err(AlgebraError::UnsupportedDimension(sp.n));
    }
    let outcomes = run_trials(trials, seed, |rng| -> Result<[usize; 5], AlgebraError> {
        let (public, private) = keygen(sp, rng)?;
        use crate::matrix::Conjugator;
        let b = Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng);
        let honest = private.x.conjugate(&b)?;
        let word = Word::random(sp.word_len, rng)?;
        let target = honest.determinant()?;
        let mut redraws = 0;
        let (mut forged, det_c_inv) = loop {
            let c = Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng);
            if let Some(inv) = c.determinant()?.inverse() {
                break (c, inv);
            }
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(AlgebraError::InvalidParams(
                    "no random matrix with unit determinant found".into(),
                ));
            }
        };
        let scale: TruncatedPoly = target.mul(&det_c_inv)?;
        for j in 0..sp.n {
            let e = forged.get(0, j).mul(&scale)?;
            forged.set(0, j, e)?;
        }
        debug_assert_eq!(forged.determinant()?, target);
        let pass = |v: Verdict| v.is_accept() as usize;
        Ok([
            pass(det_verify(&public, &b, &honest, &word)?),
            pass(beta_verify(&public, &b, &honest, &word)),
            pass(det_verify(&public, &b, &forged, &word)?),
            pass(beta_verify(&public, &b, &forged, &word)),
            redraws,
        ])
    });
    let mut stats = DetStats {
        trials,
        honest_det_pass: 0,
        honest_trace_pass: 0,
        forged_det_pass: 0,
        forged_trace_pass: 0,
        redraws: 0,
        seed,
    };
    for o in outcomes {
        let [a, b, c, d, e] = o?;
        stats.honest_det_pass += a;
        stats.honest_trace_pass += b;
        stats.forged_det_pass += c;
        stats.forged_trace_pass += d;
        stats.redraws += e;
    }
    Ok(stats)
}
