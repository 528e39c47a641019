//! Session operations for both protocol variants, and the prover/verifier
//! state machines that drive the full variant one message at a time.
//!
//! Message order: Hello → Commit → Exponents → Constants → Response →
//! Verdict. The verifier sends Hello, Commit, Constants and Verdict; the
//! prover sends Exponents and Response.

use rand::Rng;
use thiserror::Error;

use crate::endo::Endomorphism;
use crate::error::AlgebraError;
use crate::matrix::{Conjugator, Matrix, Word};
use crate::poly::TruncatedPoly;

use super::keys::PublicKey;
use super::params::{ParamsBlock, SchemeParams};

pub const PROTOCOL_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hello {
    pub version: u8,
    pub params: ParamsBlock,
}

/// The verifier's commitment: a random matrix and a masking endomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commit {
    pub b: Matrix,
    pub phi: Endomorphism,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponents {
    pub p: u32,
    pub q: u32,
}

/// The verifier's constants. `b_prime` is optional; when present it must
/// equal the challenge the prover recomputes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constants {
    pub c: [u32; 3],
    pub b_prime: Option<Matrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    OutOfOrder = 1,
    ParamsMismatch = 2,
    ChallengeMismatch = 3,
    Malformed = 4,
    Internal = 5,
}

impl ErrorCode {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            1 => Self::OutOfOrder,
            2 => Self::ParamsMismatch,
            3 => Self::ChallengeMismatch,
            4 => Self::Malformed,
            5 => Self::Internal,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello(Hello),
    Commit(Commit),
    Exponents(Exponents),
    Constants(Constants),
    Response(Matrix),
    Verdict(Verdict),
    Error { code: ErrorCode, reason: String },
}

impl Message {
    pub fn name(&self) -> &'static str {
        match self {
            Message::Hello(_) => "Hello",
            Message::Commit(_) => "Commit",
            Message::Exponents(_) => "Exponents",
            Message::Constants(_) => "Constants",
            Message::Response(_) => "Response",
            Message::Verdict(_) => "Verdict",
            Message::Error { .. } => "Error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("unexpected {got} message while waiting for {expected}")]
    OutOfOrder { expected: &'static str, got: &'static str },
    #[error("peer parameters do not match ours")]
    ParamsMismatch,
    #[error("transmitted challenge does not match the recomputed one")]
    ChallengeMismatch,
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("peer reported error {code:?}: {reason}")]
    Peer { code: ErrorCode, reason: String },
    #[error("session already finished")]
    Finished,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl ProtocolError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ProtocolError::OutOfOrder { .. } | ProtocolError::Finished => ErrorCode::OutOfOrder,
            ProtocolError::ParamsMismatch => ErrorCode::ParamsMismatch,
            ProtocolError::ChallengeMismatch => ErrorCode::ChallengeMismatch,
            ProtocolError::InvalidMessage(_) => ErrorCode::Malformed,
            ProtocolError::Peer { code, .. } => *code,
            ProtocolError::Algebra(_) => ErrorCode::Internal,
        }
    }

    pub fn to_message(&self) -> Message {
        Message::Error { code: self.code(), reason: self.to_string() }
    }
}

/// Everything exchanged in one full session, plus the verifier's word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionTranscript {
    pub b: Matrix,
    pub phi: Endomorphism,
    pub exponents: Exponents,
    pub c: [u32; 3],
    pub b_prime: Matrix,
    pub response: Matrix,
    pub word: Word,
    pub verdict: Verdict,
}

impl SessionTranscript {
    /// Recomputes `B'` from the transcript fields.
    pub fn recompute_challenge(&self, a: &Matrix) -> Result<Matrix, AlgebraError> {
        compute_challenge(a, &self.b, self.exponents, self.c)
    }
}

/// `B` random with `√d`-sparse entries; `φ` omitting `k0` variables with
/// `k0` uniform in the configured range.
pub fn verifier_commit<R: Rng + ?Sized>(sp: &SchemeParams, rng: &mut R) -> Result<Commit, AlgebraError> {
    let sparsity = sp.sparsity();
    let b = Matrix::random(&sp.ring, sp.n, sparsity, rng);
    let k0 = rng.gen_range(sp.k0_range.0..=sp.k0_range.1);
    let phi = Endomorphism::generate(&sp.ring, k0, sparsity, sp.endo_image_degree, rng)?;
    Ok(Commit { b, phi })
}

pub fn prover_exponents<R: Rng + ?Sized>(sp: &SchemeParams, rng: &mut R) -> Exponents {
    Exponents { p: rng.gen_range(1..=sp.exp_bound), q: rng.gen_range(1..=sp.exp_bound) }
}

/// Three independent uniform nonzero field elements.
pub fn verifier_constants<R: Rng + ?Sized>(sp: &SchemeParams, rng: &mut R) -> [u32; 3] {
    let p = sp.ring.modulus() as u32;
    [0; 3].map(|_| rng.gen_range(1..p))
}

/// `B' = c₁A + c₂B + c₃AᵖBᵠ`.
pub fn compute_challenge(
    a: &Matrix,
    b: &Matrix,
    exps: Exponents,
    c: [u32; 3],
) -> Result<Matrix, AlgebraError> {
    let ap_bq = a.pow(exps.p)?.mul(&b.pow(exps.q)?)?;
    a.scale(c[0]).add(&b.scale(c[1]))?.add(&ap_bq.scale(c[2]))
}

/// `φ(X⁻¹B'X)`.
pub fn prover_respond<C: Conjugator + ?Sized>(
    key: &C,
    phi: &Endomorphism,
    b_prime: &Matrix,
) -> Result<Matrix, AlgebraError> {
    key.conjugate_masked(b_prime, phi)
}

/// The two traces the verifier compares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceTest {
    /// `tr w(φ(A), φ(B'))`.
    pub expected: TruncatedPoly,
    /// `tr w(φ(P), response)`.
    pub observed: TruncatedPoly,
}

impl TraceTest {
    pub fn verdict(&self) -> Verdict {
        if self.expected == self.observed {
            Verdict::Accept
        } else {
            Verdict::Reject
        }
    }
}

pub fn trace_test(
    public: &PublicKey,
    phi: &Endomorphism,
    b_prime: &Matrix,
    response: &Matrix,
    word: &Word,
) -> Result<TraceTest, AlgebraError> {
    let expected = word.trace(&public.a.apply_endo(phi)?, &b_prime.apply_endo(phi)?)?;
    let observed = word.trace(&public.p.apply_endo(phi)?, response)?;
    Ok(TraceTest { expected, observed })
}

/// Accepts iff `tr w(φ(A), φ(B')) = tr w(φ(P), response)`. Malformed
/// inputs reject.
pub fn verifier_verify(
    public: &PublicKey,
    phi: &Endomorphism,
    b_prime: &Matrix,
    response: &Matrix,
    word: &Word,
) -> Verdict {
    match trace_test(public, phi, b_prime, response, word) {
        Ok(t) => t.verdict(),
        Err(e) => {
            log::warn!("rejecting malformed response: {e}");
            Verdict::Reject
        }
    }
}

/// One run of the unmasked variant: challenge `B`, response `X⁻¹BX`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaTranscript {
    pub b: Matrix,
    pub response: Matrix,
    pub word: Word,
    pub verdict: Verdict,
}

/// Accepts iff `tr w(A, B) = tr w(P, response)`.
pub fn beta_verify(public: &PublicKey, b: &Matrix, response: &Matrix, word: &Word) -> Verdict {
    let check = || -> Result<bool, AlgebraError> {
        Ok(word.trace(&public.a, b)? == word.trace(&public.p, response)?)
    };
    match check() {
        Ok(true) => Verdict::Accept,
        Ok(false) => Verdict::Reject,
        Err(e) => {
            log::warn!("rejecting malformed response: {e}");
            Verdict::Reject
        }
    }
}

pub fn beta_session<C: Conjugator + ?Sized, R: Rng + ?Sized>(
    public: &PublicKey,
    key: &C,
    sp: &SchemeParams,
    rng: &mut R,
) -> Result<BetaTranscript, AlgebraError> {
    let b = Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng);
    let response = key.conjugate(&b)?;
    let word = Word::random(sp.word_len, rng)?;
    let verdict = beta_verify(public, &b, &response, &word);
    Ok(BetaTranscript { b, response, word, verdict })
}

fn out_of_order(expected: &'static str, got: &Message) -> ProtocolError {
    match got {
        Message::Error { code, reason } => ProtocolError::Peer { code: *code, reason: reason.clone() },
        other => ProtocolError::OutOfOrder { expected, got: other.name() },
    }
}

fn check_matrix(sp: &SchemeParams, m: &Matrix, what: &str) -> Result<(), ProtocolError> {
    if m.dim() != sp.n || *m.ring() != sp.ring {
        return Err(ProtocolError::InvalidMessage(format!("{what} has the wrong shape or ring")));
    }
    Ok(())
}

enum ProverState {
    AwaitHello,
    AwaitCommit,
    AwaitConstants { commit: Commit, exps: Exponents },
    AwaitVerdict,
    Done(Verdict),
    Failed,
}

/// Prover side of the full protocol. Holds only what the prover needs:
/// the conjugator and the public base matrix `A`.
pub struct ProverSession<'k, C: Conjugator + ?Sized, R: Rng> {
    key: &'k C,
    a: &'k Matrix,
    sp: &'k SchemeParams,
    rng: R,
    state: ProverState,
}

impl<'k, C: Conjugator + ?Sized, R: Rng> ProverSession<'k, C, R> {
    pub fn new(key: &'k C, a: &'k Matrix, sp: &'k SchemeParams, rng: R) -> Self {
        Self { key, a, sp, rng, state: ProverState::AwaitHello }
    }

    /// Verdict reported by the verifier, once the session is over.
    pub fn verdict(&self) -> Option<Verdict> {
        match self.state {
            ProverState::Done(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.state, ProverState::Done(_) | ProverState::Failed)
    }

    /// Consumes one incoming message and returns the reply, if any. Any
    /// error leaves the session failed.
    pub fn handle(&mut self, msg: Message) -> Result<Option<Message>, ProtocolError> {
        let result = self.step(msg);
        if result.is_err() {
            self.state = ProverState::Failed;
        }
        result
    }

    fn step(&mut self, msg: Message) -> Result<Option<Message>, ProtocolError> {
        match std::mem::replace(&mut self.state, ProverState::Failed) {
            ProverState::AwaitHello => match msg {
                Message::Hello(h) => {
                    if h.version != PROTOCOL_VERSION || h.params != self.sp.block() {
                        return Err(ProtocolError::ParamsMismatch);
                    }
                    self.state = ProverState::AwaitCommit;
                    Ok(None)
                }
                other => Err(out_of_order("Hello", &other)),
            },
            ProverState::AwaitCommit => match msg {
                Message::Commit(commit) => {
                    check_matrix(self.sp, &commit.b, "committed matrix")?;
                    if *commit.phi.ring() != self.sp.ring {
                        return Err(ProtocolError::InvalidMessage(
                            "endomorphism lives in another ring".into(),
                        ));
                    }
                    let exps = prover_exponents(self.sp, &mut self.rng);
                    self.state = ProverState::AwaitConstants { commit, exps };
                    Ok(Some(Message::Exponents(exps)))
                }
                other => Err(out_of_order("Commit", &other)),
            },
            ProverState::AwaitConstants { commit, exps } => match msg {
                Message::Constants(constants) => {
                    let p = self.sp.ring.modulus() as u32;
                    if constants.c.iter().any(|&c| c == 0 || c >= p) {
                        return Err(ProtocolError::InvalidMessage(
                            "constants must be nonzero field elements".into(),
                        ));
                    }
                    let b_prime = compute_challenge(self.a, &commit.b, exps, constants.c)?;
                    if let Some(sent) = &constants.b_prime {
                        if *sent != b_prime {
                            return Err(ProtocolError::ChallengeMismatch);
                        }
                    }
                    let response = prover_respond(self.key, &commit.phi, &b_prime)?;
                    self.state = ProverState::AwaitVerdict;
                    Ok(Some(Message::Response(response)))
                }
                other => Err(out_of_order("Constants", &other)),
            },
            ProverState::AwaitVerdict => match msg {
                Message::Verdict(v) => {
                    self.state = ProverState::Done(v);
                    Ok(None)
                }
                other => Err(out_of_order("Verdict", &other)),
            },
            ProverState::Done(v) => {
                self.state = ProverState::Done(v);
                Err(ProtocolError::Finished)
            }
            ProverState::Failed => Err(ProtocolError::Finished),
        }
    }
}

enum VerifierState {
    Start,
    AwaitExponents { commit: Commit },
    AwaitResponse { commit: Commit, exps: Exponents, c: [u32; 3], b_prime: Matrix },
    Done(Box<SessionTranscript>),
    Failed,
}

/// Verifier side of the full protocol. It is built from the public key
/// alone.
pub struct VerifierSession<'k, R: Rng> {
    public: &'k PublicKey,
    sp: &'k SchemeParams,
    rng: R,
    send_b_prime: bool,
    state: VerifierState,
}

impl<'k, R: Rng> VerifierSession<'k, R> {
    pub fn new(public: &'k PublicKey, sp: &'k SchemeParams, rng: R) -> Self {
        Self { public, sp, rng, send_b_prime: false, state: VerifierState::Start }
    }

    /// Also transmit `B'` alongside the constants.
    pub fn with_b_prime(mut self, send: bool) -> Self {
        self.send_b_prime = send;
        self
    }

    pub fn transcript(&self) -> Option<&SessionTranscript> {
        match &self.state {
            VerifierState::Done(t) => Some(t),
            _ => None,
        }
    }

    pub fn into_transcript(self) -> Option<SessionTranscript> {
        match self.state {
            VerifierState::Done(t) => Some(*t),
            _ => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.state, VerifierState::Done(_) | VerifierState::Failed)
    }

    /// Opens the session: returns the Hello and Commit messages.
    pub fn open(&mut self) -> Result<[Message; 2], ProtocolError> {
        if !matches!(self.state, VerifierState::Start) {
            return Err(ProtocolError::Finished);
        }
        let commit = match verifier_commit(self.sp, &mut self.rng) {
            Ok(c) => c,
            Err(e) => {
                self.state = VerifierState::Failed;
                return Err(e.into());
            }
        };
        let hello = Message::Hello(Hello { version: PROTOCOL_VERSION, params: self.sp.block() });
        let out = Message::Commit(commit.clone());
        self.state = VerifierState::AwaitExponents { commit };
        Ok([hello, out])
    }

    pub fn handle(&mut self, msg: Message) -> Result<Option<Message>, ProtocolError> {
        let result = self.step(msg);
        if result.is_err() {
            self.state = VerifierState::Failed;
        }
        result
    }

    fn step(&mut self, msg: Message) -> Result<Option<Message>, ProtocolError> {
        match std::mem::replace(&mut self.state, VerifierState::Failed) {
            VerifierState::Start => Err(out_of_order("nothing (session not opened)", &msg)),
            VerifierState::AwaitExponents { commit } => match msg {
                Message::Exponents(exps) => {
                    let bound = 1..=self.sp.exp_bound;
                    if !bound.contains(&exps.p) || !bound.contains(&exps.q) {
                        return Err(ProtocolError::InvalidMessage(format!(
                            "exponents ({}, {}) outside [1, {}]",
                            exps.p, exps.q, self.sp.exp_bound
                        )));
                    }
                    let c = verifier_constants(self.sp, &mut self.rng);
                    let b_prime = compute_challenge(&self.public.a, &commit.b, exps, c)?;
                    let reply = Message::Constants(Constants {
                        c,
                        b_prime: self.send_b_prime.then(|| b_prime.clone()),
                    });
                    self.state = VerifierState::AwaitResponse { commit, exps, c, b_prime };
                    Ok(Some(reply))
                }
                other => Err(out_of_order("Exponents", &other)),
            },
            VerifierState::AwaitResponse { commit, exps, c, b_prime } => match msg {
                Message::Response(response) => {
                    let word = Word::random(self.sp.word_len, &mut self.rng)?;
                    let verdict = verifier_verify(self.public, &commit.phi, &b_prime, &response, &word);
                    self.state = VerifierState::Done(Box::new(SessionTranscript {
                        b: commit.b,
                        phi: commit.phi,
                        exponents: exps,
                        c,
                        b_prime,
                        response,
                        word,
                        verdict,
                    }));
                    Ok(Some(Message::Verdict(verdict)))
                }
                other => Err(out_of_order("Response", &other)),
            },
            VerifierState::Done(t) => {
                self.state = VerifierState::Done(t);
                Err(ProtocolError::Finished)
            }
            VerifierState::Failed => Err(ProtocolError::Finished),
        }
    }
}

/// Runs an honest full session in process, passing messages between the
/// two state machines.
pub fn run_full_session<C, R1, R2>(
    public: &PublicKey,
    key: &C,
    sp: &SchemeParams,
    verifier_rng: R1,
    prover_rng: R2,
) -> Result<SessionTranscript, ProtocolError>
where
    C: Conjugator + ?Sized,
    R1: Rng,
    R2: Rng,
{
    let mut verifier = VerifierSession::new(public, sp, verifier_rng);
    let mut prover = ProverSession::new(key, &public.a, sp, prover_rng);
    let mut to_prover: Vec<Message> = verifier.open()?.into();
    while !to_prover.is_empty() {
        let mut to_verifier = Vec::new();
        for msg in to_prover.drain(..) {
            if let Some(reply) = prover.handle(msg)? {
                to_verifier.push(reply);
            }
        }
        for msg in to_verifier {
            if let Some(reply) = verifier.handle(msg)? {
                to_prover.push(reply);
            }
        }
    }
    verifier
        .into_transcript()
        .ok_or_else(|| ProtocolError::InvalidMessage("session ended without a verdict".into()))
}
