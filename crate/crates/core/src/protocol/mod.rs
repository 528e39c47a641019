//! Key generation, parameters and the challenge–response sessions.

pub mod keys;
pub mod params;
pub mod session;

pub use keys::{keygen, PrivateKey, PublicKey};
pub use params::{validate_params, ParamsBlock, SchemeParams, SecurityLevel, ValidationReport};
pub use session::{
    beta_session, beta_verify, compute_challenge, prover_exponents, prover_respond, run_full_session,
    trace_test, verifier_commit, verifier_constants, verifier_verify, BetaTranscript, Commit, Constants,
    ErrorCode, Exponents, Hello, Message, ProtocolError, ProverSession, SessionTranscript, Verdict,
    VerifierSession, PROTOCOL_VERSION,
};
