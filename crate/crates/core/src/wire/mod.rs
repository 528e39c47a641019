//! Binary encodings, framing and the networked session drivers.

pub mod codec;
pub mod transport;

pub use codec::{
    decode, decode_private_key, decode_public_key, encode, encode_private_key, encode_public_key, DecodeError,
};
pub use transport::{
    duplex, exit_code, read_frame, run_prover_daemon, run_verifier_session, serve_session, write_frame,
    Fault, Frame, FramedStream, TransportError,
};
