use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use conjauth_core::matrix::Matrix;
use conjauth_core::protocol::{
    keygen, verifier_commit, Commit, Constants, ErrorCode, Exponents, Hello, Message, ParamsBlock,
    PrivateKey, ProtocolError, PublicKey, SchemeParams, Verdict,
};
use conjauth_core::rng::{seeded, KEYGEN_STREAM, PROVER_STREAM, VERIFIER_STREAM};
use conjauth_core::wire::codec::{self, put_factored, MSG_ERROR};
use conjauth_core::wire::{
    decode, decode_private_key, decode_public_key, duplex, encode, encode_private_key, encode_public_key,
    exit_code, run_prover_daemon, run_verifier_session, serve_session, DecodeError, Fault, FramedStream,
    TransportError,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn keys(sp: &SchemeParams, seed: u64) -> (PublicKey, PrivateKey) {
    keygen(sp, &mut seeded(seed, KEYGEN_STREAM)).unwrap()
}

fn random_message(sp: &SchemeParams, kind: usize, rng: &mut ChaCha8Rng) -> Message {
    let matrix = |rng: &mut ChaCha8Rng| Matrix::random(&sp.ring, sp.n, sp.sparsity(), rng);
    match kind {
        0 => Message::Hello(Hello {
            version: rng.gen(),
            params: ParamsBlock {
                modulus: rng.gen(),
                k: rng.gen(),
                truncation: rng.gen(),
                n: rng.gen(),
                d: rng.gen(),
                word_len: rng.gen(),
                exp_bound: rng.gen(),
            },
        }),
        1 => Message::Commit(verifier_commit(sp, rng).unwrap()),
        2 => Message::Exponents(Exponents { p: rng.gen::<u8>() as u32, q: rng.gen::<u8>() as u32 }),
        3 => Message::Constants(Constants {
            c: [0; 3].map(|_| rng.gen_range(1..11)),
            b_prime: rng.gen_bool(0.5).then(|| matrix(rng)),
        }),
        4 => Message::Response(matrix(rng)),
        5 => Message::Verdict(if rng.gen() { Verdict::Accept } else { Verdict::Reject }),
        _ => Message::Error {
            code: ErrorCode::from_byte(rng.gen_range(1..=5)).unwrap(),
            reason: (0..rng.gen_range(0..40)).map(|_| rng.gen_range('a'..='z')).collect(),
        },
    }
}

#[test]
fn every_message_type_round_trips() {
    let sp = SchemeParams::desk();
    let mut rng = seeded(7, 0);
    for kind in 0..7 {
        for _ in 0..1000 {
            let msg = random_message(&sp, kind, &mut rng);
            let bytes = encode(&msg);
            assert_eq!(decode(&bytes, &sp.ring).unwrap(), msg);
            // deterministic encoding
            assert_eq!(encode(&decode(&bytes, &sp.ring).unwrap()), bytes);
        }
    }
}

#[test]
fn corrupted_length_is_a_truncation() {
    let sp = SchemeParams::desk();
    let mut rng = seeded(8, 0);
    let msg = Message::Commit(verifier_commit(&sp, &mut rng).unwrap());
    let mut bytes = encode(&msg);
    bytes[1] ^= 0x01;
    bytes[2] ^= 0x10;
    assert!(matches!(decode(&bytes, &sp.ring), Err(DecodeError::Truncated { .. })));
    // chopping the tail off the payload
    let mut short = encode(&msg);
    short.truncate(short.len() - 3);
    assert!(matches!(decode(&short, &sp.ring), Err(DecodeError::Truncated { .. })));
}

#[test]
fn key_files_round_trip_and_carry_header() {
    let sp = SchemeParams::desk();
    let (public, private) = keys(&sp, 3);
    let pub_bytes = encode_public_key(&sp, &public);
    assert_eq!(&pub_bytes[..5], b"CJAT\x01");
    let (sp2, public2) = decode_public_key(&pub_bytes).unwrap();
    assert_eq!(public2, public);
    assert_eq!(sp2.block(), sp.block());
    let priv_bytes = encode_private_key(&sp, &private);
    let (_, private2) = decode_private_key(&priv_bytes).unwrap();
    assert_eq!(private2, private);
    assert_eq!(encode_private_key(&sp, &keys(&sp, 3).1), priv_bytes);

    let mut bad = pub_bytes.clone();
    bad[0] = b'X';
    assert_eq!(decode_public_key(&bad), Err(DecodeError::BadMagic));
    let mut bad = pub_bytes.clone();
    bad[4] = 2;
    assert_eq!(decode_public_key(&bad), Err(DecodeError::UnsupportedVersion(2)));
    let mut long = pub_bytes;
    long.push(0);
    assert_eq!(decode_public_key(&long), Err(DecodeError::TrailingBytes(1)));
}

/// Runs one session over an in-process pipe with both ends recording.
fn piped_session(
    sp: &SchemeParams,
    public: &PublicKey,
    private: &PrivateKey,
    seed: u64,
    fault: Option<Fault>,
) -> (
    Result<conjauth_core::protocol::SessionTranscript, TransportError>,
    Result<Verdict, TransportError>,
    Vec<u8>,
    usize,
) {
    let (a, b) = duplex();
    let prover = {
        let sp = sp.clone();
        let private = private.clone();
        thread::spawn(move || {
            let mut stream = FramedStream::recording(b);
            let r = serve_session(&mut stream, &private.x, &private.a, &sp, seeded(seed, PROVER_STREAM));
            (r, stream.log().unwrap().to_vec())
        })
    };
    let mut stream = FramedStream::recording(a);
    let outcome = run_verifier_session(&mut stream, public, sp, seeded(seed, VERIFIER_STREAM), fault);
    let frames = stream.frame_count();
    let log = stream.log().unwrap().to_vec();
    drop(stream);
    let (prover_result, prover_log) = prover.join().unwrap();
    if fault.is_none() {
        assert_eq!(prover_log, log, "both ends see the same byte stream");
    }
    (outcome, prover_result, log, frames)
}

fn split_frames(mut bytes: &[u8]) -> Vec<(u8, Vec<u8>)> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let len = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
        out.push((bytes[0], bytes[5..5 + len].to_vec()));
        bytes = &bytes[5 + len..];
    }
    out
}

#[test]
fn honest_session_over_pipe() {
    let sp = SchemeParams::desk();
    let (public, private) = keys(&sp, 11);
    for seed in 0..20 {
        let (outcome, prover, log, frames) = piped_session(&sp, &public, &private, seed, None);
        assert_eq!(exit_code(&outcome), 0);
        assert_eq!(prover.unwrap(), Verdict::Accept);
        assert_eq!(frames, 6);
        let types: Vec<u8> = split_frames(&log).iter().map(|f| f.0).collect();
        assert_eq!(types, [0x06, 0x01, 0x02, 0x03, 0x04, 0x05]);

        // no encoding of the private key, or of any single factor, crosses the wire
        let mut key_bytes = Vec::new();
        put_factored(&mut key_bytes, &private.x);
        assert!(!contains(&log, &key_bytes));
        assert!(!contains(&log, &encode_private_key(&sp, &private)));
    }
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn identical_seeds_give_identical_streams() {
    let sp = SchemeParams::desk();
    let (public, private) = keys(&sp, 12);
    let first = piped_session(&sp, &public, &private, 99, None).2;
    let second = piped_session(&sp, &public, &private, 99, None).2;
    assert_eq!(first, second);
    assert_ne!(first, piped_session(&sp, &public, &private, 100, None).2);
}

#[test]
fn mismatched_private_key_is_rejected() {
    let sp = SchemeParams::desk();
    let (public, _) = keys(&sp, 21);
    let (_, wrong) = keys(&sp, 22);
    let mut rejected = 0;
    for seed in 0..100 {
        let (outcome, _, _, _) = piped_session(&sp, &public, &wrong, seed, None);
        match exit_code(&outcome) {
            1 => rejected += 1,
            0 => {}
            code => panic!("unexpected exit code {code}: {outcome:?}"),
        }
    }
    assert!(rejected >= 99, "only {rejected}/100 rejected");
}

#[test]
fn constants_before_commit_is_a_protocol_error() {
    let sp = SchemeParams::desk();
    let (public, private) = keys(&sp, 31);
    let (outcome, prover, log, _) =
        piped_session(&sp, &public, &private, 1, Some(Fault::ConstantsBeforeCommit));
    assert_eq!(exit_code(&outcome), 2);
    assert!(matches!(
        outcome,
        Err(TransportError::Protocol(ProtocolError::Peer { code: ErrorCode::OutOfOrder, .. }))
    ));
    assert!(matches!(prover, Err(TransportError::Protocol(ProtocolError::OutOfOrder { .. }))));
    let frames = split_frames(&log);
    assert_eq!(frames.last().unwrap().0, MSG_ERROR);
    assert!(frames.iter().all(|f| f.0 != 0x04 && f.0 != 0x05));
}

#[test]
fn parameter_mismatch_fails_fast() {
    let sp = SchemeParams::desk();
    let (public, private) = keys(&sp, 41);
    let mut other = sp.clone();
    other.word_len = 7;
    let (a, b) = duplex();
    let prover = thread::spawn(move || {
        let mut stream = FramedStream::new(b);
        serve_session(&mut stream, &private.x, &private.a, &sp, seeded(1, PROVER_STREAM))
    });
    let mut stream = FramedStream::new(a);
    let outcome = run_verifier_session(&mut stream, &public, &other, seeded(1, VERIFIER_STREAM), None);
    assert_eq!(exit_code(&outcome), 2);
    assert!(matches!(prover.join().unwrap(), Err(TransportError::Protocol(ProtocolError::ParamsMismatch))));
}

#[test]
fn garbage_frame_gets_error_reply() {
    let sp = SchemeParams::desk();
    let (_, private) = keys(&sp, 51);
    let (mut a, b) = duplex();
    let prover = thread::spawn(move || {
        let mut stream = FramedStream::new(b);
        serve_session(&mut stream, &private.x, &private.a, &sp, seeded(1, PROVER_STREAM))
    });
    use std::io::Write;
    a.write_all(&[0x42, 0, 0, 0, 0]).unwrap();
    let reply = conjauth_core::wire::read_frame(&mut a).unwrap().unwrap();
    assert_eq!(reply.msg_type, MSG_ERROR);
    assert_eq!(reply.payload[0], ErrorCode::Malformed as u8);
    assert!(matches!(prover.join().unwrap(), Err(TransportError::Decode(DecodeError::UnknownType(0x42)))));
}

#[test]
fn daemon_serves_concurrent_tcp_sessions() {
    let sp = SchemeParams::desk();
    let (public, private) = keys(&sp, 61);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let key = Arc::new((sp.clone(), private));
    let daemon = thread::spawn(move || run_prover_daemon(listener, key, 5, Some(4)).unwrap());
    let clients: Vec<_> = (0..4)
        .map(|i| {
            let sp = sp.clone();
            let public = public.clone();
            thread::spawn(move || {
                let mut stream = FramedStream::new(TcpStream::connect(addr).unwrap());
                let outcome =
                    run_verifier_session(&mut stream, &public, &sp, seeded(i, VERIFIER_STREAM), None);
                exit_code(&outcome)
            })
        })
        .collect();
    for c in clients {
        assert_eq!(c.join().unwrap(), 0);
    }
    let results = daemon.join().unwrap();
    assert_eq!(results.len(), 4);
    assert!(results.iter().all(|r| r == &Ok(Verdict::Accept)));
}

#[test]
fn commit_decoding_validates_against_ring() {
    let sp = SchemeParams::desk();
    let mut rng = seeded(5, 0);
    let Commit { b, phi } = verifier_commit(&sp, &mut rng).unwrap();
    let msg = Message::Commit(Commit { b, phi });
    let bytes = encode(&msg);
    // same bytes read against a ring with fewer variables cannot parse
    let small = SchemeParams::tiny().ring;
    assert!(decode(&bytes, &small).is_err());
    let _ = codec::decode_payload(0x01, &bytes[5..], &sp.ring).unwrap();
}
