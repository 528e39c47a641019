use std::io::{self, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use conjauth_core::protocol::{run_full_session, SessionTranscript, Verdict};
use conjauth_core::rng::{seeded, PROVER_STREAM, VERIFIER_STREAM};
use conjauth_core::wire::{exit_code, run_prover_daemon, run_verifier_session, Fault, FramedStream};
use conjauth_core::{Endomorphism, SchemeParams};

use crate::args::{FaultArg, ProveArgs, SessionArgs, VerifyArgs};
use crate::keys::{read_private, read_public};
use crate::{CmdResult, Failure};

fn verdict_word(v: Verdict) -> &'static str {
    if v.is_accept() {
        "accept"
    } else {
        "reject"
    }
}

pub fn prove(args: &ProveArgs) -> CmdResult {
    let (sp, private) = read_private(&args.priv_file)?;
    let seed = args.seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("prover seed {s}");
        s
    });
    let listener = TcpListener::bind(args.listen)
        .map_err(|e| Failure::runtime(format!("cannot listen on {}: {e}", args.listen)))?;
    let addr = listener.local_addr().map_err(Failure::runtime)?;
    // scripts wait for this line to learn an OS-assigned port
    println!("listening on {addr}");
    io::stdout().flush().map_err(Failure::runtime)?;

    let results = run_prover_daemon(listener, Arc::new((sp, private)), seed, args.max_sessions)
        .map_err(Failure::runtime)?;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(v) => println!("session {i}: {}", verdict_word(*v)),
            Err(e) => println!("session {i}: error: {e}"),
        }
    }
    Ok(0)
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    let (sp, public) = read_public(&args.pub_file)?;
    let conn = match TcpStream::connect(args.connect) {
        Ok(c) => c,
        Err(e) => {
            println!("error: cannot connect to {}: {e}", args.connect);
            return Ok(2);
        }
    };
    let fault = args.fault.map(|f| match f {
        FaultArg::ConstantsBeforeCommit => Fault::ConstantsBeforeCommit,
    });
    let mut stream = FramedStream::new(conn);
    let outcome = run_verifier_session(&mut stream, &public, &sp, seeded(args.seed, VERIFIER_STREAM), fault);
    match &outcome {
        Ok(t) => println!("{}", verdict_word(t.verdict)),
        Err(e) => println!("error: {e}"),
    }
    Ok(exit_code(&outcome) as u8)
}

fn print_endo(phi: &Endomorphism) {
    let omitted: Vec<String> = phi.omitted_vars().iter().map(|v| format!("x{}", v + 1)).collect();
    println!("phi omits {}", omitted.join(", "));
    for (j, f) in phi.images().iter().enumerate() {
        println!("  x{} -> {f}", j + 1);
    }
}

fn print_transcript(sp: &SchemeParams, t: &SessionTranscript) {
    println!(
        "params: p = {}, k = {}, N = {}, n = {}, d = {}, word length {}",
        sp.ring.modulus(),
        sp.ring.vars(),
        sp.ring.truncation(),
        sp.n,
        sp.d,
        sp.word_len
    );
    print!("B =\n{}", t.b);
    print_endo(&t.phi);
    println!("exponents p = {}, q = {}", t.exponents.p, t.exponents.q);
    println!("constants c = {:?}", t.c);
    print!("B' =\n{}", t.b_prime);
    print!("response =\n{}", t.response);
    println!("word {}", t.word);
}

pub fn session(args: &SessionArgs) -> CmdResult {
    let (sp, public) = read_public(&args.pub_file)?;
    let (sp_priv, private) = read_private(&args.priv_file)?;
    if sp.block() != sp_priv.block() {
        return Err(Failure::usage("public and private key files carry different parameters"));
    }
    let outcome = run_full_session(
        &public,
        &private.x,
        &sp,
        seeded(args.seed, VERIFIER_STREAM),
        seeded(args.seed, PROVER_STREAM),
    );
    match outcome {
        Ok(t) => {
            print_transcript(&sp, &t);
            println!("{}", verdict_word(t.verdict));
            Ok(if t.verdict.is_accept() { 0 } else { 1 })
        }
        Err(e) => {
            println!("error: {e}");
            Ok(2)
        }
    }
}
