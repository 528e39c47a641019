use conjauth_core::cryptanalysis::{
    build_linear_system, find_invertible_solution, forgery_experiment_det, forgery_experiment_trace,
    key_size_report, solve_nullspace, system_size, AttackError, KeyKind, Strategy, FORGERY_HEADER,
};
use conjauth_core::protocol::PublicKey;
use conjauth_core::protocol::{beta_session, keygen, run_full_session};
use conjauth_core::rng::{seeded, KEYGEN_STREAM, PROVER_STREAM, VERIFIER_STREAM};
use conjauth_core::{Conjugator, DenseConjugator, SchemeParams};

use crate::args::{DetArgs, ForgeArgs, KeysizeArgs, LinearArgs, StrategyArg};
use crate::keys::read_public;
use crate::{params, CmdResult, Failure};

const SEARCH_STREAM: u64 = 3;

/// Honest-verifier sessions run with a stolen key. One variable leaves no
/// room for masking, so there the unmasked protocol is used.
fn impersonate(
    sp: &SchemeParams,
    public: &PublicKey,
    stolen: &DenseConjugator,
    sessions: usize,
    seed: u64,
) -> Result<usize, Failure> {
    let mut accepted = 0;
    for s in 0..sessions as u64 {
        let s = seed.wrapping_add(s);
        let ok = if sp.ring.vars() >= 2 {
            run_full_session(public, stolen, sp, seeded(s, VERIFIER_STREAM), seeded(s, PROVER_STREAM))
                .map_err(Failure::runtime)?
                .verdict
        } else {
            beta_session(public, stolen, sp, &mut seeded(s, VERIFIER_STREAM))
                .map_err(Failure::runtime)?
                .verdict
        };
        accepted += ok.is_accept() as usize;
    }
    Ok(accepted)
}

pub fn linear(args: &LinearArgs) -> CmdResult {
    let sp = match &args.pub_file {
        Some(path) => read_public(path)?.0,
        None => params::preset(args.preset),
    };
    let size = system_size(&sp.ring, sp.n, args.degree_cap);
    println!(
        "ring: p = {}, k = {}, N = {}, n = {}",
        sp.ring.modulus(),
        sp.ring.vars(),
        sp.ring.truncation(),
        sp.n
    );
    println!("equations: {}", size.equations);
    println!("unknowns: {} (degree cap {})", size.unknowns, args.degree_cap);

    // only generate a key once the system is known to fit
    let too_large = |e: &AttackError| {
        println!("not built: {e}");
        Ok(1)
    };
    if size.unknowns > args.budget.into() {
        return too_large(&AttackError::TooLarge {
            equations: size.equations,
            unknowns: size.unknowns,
            budget: args.budget,
        });
    }
    let public = match &args.pub_file {
        Some(path) => read_public(path)?.1,
        None => keygen(&sp, &mut seeded(args.seed, KEYGEN_STREAM)).map_err(Failure::runtime)?.0,
    };
    let sys = match build_linear_system(&public, args.degree_cap, args.budget) {
        Ok(sys) => sys,
        Err(e @ AttackError::TooLarge { .. }) => return too_large(&e),
        Err(e) => return Err(Failure::runtime(e)),
    };
    println!("system: {} x {}", sys.rows(), sys.cols());
    let basis = solve_nullspace(&sys);
    println!("nullspace dimension: {}", basis.len());
    let outcome = find_invertible_solution(
        &sys,
        &basis,
        &public,
        args.search_budget,
        &mut seeded(args.seed, SEARCH_STREAM),
    );
    println!("search attempts: {}", outcome.attempts);
    let Some(stolen) = outcome.conjugator else {
        println!("no invertible solution found");
        return Ok(1);
    };
    print!("recovered conjugator =\n{}", stolen.matrix());
    let verified = stolen.conjugate(&public.a).is_ok_and(|q| q == public.p);
    println!("X'^-1 A X' = P: {verified}");
    let accepted = impersonate(&sp, &public, &stolen, args.sessions, args.seed)?;
    println!("impersonation: {accepted}/{} sessions accepted", args.sessions);
    Ok(if verified && accepted == args.sessions { 0 } else { 1 })
}

pub fn forge(args: &ForgeArgs) -> CmdResult {
    let sp = params::preset(args.preset);
    let strategies: Vec<Strategy> = match args.strategy {
        StrategyArg::All => Strategy::ALL.to_vec(),
        StrategyArg::Honest => vec![Strategy::Honest],
        StrategyArg::RandomMatrix => vec![Strategy::RandomMatrix],
        StrategyArg::EchoChallenge => vec![Strategy::EchoChallenge],
        StrategyArg::TraceMatched => vec![Strategy::TraceMatched],
    };
    let keys = if args.trivial_keys { KeyKind::Trivial } else { KeyKind::Generated };
    println!("{FORGERY_HEADER}");
    for st in strategies {
        let stats =
            forgery_experiment_trace(&sp, args.trials, st, keys, args.seed).map_err(Failure::runtime)?;
        println!("{stats}");
    }
    Ok(0)
}

pub fn det(args: &DetArgs) -> CmdResult {
    let sp = params::preset(args.preset);
    let s = forgery_experiment_det(&sp, args.trials, args.seed).map_err(Failure::runtime)?;
    println!("trials\thonest_det\thonest_trace\tforged_det\tforged_trace\tredraws\tseed");
    println!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        s.trials,
        s.honest_det_pass,
        s.honest_trace_pass,
        s.forged_det_pass,
        s.forged_trace_pass,
        s.redraws,
        s.seed
    );
    Ok(0)
}

pub fn keysize(args: &KeysizeArgs) -> CmdResult {
    let sp = params::preset(args.preset);
    let r = key_size_report(&sp, args.measure_public, &mut seeded(args.seed, KEYGEN_STREAM))
        .map_err(Failure::runtime)?;
    println!("quantity\tformula_bits\tmeasured_bits");
    println!("matrix\t{:.1}\t{}", r.matrix_formula_bits, r.matrix_bytes * 8);
    println!("private (m = {})\t{:.1}\t{}", r.m, r.private_formula_bits, r.private_bytes * 8);
    if let Some(b) = r.public_bytes {
        println!("public\t{:.1}\t{}", 2.0 * r.matrix_formula_bits, b * 8);
    }
    Ok(0)
}
