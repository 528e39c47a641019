use std::hint::black_box;
use std::time::{Duration, Instant};

use conjauth_core::poly::random_sparse_poly;
use conjauth_core::protocol::{keygen, run_full_session};
use conjauth_core::rng::{seeded, KEYGEN_STREAM, PROVER_STREAM, TRIAL_STREAM_BASE, VERIFIER_STREAM};
use conjauth_core::{Conjugator, Matrix};

use crate::args::{BenchArgs, BenchTarget};
use crate::{params, CmdResult, Failure};

// operands for poly-mul: a few products deep, like entries of a word
const POLY_TERMS: usize = 64;

fn report(name: &str, iters: usize, total: Duration) {
    let per = total.as_secs_f64() / iters.max(1) as f64;
    println!("{name}\t{iters}\t{:.3}\t{:.3}", total.as_secs_f64() * 1e3, per * 1e6);
}

pub fn run(args: &BenchArgs) -> CmdResult {
    let sp = params::preset(args.preset);
    let mut rng = seeded(args.seed, TRIAL_STREAM_BASE);
    println!("target\titers\ttotal_ms\tper_iter_us");
    match args.target {
        BenchTarget::PolyMul => {
            let pairs: Vec<_> = (0..args.iters)
                .map(|_| {
                    (
                        random_sparse_poly(&sp.ring, POLY_TERMS, true, &mut rng),
                        random_sparse_poly(&sp.ring, POLY_TERMS, true, &mut rng),
                    )
                })
                .collect();
            let start = Instant::now();
            for (a, b) in &pairs {
                black_box(a.mul(b).map_err(Failure::runtime)?);
            }
            report("poly-mul", args.iters, start.elapsed());
        }
        BenchTarget::Conjugate => {
            let (_, private) =
                keygen(&sp, &mut seeded(args.seed, KEYGEN_STREAM)).map_err(Failure::runtime)?;
            let bs: Vec<_> =
                (0..args.iters).map(|_| Matrix::random(&sp.ring, sp.n, sp.sparsity(), &mut rng)).collect();
            let start = Instant::now();
            for b in &bs {
                black_box(private.x.conjugate(b).map_err(Failure::runtime)?);
            }
            report("conjugate", args.iters, start.elapsed());
        }
        BenchTarget::Session => {
            let (public, private) =
                keygen(&sp, &mut seeded(args.seed, KEYGEN_STREAM)).map_err(Failure::runtime)?;
            let start = Instant::now();
            for i in 0..args.iters as u64 {
                let s = args.seed.wrapping_add(i);
                let t = run_full_session(
                    &public,
                    &private.x,
                    &sp,
                    seeded(s, VERIFIER_STREAM),
                    seeded(s, PROVER_STREAM),
                )
                .map_err(Failure::runtime)?;
                if !t.verdict.is_accept() {
                    return Err(Failure::runtime(format!("honest session {i} rejected")));
                }
            }
            report("session", args.iters, start.elapsed());
        }
    }
    Ok(0)
}
