use std::fs;
use std::path::Path;

use conjauth_core::protocol::{keygen as generate, PrivateKey, PublicKey};
use conjauth_core::rng::{seeded, KEYGEN_STREAM};
use conjauth_core::wire::{decode_private_key, decode_public_key, encode_private_key, encode_public_key};
use conjauth_core::SchemeParams;

use crate::args::KeygenArgs;
use crate::{params, CmdResult, Failure};

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_public(path: &Path) -> Result<(SchemeParams, PublicKey), Failure> {
    decode_public_key(&read(path)?)
        .map_err(|e| Failure::usage(format!("bad public key file {}: {e}", path.display())))
}

pub fn read_private(path: &Path) -> Result<(SchemeParams, PrivateKey), Failure> {
    decode_private_key(&read(path)?)
        .map_err(|e| Failure::usage(format!("bad private key file {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn keygen(args: &KeygenArgs) -> CmdResult {
    let sp = params::resolve(&args.params)?;
    let (public, private) = generate(&sp, &mut seeded(args.seed, KEYGEN_STREAM)).map_err(Failure::runtime)?;
    write(&args.out_pub, &encode_public_key(&sp, &public))?;
    write(&args.out_priv, &encode_private_key(&sp, &private))?;
    println!(
        "wrote {} and {} ({} factors)",
        args.out_pub.display(),
        args.out_priv.display(),
        private.x.factors().len()
    );
    Ok(0)
}
