use std::fs;
use std::path::Path;

use conjauth_core::cryptanalysis::det_params;
use conjauth_core::protocol::validate_params;
use conjauth_core::SchemeParams;

use crate::args::{ParamsCheckArgs, ParamsSource, Preset};
use crate::{CmdResult, Failure};

pub fn preset(p: Preset) -> SchemeParams {
    match p {
        Preset::Paper => SchemeParams::paper_default(),
        Preset::Desk => SchemeParams::desk(),
        Preset::Tiny => SchemeParams::tiny(),
        Preset::Micro => SchemeParams::micro(),
        Preset::Det => det_params(),
    }
}

pub fn from_file(path: &Path) -> Result<SchemeParams, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let sp: SchemeParams = toml::from_str(&text)
        .map_err(|e| Failure::usage(format!("bad params file {}: {e}", path.display())))?;
    sp.check().map_err(|e| Failure::usage(format!("bad params file {}: {e}", path.display())))?;
    Ok(sp)
}

pub fn resolve(src: &ParamsSource) -> Result<SchemeParams, Failure> {
    match &src.params_file {
        Some(path) => from_file(path),
        None => Ok(preset(src.preset)),
    }
}

pub fn check(args: &ParamsCheckArgs) -> CmdResult {
    let sp = match &args.params_file {
        Some(path) => from_file(path)?,
        None => preset(args.preset),
    };
    let report = validate_params(&sp, &args.t);
    println!(
        "n = {}, k = {}, N = {}, d = {}, m = {}..{}",
        sp.n,
        sp.ring.vars(),
        sp.ring.truncation(),
        sp.d,
        sp.m_range.0,
        sp.m_range.1
    );
    print!("{report}");
    Ok(if report.all_pass() { 0 } else { 1 })
}
