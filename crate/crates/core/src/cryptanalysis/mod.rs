//! Desk-scale attacks on the scheme: the linear system behind key
//! recovery, forgery experiments and key-size accounting.

pub mod forgery;
pub mod keysize;
pub mod linear;

pub use forgery::{
    det_params, det_verify, forgery_experiment_det, forgery_experiment_trace, DetStats, ForgeryStats,
    KeyKind, Strategy, FORGERY_HEADER,
};
pub use keysize::{key_size_report, KeySizeReport};
pub use linear::{
    build_linear_system, find_invertible_solution, in_span, solve_nullspace, system_size, AttackError,
    LinearSystem, SearchOutcome, SystemSize,
};
