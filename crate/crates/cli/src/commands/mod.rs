pub mod compare;
pub mod eval;
pub mod gradcheck_cmd;
pub mod synth;
pub mod trace;
pub mod trainers;
