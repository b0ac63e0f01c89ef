pub mod netmodel;
pub mod rng;
pub mod scalar;
pub mod sparse;
pub mod neurolp;
pub mod assignment;
pub mod cnd;
pub mod enhance;
pub mod multipath;
pub mod simulate;

/// Double precision is what the engine runs on; `f32` works for small LPs.
pub type Lp = neurolp::GeneralFormLp<f64>;
pub type LpF32 = neurolp::GeneralFormLp<f32>;
pub type Solution = neurolp::LpSolution<f64>;
