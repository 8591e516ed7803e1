pub mod interp;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;

pub use interp::MonotoneCubic;
pub use quadrature::{integrate, integrate_half_line, GaussLegendre, QuadOptions, QuadResult};
