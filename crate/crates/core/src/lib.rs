pub mod error;
pub mod field;
pub mod grid;
pub mod kernels;
pub mod norms;
pub mod quadrature;
pub mod random;
pub mod modal;
pub mod weak_dn;
pub mod helmholtz;
pub mod global;
pub mod stokes;
pub mod linear;
pub mod lagrangian;
pub mod config;
pub mod runner;
