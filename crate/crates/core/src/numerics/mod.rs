pub mod bump;
pub mod cheb;
pub mod fd;
pub mod fit;
pub mod ode;
pub mod quad;
