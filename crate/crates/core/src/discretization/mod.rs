//! Triangulation and piecewise-linear calculus.

pub mod fem;
pub mod mesh;

pub use fem::{dirichlet_energy, exp_integral, poisson_solve, ExpIntegral, Field, PoissonSolver, SparseFactor};
pub use mesh::{triangulate, triangulate_graded, Grading, Mesh, PointLocator};
