use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("boundary self-intersects between segments {first} and {second}")]
    SelfIntersection { first: usize, second: usize },

    #[error("point ({x}, {y}) lies outside the admissible region: {reason}")]
    OutsideDomain { x: f64, y: f64, reason: String },

    #[error("evaluation at the singularity ({x}, {y})")]
    Singularity { x: f64, y: f64 },

    #[error("charge system ill-conditioned (condition estimate {condition:.3e}); refine the charge layout")]
    IllConditioned { condition: f64 },

    #[error("accuracy gate failed: {0}")]
    Accuracy(String),

    #[error("meshing failed near boundary segment {segment}: {reason}")]
    Mesh { segment: usize, reason: String },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("field is not Dirichlet-admissible: {0}")]
    NotAdmissible(String),

    #[error("minimization diverged after {iterations} iterations: {reason}")]
    Diverged { iterations: usize, reason: String, last_iterate: Vec<f64> },

    #[error("mesh too coarse near ({x}, {y}): edge length {found:.3e} exceeds required {required:.3e}")]
    Resolution { x: f64, y: f64, found: f64, required: f64 },

    #[error("sampling window leaves the domain; largest admissible radius is {max_radius:.6}")]
    Window { max_radius: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
