use thiserror::Error;

/// Errors produced by mesh construction, assembly and the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh must have at least 2 cells per axis, got {0}x{1}")]
    MeshTooSmall(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient value {value} at element {element} violates ellipticity (must be > 0)")]
    NonPositiveCoefficient { element: usize, value: f64 },
    #[error("patch scale {patch_scale} is not an integer multiple of the cell size {h}")]
    PatchScaleNotResolved { patch_scale: f64, h: f64 },
    #[error("edge ({a}, {b}) is not an edge of the mesh")]
    EdgeNotInMesh { a: usize, b: usize },
    #[error("{0} subdomains per axis exceed the {1} mesh cells per axis")]
    TooManySubdomains(usize, usize),
    #[error("overlap_layers must be >= 1")]
    OverlapTooSmall,
    #[error("vector has entries up to {max_abs:.3e} outside dof({subdomain}); zero extension requires support on the internal dofs")]
    SupportViolation { subdomain: usize, max_abs: f64 },
    #[error("matrix is not positive definite: pivot {pivot:.3e} at index {index}")]
    IndefinitePivot { index: usize, pivot: f64 },
    #[error("quadratic form u'Ku = {value:.3e} is negative beyond round-off; matrix looks indefinite")]
    IndefiniteForm { value: f64 },
    #[error("iterative solve did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolveDidNotConverge { iterations: usize, residual: f64 },
    #[error("matrix asymmetry {asymmetry:.3e} exceeds {tolerance:.3e} relative")]
    AsymmetricInput { asymmetry: f64, tolerance: f64 },
    #[error("right-hand side matrix of the eigenproblem is numerically zero")]
    DegenerateMass,
    #[error("eigenvalue {value:.3e} below the round-off clamp; pencil is not positive semidefinite")]
    NegativeEigenvalue { value: f64 },
    #[error("requested {requested} but only {available} available")]
    OutOfRange { requested: usize, available: usize },
    #[error("reference solution has zero energy norm")]
    ZeroNormReference,
    #[error("argument {name} = {value} outside its admissible range")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
