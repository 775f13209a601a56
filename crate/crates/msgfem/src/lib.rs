//! Multiscale spectral generalized finite element solver for second-order
//! elliptic problems with rough coefficients on the unit square.
//!
//! The method decomposes the domain into overlapping subdomains, builds a
//! discrete A-harmonic space on each oversampling domain from a Steklov
//! (Dirichlet-to-Neumann) eigenproblem, extracts an optimal local basis
//! from a partition-of-unity-weighted eigenproblem, and glues local
//! particular functions and bases into a coarse trial space for a global
//! Galerkin solve.
//!
//! Entry points:
//! - [`mesh::GridMesh`], [`assemble`]: Q1 mesh and FE assembly
//! - [`coefficients`]: benchmark coefficient fields and problem data
//! - [`decomposition::Decomposition`]: overlapping subdomains + PU operators
//! - [`local_spaces`]: Steklov bases and local spectral spaces
//! - [`gfem::GfemWorkspace`]: the end-to-end solver
//! - [`experiments`]: the CLI sweep harness

pub mod assemble;
pub mod coefficients;
pub mod decomposition;
pub mod error;
pub mod experiments;
pub mod gfem;
pub mod linalg;
pub mod local_spaces;
pub mod mesh;
pub mod sparse;

pub use coefficients::{CoefficientField, Example, ProblemData};
pub use decomposition::Decomposition;
pub use error::{Error, Result};
pub use gfem::{GfemSolution, GfemWorkspace};
pub use mesh::{BoundaryLayout, GridMesh};
pub use sparse::{DofVector, SparseSymMatrix};
