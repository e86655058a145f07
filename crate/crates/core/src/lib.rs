//! Two-channel critically sampled filterbanks on arbitrary weighted graphs.
//!
//! The building blocks are a graph Fourier basis whose columns fold under
//! the sampling pattern (`JU = UΦ`), a QECQP solver used to construct it,
//! spectral filter quartets with perfect reconstruction, and a multilevel
//! pyramid driven by Kron reduction and spectral sparsification.

pub mod audit;
pub mod error;
pub mod filterbank;
pub mod fourier;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod multires;
pub mod qecqp;
pub mod sampling;
pub mod seeds;

pub use error::{Error, Result};
pub use filterbank::{analyze, synthesize, verify_pr, FilterDesign, FilterLevel, FilterVector, Quartet};
pub use fourier::{compute_basis, FourierBasis, SignedPermutation};
pub use graph::{generate, laplacian, parse_graph, write_edge_list, Edge, Graph, GraphKind, LaplacianMatrix, Signal};
pub use sampling::{greedy_max_cut, Channel, SamplingPattern};
pub use multires::{build_pyramid, pyramid_analyze, pyramid_synthesize, CoefficientTree, Pyramid, PyramidConfig};
