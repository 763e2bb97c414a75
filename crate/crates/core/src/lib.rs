//! Symplectic entanglement indicators for multipartite pure states.
//!
//! A pure state `psi` on `C^{d_1} (x) ... (x) C^{d_L}` lies on an orbit of
//! the local unitary group. The Fubini-Study form restricted to the set of
//! states with the same local spectra degenerates exactly when `psi` is
//! entangled; the dimension of that degeneracy, `E(psi)`, is computed here
//! by several independent routes (see [`entanglement`]).

pub mod entanglement;
pub mod error;
pub mod flows;
pub mod localalg;
pub mod numkit;
pub mod orbitgeom;
pub mod spectramap;
pub mod states;
pub mod statexpr;

pub use entanglement::{analyze, analyze_with, e_bipartite, EntanglementReport};
pub use error::{Error, Result};
pub use localalg::LocalHamiltonian;
pub use numkit::{CMatrix, RankTol};
pub use orbitgeom::{OrbitDims, Tolerances};
pub use states::MultipartiteState;
pub use statexpr::{parse, parse_state, ParseError, StateExpr};
