//! The compact quantum group SU_q(2): polynomial algebra, Haar state,
//! truncated GNS representation, twists and the equivariant Dirac operator.

pub mod element;
pub mod gns;
pub mod model;

pub use element::{
    antipode_fundamental, comultiply, haar, normal_order, HaarOracle, Monomial, QAlgebraElement,
    Tensor,
};
pub use gns::{BasisLabel, GnsTruncation};
pub use model::*;
