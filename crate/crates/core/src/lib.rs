//! Finite categories, presheaves on them, internal logic of the presheaf
//! topos, and the dimension theory of finite presheaves.

pub mod cli;
pub mod corpus;
pub mod ext;
pub mod fincat;
pub mod geometry;
pub mod logic;
pub mod presheaf;
pub mod sites;

pub use ext::ExtNat;
pub use fincat::{CategoryError, FinCategory, MorId, ObjId};
pub use presheaf::{Presheaf, PresheafError, PresheafMap, Subpresheaf};
