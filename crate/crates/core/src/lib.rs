//! Correspondence theory for lattice-based algebras with subordination,
//! precontact and dual precontact relations: forward ALBA correspondence,
//! Kracht-style inverse correspondence, and a finite-model oracle.

pub mod alba;
pub mod foterm;
pub mod kracht;
pub mod modterm;
pub mod oracle;
pub mod signature;
pub mod syntax;
