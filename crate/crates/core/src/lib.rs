//! Exact Fourier expansions of genus-2 Siegel modular forms built from
//! theta constants, lifts, Hecke coset actions and Borcherds products,
//! together with the reflection-group data of the associated Lorentzian
//! Kac–Moody algebras.

pub mod borcherds;
pub mod cache;
pub mod forms;
pub mod fourier;
pub mod hecke;
pub mod jacobi;
pub mod lattice;
pub mod qseries;
pub mod report;
pub mod theta;

/// Chapters of the book under `book/src`; their code blocks run as doctests.
pub mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub mod overview {}
    #[doc = include_str!("../../../book/src/series.md")]
    pub mod series {}
    #[doc = include_str!("../../../book/src/products.md")]
    pub mod products {}
    #[doc = include_str!("../../../book/src/hecke.md")]
    pub mod hecke {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    pub mod lattice {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
