//! Explicit semilinear algebra over truncated Laurent series with
//! finite-field coefficients: local shtukas for `GL_r` and their
//! quasi-isogenies, Lang trivialization and Tate modules, Hodge and Newton
//! polygons, boundedness and decency tests, affine Deligne-Lusztig point
//! sets, the quasi-isogeny metric, and the norm-one torus of a ramified
//! quadratic extension.
//!
//! All arithmetic is exact with explicit precision horizons: a query whose
//! answer could depend on unknown coefficients fails with a precision error
//! rather than guessing.

pub mod adlv;
pub mod error;
pub mod field;
pub mod json;
pub mod matrix;
pub mod newton;
pub mod ring;
pub mod sample;
pub mod semilinear;
pub mod series;
pub mod shtuka;
pub mod torus;

pub use error::{Error, Result};
pub use field::FieldSpec;
pub use matrix::LoopElement;
pub use ring::{Coeff, CoeffRing, RingKind};
pub use semilinear::{bounded_by, relative_position, smith_form, BoundRelation, BoundSpec, Coweight};
pub use series::{Series, Valuation};
pub use shtuka::{
    is_quasi_isogeny, lang_trivialize, lift_qisog_dual_numbers, rational_tate_of_qisog,
    tate_module, LocalShtuka, QuasiIsogeny, TateModule,
};
