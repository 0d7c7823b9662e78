//! Exact arithmetic on abelian metric groups and semigroups.
//!
//! The crate provides concrete group families ([`instances`]), a
//! metric-semigroup abstraction with axiom audits ([`algebra`]), normedness
//! checks, the envelope chain from a normed semigroup to a coordinate Banach
//! space, an exact enumeration engine for Rademacher sums and their
//! inequalities, bi-invariant word norms on free groups, and a batch runner.

pub mod algebra;
pub mod envelope;
pub mod error;
pub mod harness;
pub mod instances;
pub mod normedness;
pub mod rademacher;
pub mod scalar;
pub mod word_norm;

pub use algebra::{
    adjoin_identity, audit_axioms, displacement, find_idempotent, Adjoined, AuditReport, Capabilities, Displacement,
    Exactness, MetricSemigroup, WithUnit,
};
pub use error::{Error, Result};
pub use instances::{parse_group_spec, Element, GroupInstance, GroupKind, InstanceSpec};
pub use scalar::{format_rational, parse_rational, Scalar};
