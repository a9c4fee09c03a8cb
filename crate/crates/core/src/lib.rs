//! Rotationally symmetric magnetic systems on the two-sphere.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`surface`] builds and validates profile functions and magnetic
//!   strengths, and computes the scalar geometry and contact bounds.
//! * [`dynamics`] integrates the magnetic flow on the unit tangent bundle,
//!   finds latitude orbits and momentum bands.
//! * [`action`] averages the contact-form integrand over invariant tori and
//!   assembles contact certificates.
//! * [`poincare`] computes the annulus return map at low energy and its
//!   twist coefficient.
//! * [`index`] evaluates Maslov intervals and Conley-Zehnder bounds.

pub mod action;
pub mod dynamics;
pub mod index;
pub mod jet;
pub mod ode;
pub mod poincare;
pub mod quad;
pub mod roots;
pub mod surface;
mod tableau;
