//! Online maintenance of a maximum common independent set of a matroid and
//! an online-arriving partition matroid, together with the market-equilibrium
//! price machinery used to analyse its recourse.

pub mod eg;
pub mod harness;
pub mod element;
pub mod instances;
pub mod matroid;
pub mod market;
pub mod online;
pub mod rational;
pub mod skeleton;
