//! Parametric mortality laws and the questions one can ask of them: how
//! likely a person of a given age is to survive a short window, at what age
//! that survival bet becomes a coin flip, how the lifetime tail behaves,
//! and how to fit Gompertz and Gompertz–Makeham laws to data. The
//! St. Petersburg game lives alongside as the classic example of an
//! expectation dominated by events too rare to matter.

pub mod betting;
pub mod cli;
pub mod fitting;
pub mod lifetable_io;
pub mod models;
pub mod stpetersburg;

mod numeric;
