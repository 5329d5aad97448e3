//! Dynamic graph watermarks for a small imperative language, tamper-proofed by
//! encoding integer constants as lookups into the watermark tree.
//!
//! Pipeline: [`watermark::embed`] a numeric watermark, [`encoder::protect`]
//! the constants, then measure cost and resilience with [`attacks`] and
//! [`bench`].

pub mod minilang;
pub mod attacks;
pub mod bench;
pub mod encoder;
pub mod ppct;
pub mod watermark;
