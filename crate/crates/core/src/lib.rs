//! Symbolic coherence for composites of pushforward and pullback functors.
//!
//! Functors ([`sgf::Sgf`]) are zigzag words of `f_*` and `f^*`; natural
//! transformations ([`sgnt::SgntTerm`]) are vertical stacks of whiskered
//! basic cells. [`decide`] answers equality questions with the coherence
//! theorems where they apply and with the finite-family [`oracle`]
//! otherwise.

pub mod cli;
pub mod decide;
pub mod oracle;
pub mod rewrite;
pub mod sgf;
pub mod sgnt;
pub mod spaces;
pub mod structures;
pub mod svg;
#[doc(hidden)]
pub mod testkit;
