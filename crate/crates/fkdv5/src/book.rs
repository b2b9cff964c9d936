//! Compiles every code block in the guide (`book/`) as a doc-test, so the
//! narrative documentation can never drift out of sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/expressions.md")]
mod expressions {}

#[doc = include_str!("../../../book/src/equivalence.md")]
mod equivalence {}

#[doc = include_str!("../../../book/src/classification.md")]
mod classification {}

#[doc = include_str!("../../../book/src/symmetries.md")]
mod symmetries {}

#[doc = include_str!("../../../book/src/reductions.md")]
mod reductions {}

#[doc = include_str!("../../../book/src/solutions.md")]
mod solutions {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
