//! The mdbook guide's chapters, compiled as doc-tests so every snippet in
//! `book/` builds and runs against the current API.
#![allow(unused)]

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data-model.md")]
pub mod data_model {}

#[doc = include_str!("../../../book/src/conventional-models.md")]
pub mod conventional_models {}

#[doc = include_str!("../../../book/src/prompting.md")]
pub mod prompting {}

#[doc = include_str!("../../../book/src/augmentation.md")]
pub mod augmentation {}

#[doc = include_str!("../../../book/src/aggregation.md")]
pub mod aggregation {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
