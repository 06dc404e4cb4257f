//! HTTP service and command-line front end for `preme-core`.
//!
//! [`api`] serves questionnaires from a workspace directory and keeps
//! explorer sessions in memory. [`cli`] implements the `preme` binary.

pub mod api;
pub mod cli;
