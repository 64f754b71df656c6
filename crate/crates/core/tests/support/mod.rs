//! Checks shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod codec;
pub mod consistency;
pub mod oracle;
