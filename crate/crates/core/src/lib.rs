pub mod linalg;
pub mod param;
pub mod targets;
pub mod nuts;
pub mod diagnostics;
pub mod bench;
pub mod check;
