pub mod simplex;
pub mod flow;
pub mod model;
pub mod bnb;
pub mod solution;
pub mod solve;
pub mod oracle;
pub mod verify;
pub mod mps;
