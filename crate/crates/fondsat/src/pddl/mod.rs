pub mod parser;
pub mod ground;
pub mod grounded;
