pub mod community;
pub mod local;
pub mod milp;
pub mod orchestrator;
pub mod scenario;
