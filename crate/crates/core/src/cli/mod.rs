pub mod output;
pub mod run;
pub mod scenario;
pub mod selftest;
