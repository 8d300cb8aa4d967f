pub mod numerics;
pub mod sigmodel;
pub mod beamform;
pub mod neuralnet;
pub mod harness;
pub mod cli;
