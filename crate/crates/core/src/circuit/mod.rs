//! Resistive networks with memristive branches: netlists, DC solves and
//! transient stepping.

pub mod mna;
pub mod netlist;
pub mod transient;

pub use mna::{assemble, dc, solve, Branch, LinearSystem, Mna, Solution};
pub use netlist::{DeviceId, Element, Netlist, NodeId, Waveform, WaveformId, GROUND};
pub use transient::{
    transient, transient_with, Coupling, StepView, Trace, TraceRow, TransientOptions,
    TransientSummary,
};
