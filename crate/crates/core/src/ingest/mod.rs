//! Reading and writing of network cases and phasor records.

mod case;
mod phasor;

pub use case::{parse_case_script, Branch, Bus, BusKind, Generator, NetworkCase};
pub use phasor::{
    current_to_power, parse_phasor_table, power_to_current, sort_labels, write_phasor_table, MeasurementSet,
    MIN_VOLTAGE,
};
