//! Ground-truth steady states and synthetic measurements.

mod measure;
mod powerflow;
mod scenario;
pub mod synthetic;

pub use measure::{add_noise, measure};
pub use powerflow::{
    power_flow_jacobian, power_mismatch, solve_power_flow, BusSets, SteadyState, PF_MAX_ITER, PF_TOLERANCE,
};
pub use scenario::{generate_scenarios, parse_manifest, slot_rng, write_manifest, ScenarioSet};

use crate::ingest::NetworkCase;
use crate::netmodel::{build_admittance, BuildMode};
use crate::{Error, Result};

/// Solves the power flow of every slot of a scenario set.
pub fn solve_scenarios(set: &ScenarioSet) -> Result<Vec<SteadyState>> {
    let y = build_admittance(&set.base, BuildMode::Physical)?.to_dense();
    (0..set.slots()).map(|k| powerflow::solve_with_matrix(&set.case_for_slot(k), &y)).collect()
}

/// Rejects hidden buses that carry load or generation: hidden-node
/// experiments assume zero net injection there.
pub fn check_zero_injection(case: &NetworkCase, hidden: &[usize]) -> Result<()> {
    for &h in hidden {
        let bus = case.buses.get(h).ok_or_else(|| Error::Invalid(format!("hidden index {h} out of range")))?;
        let has_gen = case.generators.iter().any(|g| g.bus == bus.id);
        if bus.p_load != 0.0 || bus.q_load != 0.0 || has_gen {
            return Err(Error::Invalid(format!(
                "bus {} cannot be hidden: it has nonzero injection (move its load or generator first)",
                bus.id
            )));
        }
    }
    Ok(())
}
