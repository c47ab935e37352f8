//! Independent reference solutions: radial Womersley profiles, time stepping
//! to the periodic orbit, swirl decay, and field comparison.

mod compare;
mod radial;
mod stepper;
mod swirl;

pub use compare::{compare, compare_series, DiffReport};
pub use radial::{poiseuille_profile, require_straight, womersley_radial, RadialOracleResult, MIN_RADIAL_NODES};
pub use stepper::{contraction_factor, period_map, timestep_periodic, Drive, PeriodicOrbit};
pub use swirl::{max_swirl, swirl_decay_check, SwirlReport};

#[cfg(test)]
mod tests;
