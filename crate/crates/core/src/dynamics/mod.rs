//! Lindblad evolution, relaxation rates and linear input-output steady states.
//! Hamiltonians are H/h in GHz, times in ns and rates in 1/ns unless noted.

mod drive;
mod io;
mod lindblad;
mod rates;

pub use drive::{drive_leakage, driven_duffing, transmon_drive_amplitude, DriveParams};
pub use io::{
    added_noise, dispersive_photons, dispersive_reflection, dpa_steady_state, jrm_steady_state, AmpReport,
    LinearIoModel,
};
pub use lindblad::{check_state, evolve, fit_decay, Collapse, DecayFit, Drive, LindbladModel, Trajectory};
pub use rates::{
    capacitively_loaded_lc_rate, gibbs_state, series_rc_admittance, t1_from_admittance, thermal_population,
    thermal_rates, ThermalModel,
};
