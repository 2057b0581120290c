//! Exact computation for lattice walks killed on leaving the half space.

mod field;
mod green;
mod ladder;
mod routes;

pub use field::{Backend, EvolveOpts, Evolver, KillRule, KilledField, LatticeBox};
pub use green::{green_exact, green_exact_in_box, GreenReport, GreenValue, TailMode};
pub use ladder::{
    ladder_data, renewal_by_duality, renewal_by_powers, renewal_h, renewal_v, LadderConfig, LadderData, LadderPmf,
    DualRenewal,
};
pub use routes::{
    b_fields_via_recursion, bs_coefficients, killed_fields, p_n_exact, p_n_via_min_decomposition,
    p_n_via_recursion, survival_exact, RecursionForm,
};
