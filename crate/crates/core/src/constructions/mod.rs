//! Example systems, systems of c.p.c. approximations, the direct-sum lift
//! of an NF system and the subsystem schedulers.

mod builders;
mod cpap;
mod lift;
mod schedule;

pub use builders::{
    exact_cpap, grid_function, interval_cpap, interval_sampling_system, scaled_embedding_system, uhf_system,
    uhf_system_capped, weighted_embedding_system, IntervalGrids, DEFAULT_MAX_SIDE,
};
pub use cpap::{
    downwards_embedding_probe, h_bar_consistency_probe, CpapSystem, DownwardsReport, DownwardsRow, HBarRow,
    UnitPolicy,
};
pub use lift::{direct_sum_nf_lift, direct_sum_nf_lift_capped, lift_element, project_summand, DEFAULT_MAX_LIFT_DIM};
pub use schedule::{
    extract_cpcstar_subsystem, make_summable, summability_estimate, verify_schedule, Certificate, ExtractOptions,
    Inequality, ScheduleKind, SubsystemSchedule, SummableOptions, Verification,
};
