//! Left- and right-hand sides of the flux inequalities, with verdicts.

mod checks;
mod measure_lemma;
mod offset;
mod report;

pub use checks::{
    check_cor3, check_cor3_surface, check_div_theorem, check_general, check_lemma_vdotn, check_thm1, check_thm2,
    check_thm4, convexity_violation, divergence_residual, estimate_diameter, region, unit_ball_volume,
    DivergenceResidual, FluxSetup, QuadOptions,
};
pub use measure_lemma::{check_measure_lemma, instance_rng, random_instance, DiscreteInstance, MeasureLemmaOutcome};
pub use offset::{loglog_slope, offset_convergence_study, OffsetRow, OffsetStudy};
pub use report::{default_tolerance, verdict, BoundReport, Flag, InequalityId, Ingredient, Provenance, Verdict};
