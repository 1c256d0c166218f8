//! Finite-word symbolic dynamics: frequency oracles, generic words, covers,
//! cover pruning, and the constructions of points whose pair orbital
//! measures diverge.
//!
//! Positions in constructed points can be astronomically large, so points
//! are stored as runs over periodic or explicit sources and all lengths are
//! `u128`.

pub mod big;
pub mod construct;
pub mod cover;
pub mod generic;
pub mod oracle;
pub mod point;
pub mod word;

pub use cover::{
    is_cover, periodic_tall_cover, periodic_window_length, prune_cover, union_mass, CoverCheck, CoverSpec,
    CoverViolation, CoverWord, PruneReport,
};
pub use construct::{
    build_from_stream, build_hochman_point, build_simple_point, check_schedule, pair_orbital_measures,
    periodic_schedule, Block, BlockLayout, ConstructedPoint, Growth, HochmanSchedule, PairOrbitalReport, PointMode,
    Scale, ScaleMeasures, ScheduleViolation,
};
pub use generic::{
    is_eps_generic, is_strongly_generic, lemma10_check, periodic_prefix_generic,
    periodic_prefix_strongly_generic, GenericReport, Lemma10Outcome, Offender, StrongReport,
};
pub use oracle::{chacon_block, EmpiricalOracle, FreqOracle, OracleSpec, PeriodicOracle};
pub use point::{orbital_measure, EmpiricalMeasure, Point, Run, Source, INFINITE};
pub use word::{Alphabet, Word};
