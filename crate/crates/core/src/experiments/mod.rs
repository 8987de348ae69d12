//! End-to-end studies built on the numerical layers.

pub mod coupling;
pub mod critical;
pub mod exits;
pub mod regularity;
pub mod torus;
pub mod vacancy;

pub use coupling::{coupling_study, first_excursion_check, CouplingStudy, CouplingStudyConfig};
pub use critical::{critical_pipeline, CriticalReport, CriticalRunConfig};
pub use exits::{annulus_check, AnnulusReport};
pub use regularity::{holder_scan, reversibility_check, HolderScanResult, ReversibilityReport, XChoice};
pub use torus::{torus_excursion_test, TorusExcursionReport};
pub use vacancy::{vacancy_study, VacancyStudy};
