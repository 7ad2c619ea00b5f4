pub mod cross_section;
pub mod error;
pub mod event_study;
pub mod garch;
pub mod market_data;
pub mod simulator;
pub mod stats;

pub use cross_section::{RegressionResult, StdErrors};
pub use error::{CaseFailure, Error, ErrorClass, Result};
pub use event_study::{run_group_study, CaseData, CavResult, GroupStudy, StudyConfig};
pub use garch::{FitConfig, GarchFit, GarchParams};
pub use market_data::{AlignedPanel, EventCase, OutcomeGroup, WindowSpec};
pub use simulator::{simulate_panel, SimSpec, SimulatedStudy};
