//! Experimental protocols at desk scale: Dice scoring per method, the
//! coefficient-comparison study, and the repeated-random-split
//! classification study, plus report rendering.

mod report;
mod scenario;
mod split;
mod study;

pub use report::{fmt_sig, render_report, Cell, ReportFormat, ReportRow, StudyReport};
pub use scenario::{
    classification_scenario_cohort, heteroscedastic_group_cohort, ClfScenario, GroupScenario,
    ScenarioCohort,
};
pub use split::{split_for_repeat, Split, SplitSpec};
pub use study::{
    classification_study, dice_report, dice_study, group_study, ClassificationStudyOptions,
    DiceStudy, GroupStudy, GroupStudyOptions,
};
