//! File formats, the parallel corpus runner and the command implementations
//! behind the `lifting` binary.

pub mod commands;
pub mod formats;
pub mod report;
pub mod spec;
pub mod trace;

use lifting_core::dtree::DEFAULT_DDT_BUDGET;
use lifting_core::gadget::DEFAULT_SIDE_BUDGET;
use lifting_core::simulate::SimBudget;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("budget {0} must be positive")]
pub struct BudgetError(&'static str);

/// Size limits shared by every command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Largest rectangle side enumerated by the discrepancy search.
    pub side: u64,
    /// Largest `n` handed to the decision-tree oracle.
    pub dt_n: u32,
    pub sim: SimBudget,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { side: DEFAULT_SIDE_BUDGET, dt_n: DEFAULT_DDT_BUDGET, sim: SimBudget::default() }
    }
}

impl Budgets {
    pub fn validate(&self) -> Result<(), BudgetError> {
        let checks = [
            (self.side > 0, "side"),
            (self.dt_n > 0, "dt-n"),
            (self.sim.max_n > 0, "sim-n"),
            (self.sim.max_b > 0, "sim-b"),
            (self.sim.branches > 0, "branches"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, name)) => Err(BudgetError(name)),
            None => Ok(()),
        }
    }
}
