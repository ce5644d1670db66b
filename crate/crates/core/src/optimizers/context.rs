use crate::error::{Error, Result};
use crate::gradient::GradientTable;
use crate::mdp::PolicyParams;
use crate::table::Table;

pub type GradientOracle<'a> = dyn Fn(&PolicyParams) -> Result<GradientTable> + 'a;
pub type ObjectiveOracle<'a> = dyn Fn(&PolicyParams) -> Result<f64> + 'a;

/// What a stepper may ask of the problem at iteration `t` (starting at 1).
pub struct StepContext<'a> {
    pub gradient_at: &'a GradientOracle<'a>,
    pub objective_at: &'a ObjectiveOracle<'a>,
    pub iteration: usize,
}

impl<'a> StepContext<'a> {
    pub fn new(
        gradient_at: &'a GradientOracle<'a>,
        objective_at: &'a ObjectiveOracle<'a>,
        iteration: usize,
    ) -> Self {
        StepContext {
            gradient_at,
            objective_at,
            iteration,
        }
    }

    pub(crate) fn gradient(&self, params: &PolicyParams) -> Result<Table> {
        let g = (self.gradient_at)(params)?;
        if g.partials().shape() != params.shape() {
            return Err(Error::shape(
                "gradient",
                format!("{:?}", params.shape()),
                format!("{:?}", g.partials().shape()),
            ));
        }
        if !g.is_finite() {
            return Err(self.failure("non-finite gradient"));
        }
        Ok(g.0)
    }

    pub(crate) fn objective(&self, params: &PolicyParams) -> Result<f64> {
        let v = (self.objective_at)(params)?;
        if !v.is_finite() {
            return Err(self.failure("non-finite objective"));
        }
        Ok(v)
    }

    pub(crate) fn failure(&self, detail: impl Into<String>) -> Error {
        Error::NumericalFailure {
            iteration: self.iteration,
            detail: detail.into(),
        }
    }

    pub(crate) fn finite(&self, table: Table, what: &str) -> Result<PolicyParams> {
        if table.is_finite() {
            Ok(PolicyParams(table))
        } else {
            Err(self.failure(format!("non-finite {what}")))
        }
    }
}
