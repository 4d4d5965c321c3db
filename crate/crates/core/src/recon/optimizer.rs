//! Descent steps on the spectral coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An accepted step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub x: DMatrix<f64>,
    pub value: f64,
    /// Objective evaluations spent on the step.
    pub evaluations: usize,
}

/// Objective callback. Trial points that produce degenerate geometry are
/// treated as infinitely bad by the line search.
pub type ObjectiveFn<'a> = dyn FnMut(&DMatrix<f64>) -> Result<f64> + 'a;

/// Pluggable update rule.
pub trait Optimizer {
    /// Step from `x` (value `fx`, gradient `g`). `None` means no decrease was found.
    fn step(&mut self, f: &mut ObjectiveFn<'_>, x: &DMatrix<f64>, fx: f64, g: &DMatrix<f64>) -> Result<Option<StepResult>>;

    /// Forget state carried between steps (called at band boundaries).
    fn reset(&mut self) {}
}

/// Steepest descent with Armijo backtracking.
///
/// The first trial moves the largest coefficient by `initial_step`; after an
/// accepted step the next trial starts from twice the accepted length.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    pub initial_step: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    length: Option<f64>,
}

impl GradientDescent {
    pub fn new(initial_step: f64) -> Self {
        Self { initial_step, armijo: 1e-4, shrink: 0.5, max_backtracks: 20, length: None }
    }
}

impl Optimizer for GradientDescent {
    fn step(&mut self, f: &mut ObjectiveFn<'_>, x: &DMatrix<f64>, fx: f64, g: &DMatrix<f64>) -> Result<Option<StepResult>> {
        let gmax = g.amax();
        let gg = g.norm_squared();
        if gmax == 0.0 || !gg.is_finite() {
            return Ok(None);
        }
        let mut t = self.length.unwrap_or(self.initial_step / gmax);
        for k in 0..=self.max_backtracks {
            let trial = x - g * t;
            let value = match f(&trial) {
                Ok(v) => v,
                Err(Error::DegenerateGeometry(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if value <= fx - self.armijo * t * gg {
                self.length = Some(2.0 * t);
                return Ok(Some(StepResult { x: trial, value, evaluations: k + 1 }));
            }
            t *= self.shrink;
        }
        self.length = None;
        Ok(None)
    }

    fn reset(&mut self) {
        self.length = None;
    }
}
