use super::StepContext;
use crate::error::Result;
use crate::mdp::PolicyParams;

/// Outcome of the objective-gated acceptance in one SPG-NM step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Acceptance {
    /// `V^{π_θ}(μ)` at the freshly computed `θ(t)`.
    pub theta_objective: f64,
    /// `V^{π_φ}(μ)`; `None` when `φ` overflowed and was never evaluated.
    pub phi_objective: Option<f64>,
    /// Whether `ω(t) = φ(t)`.
    pub accepted: bool,
}

impl Acceptance {
    /// `V^{π_ω}(μ)` for the kept iterate.
    pub fn omega_objective(&self) -> f64 {
        match (self.accepted, self.phi_objective) {
            (true, Some(v)) => v,
            _ => self.theta_objective,
        }
    }
}

/// Policy gradient with negative momentum.
///
/// Each step:
///
/// ```text
/// θ(t) = ω(t-1) + η ∇V(ω(t-1))
/// φ(t) = λ θ(t) + (1-λ) (θ(t) - θ(t-1))
/// ω(t) = φ(t) if V(φ(t)) ≥ V(θ(t)) else θ(t)
/// ```
///
/// A `φ` with non-finite entries has no objective value, so it fails the
/// comparison and `ω(t) = θ(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpgNmState {
    pub theta: PolicyParams,
    pub theta_prev: PolicyParams,
    pub omega: PolicyParams,
    pub eta: f64,
    pub lambda: f64,
    pub last: Option<Acceptance>,
}

impl SpgNmState {
    pub fn new(theta: PolicyParams, eta: f64, lambda: f64) -> Self {
        SpgNmState {
            theta_prev: theta.clone(),
            omega: theta.clone(),
            theta,
            eta,
            lambda,
            last: None,
        }
    }

    /// `φ = λ θ_new + (1-λ)(θ_new - θ_old)`, entrywise.
    pub fn extrapolate(lambda: f64, theta_new: &PolicyParams, theta_old: &PolicyParams) -> PolicyParams {
        PolicyParams(
            theta_new
                .0
                .zip_map(&theta_old.0, |n, o| lambda * n + (1.0 - lambda) * (n - o)),
        )
    }

    pub fn step(&self, ctx: &StepContext<'_>) -> Result<Self> {
        let g = ctx.gradient(&self.omega)?;
        let theta_new = ctx.finite(self.omega.0.add_scaled(&g, self.eta), "iterate")?;
        let phi = Self::extrapolate(self.lambda, &theta_new, &self.theta);

        let theta_objective = ctx.objective(&theta_new)?;
        let phi_objective = if phi.is_finite() {
            Some(ctx.objective(&phi)?)
        } else {
            None
        };
        let accepted = phi_objective.is_some_and(|v| v >= theta_objective);
        let omega = if accepted { phi } else { theta_new.clone() };

        Ok(SpgNmState {
            theta_prev: self.theta.clone(),
            theta: theta_new,
            omega,
            eta: self.eta,
            lambda: self.lambda,
            last: Some(Acceptance {
                theta_objective,
                phi_objective,
                accepted,
            }),
        })
    }
}
