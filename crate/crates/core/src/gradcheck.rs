//! Finite-difference audit of the policy meta-gradient.

use crate::interactivity::{interactivity_estimate, policy_objective, rollout, InteractivityError, RolloutConfig};
use crate::models::{Activation, Behaviour, PolicyParams, PolicySpec};
use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Cases whose rollout brings a ReLU pre-activation closer than this to
/// zero are redrawn: central differences straddle the kink there.
pub const KINK_MARGIN: f64 = 1e-3;

/// Size limits for randomly drawn check cases.
#[derive(Clone, Copy, Debug)]
pub struct CaseLimits {
    pub max_dim: usize,
    pub max_width: usize,
    pub max_depth: usize,
    pub max_horizon: usize,
}

impl Default for CaseLimits {
    fn default() -> Self {
        Self { max_dim: 8, max_width: 16, max_depth: 3, max_horizon: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct GradCase {
    pub policy: PolicyParams,
    pub start: Behaviour,
    pub w_ref: Tensor,
    pub rollout: RolloutConfig,
}

impl GradCase {
    pub fn random<R: Rng>(rng: &mut R, limits: CaseLimits) -> Self {
        let dim = rng.gen_range(1..=limits.max_dim);
        let spec = PolicySpec {
            dim,
            width: rng.gen_range(1..=limits.max_width),
            depth: rng.gen_range(1..=limits.max_depth),
            activation: if rng.gen_bool(0.5) { Activation::Linear } else { Activation::Relu },
            bias: rng.gen_bool(0.5),
        };
        let policy = PolicyParams::init(spec, rng).expect("limits give a valid spec");
        let mut normal = |n: usize, scale: f64| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                })
                .collect::<Vec<f64>>()
        };
        let start = Behaviour::new(normal(dim, 1.0));
        let w_ref = Tensor::from_vec(dim, dim, normal(dim * dim, 1.0 / dim as f64));
        let rollout = RolloutConfig::new(rng.gen_range(1..=limits.max_horizon), rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.1));
        Self { policy, start, w_ref, rollout }
    }

    /// Smallest ReLU margin over every policy input of the rollout.
    pub fn kink_margin(&self) -> Result<f64, InteractivityError> {
        let trace = rollout(&self.policy, &self.start, &self.w_ref, &self.rollout)?;
        let mut margin = f64::INFINITY;
        for b in &trace.behaviours[..trace.behaviours.len() - 1] {
            margin = margin.min(self.policy.kink_margin(b)?);
        }
        Ok(margin)
    }

    /// `J` through the graph-free rollout.
    pub fn objective(&self, policy: &PolicyParams) -> Result<f64, InteractivityError> {
        Ok(interactivity_estimate(&rollout(policy, &self.start, &self.w_ref, &self.rollout)?).interactivity)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradReport {
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    /// `‖g − ĝ‖ / max(‖g‖, ‖ĝ‖, floor)`.
    pub relative_error: f64,
}

/// Compares the reverse-mode gradient with central differences of step `h`.
pub fn check_case(case: &GradCase, h: f64) -> Result<GradReport, InteractivityError> {
    let analytic: Vec<f64> = policy_objective(&case.policy, &case.start, &case.w_ref, &case.rollout)?
        .gradient()?
        .iter()
        .flat_map(|g| g.as_slice().to_vec())
        .collect();
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..case.policy.tensors().len() {
        for i in 0..case.policy.tensors()[k].len() {
            let mut plus = case.policy.clone();
            plus.tensors_mut()[k].as_mut_slice()[i] += h;
            let mut minus = case.policy.clone();
            minus.tensors_mut()[k].as_mut_slice()[i] -= h;
            numeric.push((case.objective(&plus)? - case.objective(&minus)?) / (2.0 * h));
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let (an, nn) = (norm(&analytic), norm(&numeric));
    Ok(GradReport { analytic_norm: an, numeric_norm: nn, relative_error: norm(&diff) / an.max(nn).max(1e-6) })
}

#[derive(Debug)]
pub struct GradAudit {
    pub reports: Vec<Result<GradReport, InteractivityError>>,
    /// Draws discarded for lying within [`KINK_MARGIN`] of a ReLU kink.
    pub redrawn: usize,
}

/// Draws `cases` differentiable random cases from `seed` and checks each one.
pub fn check_random(cases: usize, seed: u64, limits: CaseLimits, h: f64) -> GradAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut redrawn = 0;
    let mut reports = Vec::with_capacity(cases);
    while reports.len() < cases {
        let case = GradCase::random(&mut rng, limits);
        match case.kink_margin() {
            Ok(m) if m < KINK_MARGIN => redrawn += 1,
            Ok(_) => reports.push(check_case(&case, h)),
            Err(e) => reports.push(Err(e)),
        }
    }
    GradAudit { reports, redrawn }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_cases_pass() {
        for report in check_random(10, 3, CaseLimits::default(), 1e-5).reports {
            let r = report.unwrap();
            assert!(r.relative_error < 1e-4, "{r:?}");
        }
    }
}
