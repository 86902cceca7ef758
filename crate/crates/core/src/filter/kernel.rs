//! Observation distance and the kernel likelihood that softens deterministic
//! observation programs.

use crate::dsl::ObsCodes;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelParams {
    /// Bandwidth of the likelihood kernel.
    pub kappa: f64,
    pub lambda_dir: f64,
    pub lambda_carry: f64,
    pub alpha_grid: f64,
    pub epsilon: f64,
}

impl Default for KernelParams {
    fn default() -> KernelParams {
        KernelParams { kappa: 0.2, lambda_dir: 1.0, lambda_carry: 1.0, alpha_grid: 3.0, epsilon: 1e-6 }
    }
}

/// Window indices compared by the grid term: all nine cells minus the
/// agent-occupied one (bottom center, index 7).
const VISIBLE: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 8];

/// Distance between a predicted and a realized observation:
/// `d_grid + lambda_dir*[dir differs] + lambda_carry*[carry differs]`, where
/// `d_grid = -ln(eps + (1-eps) * match_fraction^alpha)` over visible
/// non-agent cells, and infinity when no visible cell matches.
pub fn obs_distance(pred: &ObsCodes, real: &ObsCodes, k: &KernelParams) -> f64 {
    let matches = VISIBLE.iter().filter(|&&i| pred.g[i] == real.g[i]).count();
    if matches == 0 {
        return f64::INFINITY;
    }
    // At a full match eps + (1-eps) is exactly 1 algebraically; evaluate the
    // simplified form so identical windows score exactly zero.
    let d_grid = if matches == VISIBLE.len() {
        0.0
    } else {
        let fraction = matches as f64 / VISIBLE.len() as f64;
        -(k.epsilon + (1.0 - k.epsilon) * fraction.powf(k.alpha_grid)).ln()
    };
    let d_dir = if pred.dir != real.dir { k.lambda_dir } else { 0.0 };
    let d_carry = if pred.carry != real.carry { k.lambda_carry } else { 0.0 };
    d_grid + d_dir + d_carry
}

/// Unnormalized kernel likelihood `exp(-d/kappa)`; zero at infinite distance.
pub fn kernel_weight(d: f64, kappa: f64) -> f64 {
    debug_assert!(kappa > 0.0);
    if d.is_infinite() {
        0.0
    } else {
        (-d / kappa).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(g: [u8; 9], dir: u8, carry: u8) -> ObsCodes {
        ObsCodes { g, dir, carry }
    }

    #[test]
    fn identical_observations_have_zero_distance() {
        let k = KernelParams::default();
        let o = obs([1, 1, 2, 1, 4, 1, 2, 1, 1], 2, 0);
        assert_eq!(obs_distance(&o, &o, &k), 0.0);
        assert_eq!(kernel_weight(0.0, k.kappa), 1.0);
    }

    #[test]
    fn direction_indicator_alone() {
        let k = KernelParams::default();
        let a = obs([1; 9], 0, 0);
        let b = obs([1; 9], 1, 0);
        assert_eq!(obs_distance(&a, &b, &k), 1.0);
    }

    #[test]
    fn half_match_golden_value() {
        let k = KernelParams::default();
        // Four of the eight visible cells agree; dir and carry match.
        let a = obs([1, 1, 1, 1, 2, 2, 2, 9, 2], 0, 0);
        let b = obs([1, 1, 1, 1, 3, 3, 3, 9, 3], 0, 0);
        let d = obs_distance(&a, &b, &k);
        let expect = -(1e-6 + (1.0 - 1e-6) * 0.125f64).ln();
        assert!((d - expect).abs() < 1e-12);
        assert!((d - 2.0794).abs() < 1e-3, "{d}");
    }

    #[test]
    fn no_matching_cell_is_infinite() {
        let k = KernelParams::default();
        let a = obs([1; 9], 0, 0);
        let b = obs([2; 9], 0, 0);
        assert_eq!(obs_distance(&a, &b, &k), f64::INFINITY);
        assert_eq!(kernel_weight(f64::INFINITY, k.kappa), 0.0);
    }

    #[test]
    fn kernel_weight_reference_point() {
        assert!((kernel_weight(0.2, 0.2) - (-1.0f64).exp()).abs() < 1e-15);
    }

    proptest! {
        // Zero distance iff the compared channels are identical.
        #[test]
        fn zero_iff_identical(ga in proptest::array::uniform9(0u8..29), gb in proptest::array::uniform9(0u8..29),
                              da in 0u8..4, db in 0u8..4, ca in 0u8..2, cb in 0u8..2) {
            let k = KernelParams::default();
            let a = obs(ga, da, if ca == 0 { 0 } else { 9 });
            let b = obs(gb, db, if cb == 0 { 0 } else { 9 });
            let d = obs_distance(&a, &b, &k);
            let identical = VISIBLE.iter().all(|&i| ga[i] == gb[i]) && a.dir == b.dir && a.carry == b.carry;
            prop_assert_eq!(d == 0.0, identical);
            prop_assert!(d >= 0.0);
        }

        // Strictly decreasing kernel and exact Boltzmann log-ratios (within
        // the range where exp(-d/kappa) does not underflow).
        #[test]
        fn kernel_monotone_and_boltzmann(d1 in 0.0f64..30.0, d2 in 0.0f64..30.0, kappa in 0.05f64..2.0) {
            let (w1, w2) = (kernel_weight(d1, kappa), kernel_weight(d2, kappa));
            if d1 < d2 {
                prop_assert!(w1 > w2);
            }
            let ratio = (w1 / w2).ln();
            prop_assert!((ratio - (-(d1 - d2) / kappa)).abs() < 1e-9);
        }
    }
}
