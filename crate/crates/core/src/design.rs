//! Shot allocation, optimal gains and the minimum random-error bound for
//! two-point exponential extrapolation.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{PeaError, Result};
use crate::noise::NoiseLayerModel;
use crate::pauli::{propagate_observable, PauliString};

const INV_E: f64 = 1.0 / E;

/// Principal branch `W_0` of the Lambert W function, `w e^w = x`, `w >= -1`.
///
/// Halley iteration from a branch-point series guess near `-1/e`, a `ln(1+x)`
/// guess for moderate `x` and the asymptotic `ln x - ln ln x` for large `x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E {
        return Err(PeaError::Domain(format!("lambert_w0 requires x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let branch = E * x + 1.0;
    if branch <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if branch < 0.3 {
        let p = (2.0 * branch).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        0.5 * x.ln_1p() + 0.2 * x / (1.0 + x).sqrt()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-14 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Hardware and target fidelity products along a propagated observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityProduct {
    pub k: f64,
    pub k_tilde: f64,
}

impl FidelityProduct {
    pub fn new(k: f64, k_tilde: f64) -> Result<Self> {
        let valid = |v: f64| v > 0.0 && v <= 1.0;
        if !valid(k) || !valid(k_tilde) {
            return Err(PeaError::Design(format!("fidelity products must lie in (0, 1], got K={k}, K~={k_tilde}")));
        }
        Ok(Self { k, k_tilde })
    }

    pub fn kappa(&self) -> f64 {
        self.k_tilde / self.k
    }

    fn ln_kappa(&self) -> f64 {
        self.k_tilde.ln() - self.k.ln()
    }

    /// `K = Π_l f_l` with hardware rates and `K~ = Π_l f~_l` with target rates,
    /// both over the channels listed in the hardware model that anticommute
    /// with the observable seen by each noisy layer of a Clifford circuit.
    pub fn along_circuit(
        circuit: &CircuitSpec,
        hardware: &NoiseLayerModel,
        target: &NoiseLayerModel,
        observable: &PauliString,
    ) -> Result<Self> {
        let seen = propagate_observable(&circuit.clifford_layers()?, observable)?;
        let (mut log_k, mut log_kt) = (0.0, 0.0);
        for (layer, p) in circuit.layers().iter().zip(&seen) {
            if !layer.is_noisy() {
                continue;
            }
            for (channel, rate) in hardware.channels() {
                if channel.anticommutes(p)? {
                    log_k -= 2.0 * rate;
                    log_kt -= 2.0 * target.rate(channel);
                }
            }
        }
        Self::new(log_k.exp(), log_kt.exp())
    }
}

/// `G1 = 1`, `G2 = 1 + (W(1/e) + 1) / ln κ`.
pub fn optimal_gains(fp: &FidelityProduct) -> Result<(f64, f64)> {
    let ln_kappa = fp.ln_kappa();
    if !(ln_kappa > 0.0) {
        return Err(PeaError::Design(format!(
            "optimal gains need κ = K~/K > 1, got {}; supply gains explicitly",
            fp.kappa()
        )));
    }
    Ok((1.0, 1.0 + (lambert_w0(INV_E)? + 1.0) / ln_kappa))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub gains: Vec<f64>,
    pub shots: Vec<u64>,
    /// Unrounded `M |A_j| / Σ |A_l|`.
    pub ideal_shots: Vec<f64>,
    pub total: u64,
}

/// `A_j = Σ_i G_i (G_i - G_j) κ^{G_j} / K~`.
fn allocation_weights(gains: &[f64], fp: &FidelityProduct) -> Vec<f64> {
    let ln_kappa = fp.ln_kappa();
    gains
        .iter()
        .map(|&gj| {
            let c: f64 = gains.iter().map(|&gi| gi * (gi - gj)).sum();
            c * (gj * ln_kappa).exp() / fp.k_tilde
        })
        .collect()
}

/// Largest-remainder rounding of `ideal` to integers summing to `total`, each at least 1.
fn round_shots(ideal: &[f64], total: u64) -> Vec<u64> {
    let n = ideal.len() as u64;
    let spare = (total - n) as f64;
    let ideal_sum: f64 = ideal.iter().sum();
    // Reserve one shot per gain, share the rest proportionally.
    let shares: Vec<f64> = ideal.iter().map(|v| v / ideal_sum * spare).collect();
    let mut shots: Vec<u64> = shares.iter().map(|s| 1 + s.floor() as u64).collect();
    let mut left = total - shots.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..ideal.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (shares[a] - shares[a].floor(), shares[b] - shares[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &j in order.iter().cycle() {
        if left == 0 {
            break;
        }
        shots[j] += 1;
        left -= 1;
    }
    shots
}

/// Shot counts proportional to `|A_j|`, rounded to sum to `total`.
pub fn optimal_shots(gains: &[f64], fp: &FidelityProduct, total: u64) -> Result<ShotPlan> {
    if gains.len() < 2 {
        return Err(PeaError::Design("need at least two gains".into()));
    }
    let mut sorted = gains.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(PeaError::Design("gains must be distinct".into()));
    }
    if total < gains.len() as u64 {
        return Err(PeaError::Design(format!("budget {total} smaller than the number of gains {}", gains.len())));
    }
    let weights: Vec<f64> = allocation_weights(gains, fp).into_iter().map(f64::abs).collect();
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(PeaError::Design("degenerate gain set: all allocation weights vanish".into()));
    }
    let ideal_shots: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let shots = round_shots(&ideal_shots, total);
    Ok(ShotPlan { gains: gains.to_vec(), shots, ideal_shots, total })
}

/// Even split of `total` over `n` gains, remainder to the first gains.
pub fn even_shots(gains: &[f64], total: u64) -> Result<ShotPlan> {
    let n = gains.len() as u64;
    if n == 0 || total < n {
        return Err(PeaError::Design(format!("cannot split {total} shots over {n} gains")));
    }
    let shots: Vec<u64> = (0..n).map(|j| total / n + u64::from(j < total % n)).collect();
    Ok(ShotPlan {
        gains: gains.to_vec(),
        ideal_shots: vec![total as f64 / n as f64; n as usize],
        shots,
        total,
    })
}

/// `ΔF(0, S*, G*) = κ / √M · (1 + ln κ / W(1/e))`.
pub fn min_error_bound(fp: &FidelityProduct, total: u64) -> Result<f64> {
    let ln_kappa = fp.ln_kappa();
    if !(ln_kappa > 0.0) {
        return Err(PeaError::Design(format!("error bound needs κ > 1, got {}", fp.kappa())));
    }
    if total == 0 {
        return Err(PeaError::Design("shot budget must be positive".into()));
    }
    Ok(fp.kappa() / (total as f64).sqrt() * (1.0 + ln_kappa / lambert_w0(INV_E)?))
}

/// Same bound for extrapolation to zero noise (`K~ = 1`).
pub fn regular_pea_bound(k: f64, total: u64) -> Result<f64> {
    min_error_bound(&FidelityProduct::new(k, 1.0)?, total)
}

/// `ΔF(0) = sqrt(Σ_j [Σ_i G_i (G_i - G_j)]² κ^{2 G_j} / S_j) / (R ΣG² - (ΣG)²)`.
pub fn error_of_design(gains: &[f64], shots: &[f64], fp: &FidelityProduct) -> Result<f64> {
    if gains.len() != shots.len() || gains.len() < 2 {
        return Err(PeaError::Design("gains and shots need equal length >= 2".into()));
    }
    if shots.iter().any(|s| !(*s > 0.0)) {
        return Err(PeaError::Design("shot counts must be positive".into()));
    }
    let r = gains.len() as f64;
    let sum: f64 = gains.iter().sum();
    let sum_sq: f64 = gains.iter().map(|g| g * g).sum();
    let denom = r * sum_sq - sum * sum;
    if !(denom > 0.0) {
        return Err(PeaError::Design("all gains equal: regression is degenerate".into()));
    }
    let ln_kappa = fp.ln_kappa();
    let num: f64 = gains
        .iter()
        .zip(shots)
        .map(|(&gj, &sj)| {
            let c: f64 = gains.iter().map(|&gi| gi * (gi - gj)).sum();
            c * c * (2.0 * gj * ln_kappa).exp() / sj
        })
        .sum();
    Ok(num.sqrt() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Bisection on w e^w = x over [-1, hi]; independent of the Halley path.
    fn bisect_w(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, x.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(lambert_w0(E).unwrap(), 1.0, epsilon = 1e-15);
        let w = lambert_w0(INV_E).unwrap();
        assert_abs_diff_eq!(w, bisect_w(INV_E), epsilon = 1e-14);
        assert_abs_diff_eq!(w, 0.2784645427610738, epsilon = 1e-13);
        assert_abs_diff_eq!(lambert_w0(-INV_E).unwrap(), -1.0, epsilon = 1e-7);
        assert!(matches!(lambert_w0(-0.4), Err(PeaError::Domain(_))));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_defining_equation_on_grid() {
        let mut xs = vec![-INV_E + 1e-6, -0.3, -0.1, -1e-3];
        xs.extend((0..=180).map(|k| 10f64.powf(-12.0 + k as f64 * 0.1)));
        for x in xs {
            let w = lambert_w0(x).unwrap();
            assert!(w >= -1.0);
            let resid = (w * w.exp() - x).abs();
            assert!(resid <= 1e-12 * x.abs().max(1.0), "x={x} w={w} resid={resid}");
            assert_abs_diff_eq!(w, bisect_w(x), epsilon = 1e-9 * w.abs().max(1.0));
        }
    }

    #[test]
    fn optimal_gain_examples() {
        let (g1, g2) = optimal_gains(&FidelityProduct::new((-1.5f64).exp(), (-0.5f64).exp()).unwrap()).unwrap();
        assert_eq!(g1, 1.0);
        assert_abs_diff_eq!(g2, 2.278464542761074, epsilon = 1e-12);
        let fp = FidelityProduct::new((-0.2f64).exp(), (-0.1f64).exp()).unwrap();
        assert_abs_diff_eq!(optimal_gains(&fp).unwrap().1, 13.784645427610738, epsilon = 1e-9);
        assert!(optimal_gains(&FidelityProduct::new(0.5, 0.5).unwrap()).is_err());
        assert!(optimal_gains(&FidelityProduct::new(0.6, 0.5).unwrap()).is_err());
        assert!(FidelityProduct::new(0.0, 0.5).is_err());
    }

    #[test]
    fn shot_allocation_examples() {
        let kappa = 0.1f64.exp();
        let fp = FidelityProduct::new((-0.2f64).exp(), (-0.1f64).exp()).unwrap();
        let plan = optimal_shots(&[1.0, 2.0], &fp, 1000).unwrap();
        assert_relative_eq!(plan.ideal_shots[0] / 1000.0, 2.0 / (2.0 + kappa), max_relative = 1e-12);
        assert_abs_diff_eq!(plan.ideal_shots[0] / 1000.0, 0.644, epsilon = 5e-4);

        let fp = FidelityProduct::new((-1.5f64).exp(), (-0.5f64).exp()).unwrap();
        let (_, g2) = optimal_gains(&fp).unwrap();
        let plan = optimal_shots(&[1.0, g2], &fp, 10_000).unwrap();
        assert_eq!(plan.shots, vec![3882, 6118]);
        assert_eq!(plan.shots.iter().sum::<u64>(), 10_000);

        let plan = optimal_shots(&[1.0, g2], &fp, 2).unwrap();
        assert_eq!(plan.shots, vec![1, 1]);
        assert!(optimal_shots(&[1.0, 1.0], &fp, 10).is_err());
        assert!(optimal_shots(&[1.0], &fp, 10).is_err());
        assert!(optimal_shots(&[1.0, 2.0], &fp, 1).is_err());
    }

    #[test]
    fn rounding_sums_to_total() {
        let fp = FidelityProduct::new(0.3, 0.7).unwrap();
        for total in [3u64, 4, 7, 10, 101, 999, 12345] {
            let plan = optimal_shots(&[1.0, 1.2, 1.4], &fp, total).unwrap();
            assert_eq!(plan.shots.iter().sum::<u64>(), total);
            assert!(plan.shots.iter().all(|&s| s >= 1));
        }
        assert_eq!(even_shots(&[1.0, 1.2, 1.4, 1.6], 10_000).unwrap().shots, vec![2500; 4]);
        assert_eq!(even_shots(&[1.0, 1.2, 1.4], 10).unwrap().shots, vec![4, 3, 3]);
    }

    #[test]
    fn bound_examples() {
        let fp = FidelityProduct::new((-1.5f64).exp(), (-0.5f64).exp()).unwrap();
        let b = min_error_bound(&fp, 10_000).unwrap();
        assert_abs_diff_eq!(b, E / 100.0 * (1.0 + 1.0 / 0.2784645427610738), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.1248, epsilon = 1e-4);
        assert_relative_eq!(min_error_bound(&fp, 40_000).unwrap(), b / 2.0, max_relative = 1e-14);
        let near_one = FidelityProduct::new(0.5, 0.5 * (1.0 + 1e-9)).unwrap();
        assert_relative_eq!(min_error_bound(&near_one, 400).unwrap(), 1.0 / 20.0, max_relative = 1e-7);
        assert!(min_error_bound(&FidelityProduct::new(0.5, 0.5).unwrap(), 100).is_err());
    }

    #[test]
    fn design_error_consistency() {
        let fp = FidelityProduct::new((-1.5f64).exp(), (-0.5f64).exp()).unwrap();
        let (g1, g2) = optimal_gains(&fp).unwrap();
        let plan = optimal_shots(&[g1, g2], &fp, 10_000).unwrap();
        let err = error_of_design(&[g1, g2], &plan.ideal_shots, &fp).unwrap();
        assert_relative_eq!(err, min_error_bound(&fp, 10_000).unwrap(), max_relative = 1e-10);

        let doubled: Vec<f64> = plan.ideal_shots.iter().map(|s| 2.0 * s).collect();
        assert_relative_eq!(
            error_of_design(&[g1, g2], &doubled, &fp).unwrap(),
            err / 2f64.sqrt(),
            max_relative = 1e-12
        );
        for k in 1..100 {
            let s1 = 10_000.0 * k as f64 / 100.0;
            let e = error_of_design(&[g1, g2], &[s1, 10_000.0 - s1], &fp).unwrap();
            assert!(e >= err * (1.0 - 1e-12));
        }
        assert!(error_of_design(&[1.0, 1.0], &[5.0, 5.0], &fp).is_err());
    }

    #[test]
    fn optimal_gain_minimizes_over_grid() {
        for kappa_log in [0.3f64, 1.0, 2.5] {
            let fp = FidelityProduct::new((-kappa_log - 0.2).exp(), (-0.2f64).exp()).unwrap();
            let bound = min_error_bound(&fp, 1000).unwrap();
            let mut best = f64::INFINITY;
            for k in 1..=4000 {
                let g2 = 1.0 + 0.005 * k as f64;
                let plan = optimal_shots(&[1.0, g2], &fp, 1000).unwrap();
                best = best.min(error_of_design(&[1.0, g2], &plan.ideal_shots, &fp).unwrap());
            }
            assert!(best >= bound - 1e-12, "κ=e^{kappa_log}: grid {best} < bound {bound}");
            assert!(best <= bound * (1.0 + 1e-3));
        }
    }
}
