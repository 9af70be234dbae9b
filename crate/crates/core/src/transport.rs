//! One-dimensional optimal transport, radius proxies and worst-case mean shifts.

use alloc::vec::Vec;

use crate::error::{invalid, Cell, Result};
use crate::summary::{OutcomeKind, SampleSet, TrialLayout};

/// Largest and smallest mean shift reachable inside a 1-Wasserstein ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftBounds {
    /// Upward shift, `≥ 0`.
    pub delta_plus: f64,
    /// Downward shift, `≤ 0`.
    pub delta_minus: f64,
}

/// Where a set of radii came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusProvenance {
    /// Supplied by the analyst.
    Fixed,
    /// `c` times the empirical outcome W1 distance.
    DataDriven {
        /// Inflation multiplier, `≥ 1`.
        c: f64,
    },
}

/// Ball radius per historical (source, arm) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSpec {
    cells: Vec<Vec<Option<f64>>>,
    provenance: RadiusProvenance,
}

impl RadiusSpec {
    /// Radii laid out as `cells[source][arm]`.
    pub fn new(cells: Vec<Vec<Option<f64>>>, provenance: RadiusProvenance) -> Result<Self> {
        for (k, row) in cells.iter().enumerate() {
            for (a, r) in row.iter().enumerate() {
                if let Some(r) = r {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(invalid!("radius for {} must be finite and >= 0, got {r}", Cell::new(k, a)));
                    }
                }
            }
        }
        if let RadiusProvenance::DataDriven { c } = provenance {
            if !(c.is_finite() && c >= 1.0) {
                return Err(invalid!("inflation multiplier must be >= 1, got {c}"));
            }
        }
        Ok(RadiusSpec { cells, provenance })
    }

    /// Same radius `rhos[a]` on every present cell of arm `a`.
    pub fn per_arm(layout: &TrialLayout, rhos: &[f64]) -> Result<Self> {
        if rhos.len() != layout.arms() {
            return Err(invalid!("expected {} radii, got {}", layout.arms(), rhos.len()));
        }
        let cells = layout
            .historical
            .iter()
            .map(|s| s.arms.iter().zip(rhos).map(|(c, &r)| c.as_ref().map(|_| r)).collect())
            .collect();
        Self::new(cells, RadiusProvenance::Fixed)
    }

    /// Same radius on every present cell.
    pub fn uniform(layout: &TrialLayout, rho: f64) -> Result<Self> {
        Self::per_arm(layout, &alloc::vec![rho; layout.arms()])
    }

    /// Radius of cell `(source, arm)`, if one was given.
    pub fn get(&self, source: usize, arm: usize) -> Option<f64> {
        *self.cells.get(source)?.get(arm)?
    }

    /// Raw `cells[source][arm]` table.
    pub fn cells(&self) -> &[Vec<Option<f64>>] {
        &self.cells
    }

    /// Provenance tag.
    pub fn provenance(&self) -> RadiusProvenance {
        self.provenance
    }
}

fn sorted_copy(xs: &[f64], name: &str) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(invalid!("W1 needs a nonempty {name} sample"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(invalid!("{name} sample contains a non-finite value"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Exact 1-Wasserstein distance between two empirical measures on the line.
///
/// Computes `∫₀¹ |F_x⁻¹(u) − F_y⁻¹(u)| du` by sweeping the merged quantile
/// breakpoints `i/n` and `j/m`. Breakpoints are compared in integer
/// arithmetic so unequal sizes are handled without padding.
pub fn w1_empirical(x: &[f64], y: &[f64]) -> Result<f64> {
    let xs = sorted_copy(x, "first")?;
    let ys = sorted_copy(y, "second")?;
    let (n, m) = (xs.len() as u128, ys.len() as u128);
    // Positions are measured in units of 1/(n·m).
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos: u128 = 0;
    let mut acc = 0.0;
    while i < xs.len() && j < ys.len() {
        let next_x = (i as u128 + 1) * m;
        let next_y = (j as u128 + 1) * n;
        let next = next_x.min(next_y);
        acc += (next - pos) as f64 * (xs[i] - ys[j]).abs();
        pos = next;
        if next_x == next {
            i += 1;
        }
        if next_y == next {
            j += 1;
        }
    }
    Ok(acc / (n * m) as f64)
}

/// Data-driven radii `ρ̂_{k,a} = c · W1(current arm a, source k arm a)`.
///
/// Cells without historical samples get no entry.
pub fn estimate_radii(samples: &SampleSet, c: f64) -> Result<RadiusSpec> {
    let mut cells = Vec::with_capacity(samples.historical.len());
    for (k, arms) in samples.historical.iter().enumerate() {
        let mut row = Vec::with_capacity(arms.len());
        for (a, hist) in arms.iter().enumerate() {
            row.push(match hist {
                Some(h) if !h.is_empty() => {
                    let cur = samples
                        .current
                        .get(a)
                        .ok_or_else(|| invalid!("no current samples for arm {a} of {}", Cell::new(k, a)))?;
                    Some(c * w1_empirical(cur, h)?)
                }
                _ => None,
            });
        }
        cells.push(row);
    }
    RadiusSpec::new(cells, RadiusProvenance::DataDriven { c })
}

/// Worst-case mean shifts over the W1 ball of radius `rho` around the
/// current-arm law with mean `center`.
pub fn shift_bounds(kind: OutcomeKind, center: f64, rho: f64) -> Result<ShiftBounds> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(invalid!("radius must be finite and >= 0, got {rho}"));
    }
    match kind {
        OutcomeKind::Continuous => Ok(ShiftBounds { delta_plus: rho, delta_minus: -rho }),
        OutcomeKind::Binary => {
            if !(0.0..=1.0).contains(&center) {
                return Err(invalid!("binary center must lie in [0, 1], got {center}"));
            }
            Ok(ShiftBounds { delta_plus: rho.min(1.0 - center), delta_minus: -rho.min(center) })
        }
    }
}

/// Drift range `D = Δ⁺ − Δ⁻`.
pub fn drift_range(kind: OutcomeKind, center: f64, rho: f64) -> Result<f64> {
    let b = shift_bounds(kind, center, rho)?;
    Ok(b.delta_plus - b.delta_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn w1_examples() {
        let x = [0.3, -1.0, 2.5];
        assert_eq!(w1_empirical(&x, &x).unwrap(), 0.0);
        assert_eq!(w1_empirical(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(w1_empirical(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(w1_empirical(&[], &[1.0]).is_err());
        // {0,1} against {0}: half the mass travels distance 1.
        assert_eq!(w1_empirical(&[0.0, 1.0], &[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn radii_examples() {
        let s = SampleSet {
            current: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            historical: vec![vec![Some(vec![1.0, 1.0]), None]],
        };
        let r = estimate_radii(&s, 1.5).unwrap();
        assert_eq!(r.get(0, 0), Some(1.5));
        assert_eq!(r.get(0, 1), None);
        assert!(estimate_radii(&s, 0.5).is_err());
    }

    #[test]
    fn shift_examples() {
        let b = shift_bounds(OutcomeKind::Continuous, 123.0, 0.3).unwrap();
        assert_eq!((b.delta_plus, b.delta_minus), (0.3, -0.3));
        let b = shift_bounds(OutcomeKind::Binary, 0.9, 0.2).unwrap();
        assert!((b.delta_plus - 0.1).abs() < 1e-15 && b.delta_minus == -0.2);
        let b = shift_bounds(OutcomeKind::Binary, 0.128, 0.05).unwrap();
        assert_eq!((b.delta_plus, b.delta_minus), (0.05, -0.05));
        assert!(shift_bounds(OutcomeKind::Binary, 1.1, 0.05).is_err());

        assert_eq!(drift_range(OutcomeKind::Continuous, 0.0, 0.3).unwrap(), 0.6);
        assert!((drift_range(OutcomeKind::Binary, 0.9, 0.2).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(drift_range(OutcomeKind::Binary, 0.4, 0.0).unwrap(), 0.0);
    }
}
