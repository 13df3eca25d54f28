use rayon::prelude::*;
use serde::Serialize;

use super::Group;
use crate::error::{Error, Result};

/// Largest radius scanned exhaustively.
pub const MAX_DELTA_RADIUS: usize = 6;

/// Estimated hyperbolicity constant from an exhaustive scan of a ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Delta {
    /// Half-integer, word-metric units.
    pub delta: f64,
    pub radius: usize,
}

impl Delta {
    /// `δ̂` rounded up to an integer, as used for slack constants.
    pub fn ceil(&self) -> u32 {
        self.delta.ceil() as u32
    }
}

/// Four-point scan with basepoint `e` over all triples in `Ball(radius)`:
/// `max min(<x1|x2>, <x2|x3>) - <x1|x3>`, clamped at zero.
pub fn estimate_delta(group: &Group, radius: usize) -> Result<Delta> {
    if radius > MAX_DELTA_RADIUS {
        return Err(Error::RadiusExceeded {
            required: radius,
            budget: MAX_DELTA_RADIUS,
        });
    }
    let ball = group.ball(radius);
    let xs = ball.elements();
    let n = xs.len();
    let norms: Vec<i32> = xs.iter().map(|x| group.length(x) as i32).collect();
    // Doubled Gromov products based at e.
    let gp: Vec<i32> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let norms = &norms;
            (0..n).map(move |j| norms[i] + norms[j] - group.dist(&xs[i], &xs[j]) as i32)
        })
        .collect();
    let worst = (0..n)
        .into_par_iter()
        .map(|i| {
            let row_i = &gp[i * n..(i + 1) * n];
            let mut worst = 0i32;
            for k in 0..n {
                let g13 = row_i[k];
                let row_k = &gp[k * n..(k + 1) * n];
                let best = row_i
                    .iter()
                    .zip(row_k)
                    .map(|(&a, &b)| a.min(b))
                    .max()
                    .unwrap_or(0);
                worst = worst.max(best - g13);
            }
            worst
        })
        .max()
        .unwrap_or(0);
    Ok(Delta {
        delta: worst.max(0) as f64 / 2.0,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    #[test]
    fn trees_are_zero_hyperbolic() {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        assert_eq!(estimate_delta(&g, 4).unwrap().delta, 0.0);
        let g = Group::new(GroupSpec::free_product(&[3, 3])).unwrap();
        assert_eq!(estimate_delta(&g, 4).unwrap().delta, 0.0);
    }

    #[test]
    fn product_with_z2_is_stable() {
        let g = Group::new(GroupSpec::free_times_z2()).unwrap();
        let d3 = estimate_delta(&g, 3).unwrap();
        let d4 = estimate_delta(&g, 4).unwrap();
        assert_eq!(d3.delta, d4.delta);
        assert_eq!(d4.delta, 1.0);
    }

    #[test]
    fn rejects_large_radius() {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        assert!(matches!(
            estimate_delta(&g, 7),
            Err(Error::RadiusExceeded { .. })
        ));
    }
}
