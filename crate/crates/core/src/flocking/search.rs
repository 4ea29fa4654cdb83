//! Stage-one coverage: equal vertical strips, one boustrophedon path each.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Vec3};

/// Axis-aligned rectangle in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }

    /// `n` equal-width vertical strips, left to right.
    pub fn strips(&self, n: usize) -> Vec<Rect> {
        let w = self.width() / n as f64;
        (0..n)
            .map(|i| {
                let x0 = self.min[0] + w * i as f64;
                let x1 = if i + 1 == n { self.max[0] } else { self.min[0] + w * (i + 1) as f64 };
                Rect { min: [x0, self.min[1]], max: [x1, self.max[1]] }
            })
            .collect()
    }
}

/// One lawnmower path per strip. Lanes run along y and are spaced evenly
/// so that no point of a strip is more than `lane_spacing / 2` from a lane.
pub fn generate_search_paths(area: &Rect, n_agents: usize, lane_spacing: f64, height: f64) -> Vec<Vec<Vec3>> {
    assert!(lane_spacing > 0.0, "lane spacing must be positive");
    area.strips(n_agents.max(1))
        .into_iter()
        .map(|strip| {
            let lanes = (strip.width() / lane_spacing).ceil().max(1.0) as usize;
            let pitch = strip.width() / lanes as f64;
            let mut path = Vec::with_capacity(2 * lanes);
            for lane in 0..lanes {
                let x = strip.min[0] + pitch * (lane as f64 + 0.5);
                let (y0, y1) = if lane % 2 == 0 { (strip.min[1], strip.max[1]) } else { (strip.max[1], strip.min[1]) };
                path.extend_from_slice(&[Vec3::new(x, y0, height), Vec3::new(x, y1, height)]);
            }
            path
        })
        .collect()
}

/// Continuously rotating heading used while searching.
pub fn search_heading(t: f64, yaw_rate: f64) -> f64 {
    wrap_angle(t * yaw_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn lane_xs(path: &[Vec3]) -> Vec<f64> {
        path.iter().step_by(2).map(|p| p.x).collect()
    }

    fn square() -> Rect {
        Rect { min: [0.0, 0.0], max: [100.0, 100.0] }
    }

    #[test]
    fn single_agent_four_lanes() {
        let paths = generate_search_paths(&square(), 1, 25.0, 4.0);
        assert_eq!(paths.len(), 1);
        assert_eq!(lane_xs(&paths[0]), [12.5, 37.5, 62.5, 87.5]);
        assert!(paths[0].iter().all(|p| p.z == 4.0));
        assert_eq!(paths[0][1], Vec3::new(12.5, 100.0, 4.0));
        assert_eq!(paths[0][2], Vec3::new(37.5, 100.0, 4.0));
    }

    #[test]
    fn four_equal_strips() {
        let strips = square().strips(4);
        assert_eq!(strips.len(), 4);
        for (i, s) in strips.iter().enumerate() {
            assert_relative_eq!(s.width(), 25.0);
            assert_relative_eq!(s.height(), 100.0);
            assert_relative_eq!(s.min[0], 25.0 * i as f64);
        }
        assert_eq!(strips[3].max[0], 100.0);
        for w in strips.windows(2) {
            assert_eq!(w[0].max[0], w[1].min[0]);
        }
        let paths = generate_search_paths(&square(), 4, 20.0, 4.0);
        for (path, strip) in paths.iter().zip(&strips) {
            assert!(path.iter().all(|p| strip.contains(p.x, p.y)));
        }
    }

    #[test]
    fn wide_spacing_gives_center_lane() {
        let paths = generate_search_paths(&square(), 4, 60.0, 4.0);
        for (i, path) in paths.iter().enumerate() {
            assert_eq!(lane_xs(path), [25.0 * i as f64 + 12.5]);
        }
    }

    #[test]
    fn coverage_within_half_spacing() {
        for (n, spacing) in [(1, 20.0), (3, 20.0), (5, 7.0), (2, 33.0)] {
            let paths = generate_search_paths(&square(), n, spacing, 4.0);
            let lanes: Vec<f64> = paths.iter().flat_map(|p| lane_xs(p)).collect();
            for i in 0..=200 {
                let x = i as f64 * 0.5;
                let d = lanes.iter().map(|l| (l - x).abs()).fold(f64::INFINITY, f64::min);
                assert!(d <= spacing / 2.0 + 1e-9, "n={n} x={x} d={d}");
            }
        }
    }

    #[test]
    fn heading_rotation() {
        assert_eq!(search_heading(0.0, 0.7), 0.0);
        assert_relative_eq!(search_heading(PI, 1.0), PI);
        assert_relative_eq!(search_heading(PI + 0.5, 1.0), -PI + 0.5, epsilon = 1e-12);
    }
}
