//! Supremum search over a Euclidean ball of hypotheses: a regular grid
//! clipped to the ball followed by a coordinate-search refinement.
//!
//! Shared by the `d_W` estimator, the empirical subgaussian proxy and the
//! Rademacher complexity bound.

use crate::error::{ensure_positive, Error, Result};
use crate::model::{norm, project_ball};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearch {
    pub radius: f64,
    /// Intervals per axis; the axis nodes are `-R + 2R·i/resolution`, so
    /// doubling the resolution yields a superset of nodes.
    pub resolution: usize,
    pub refine: bool,
}

impl GridSearch {
    /// 1024 intervals in one dimension, 64 per axis otherwise.
    pub fn for_dim(dim: usize, radius: f64) -> Self {
        GridSearch {
            radius,
            resolution: if dim == 1 { 1024 } else { 64 },
            refine: true,
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn without_refinement(mut self) -> Self {
        self.refine = false;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        ensure_positive("radius", self.radius)?;
        if self.resolution == 0 {
            return Err(Error::invalid("grid_resolution", "must be positive"));
        }
        if dim == 0 || dim > 3 {
            return Err(Error::Unsupported(format!(
                "grid search over {dim}-dimensional hypotheses"
            )));
        }
        Ok(())
    }

    /// All grid nodes inside the closed ball.
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        self.validate(dim)?;
        let r = self.radius;
        let axis: Vec<f64> = (0..=self.resolution)
            .map(|i| -r + 2.0 * r * i as f64 / self.resolution as f64)
            .collect();
        let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..dim {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        let limit = r * (1.0 + 1e-12);
        pts.retain(|p| norm(p) <= limit);
        Ok(pts)
    }

    /// Maximizes `f` over the ball. Returns the maximizer and the value.
    pub fn maximize<F>(&self, dim: usize, f: F) -> Result<(Vec<f64>, f64)>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let pts = self.points(dim)?;
        self.maximize_over(&pts, f)
    }

    /// Like [`maximize`](Self::maximize) but with caller-supplied nodes
    /// (e.g. the grid plus a training trajectory).
    pub fn maximize_over<F>(&self, pts: &[Vec<f64>], f: F) -> Result<(Vec<f64>, f64)>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        if pts.is_empty() {
            return Err(Error::Empty("grid"));
        }
        let values = par::map_indexed(pts.len(), |i| f(&pts[i]));
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        let mut w = pts[best].clone();
        let mut value = values[best];
        if self.refine {
            let step0 = 2.0 * self.radius / self.resolution as f64;
            coordinate_ascent(&f, &mut w, &mut value, step0, self.radius);
        }
        Ok((w, value))
    }
}

fn coordinate_ascent<F: Fn(&[f64]) -> f64>(
    f: &F,
    w: &mut Vec<f64>,
    value: &mut f64,
    mut step: f64,
    radius: f64,
) {
    let min_step = 1e-9 * radius;
    let mut evals = 0usize;
    while step > min_step && evals < 10_000 {
        let mut improved = false;
        for i in 0..w.len() {
            for dir in [1.0, -1.0] {
                let mut cand = w.clone();
                cand[i] += dir * step;
                project_ball(&mut cand, radius);
                let v = f(&cand);
                evals += 1;
                if v > *value {
                    *value = v;
                    *w = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
}
