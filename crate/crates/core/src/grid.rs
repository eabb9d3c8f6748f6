//! Time discretization and ensemble sizing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization knobs shared by every algorithm.
///
/// Samples are taken at `s * dt` for `s = 0..=steps`, so every series has
/// `steps + 1` entries and ends at the horizon `steps * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub dt: f64,
    pub steps: usize,
    /// Number of stochastic trajectories (or circuit runs).
    pub trajectories: usize,
    pub shots_per_point: usize,
    /// Trotter substeps per collision block.
    pub trotter: usize,
}

impl SimulationGrid {
    /// Grid covering `[0, horizon]` with step `dt`; `horizon / dt` must be an
    /// integer to within `1e-9` relative.
    pub fn from_horizon(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::Precondition(format!("horizon must be >= 0, got {horizon}")));
        }
        let steps = (horizon / dt).round();
        if (steps * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
            return Err(Error::Precondition(format!(
                "horizon {horizon} is not a whole number of steps of {dt}"
            )));
        }
        Ok(SimulationGrid {
            dt,
            steps: steps as usize,
            trajectories: 1,
            shots_per_point: 1,
            trotter: 1,
        })
    }

    pub fn with_trajectories(mut self, trajectories: usize) -> Self {
        self.trajectories = trajectories;
        self
    }

    pub fn with_trotter(mut self, trotter: usize) -> Self {
        self.trotter = trotter;
        self
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots_per_point = shots;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.steps + 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|s| s as f64 * self.dt).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Precondition("dt must be positive".into()));
        }
        if self.trajectories == 0 || self.shots_per_point == 0 || self.trotter == 0 {
            return Err(Error::Precondition(
                "trajectories, shots and trotter substeps must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Same grid with the step halved and the step count doubled.
    pub fn halved(&self) -> Self {
        SimulationGrid {
            dt: self.dt / 2.0,
            steps: self.steps * 2,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_consistency() {
        let g = SimulationGrid::from_horizon(40.0, 0.01).unwrap();
        assert_eq!(g.steps, 4000);
        assert_eq!(g.n_samples(), 4001);
        assert!((g.horizon() - 40.0).abs() < 1e-12);
        assert!(SimulationGrid::from_horizon(1.0, 0.3).is_err());
        assert!(SimulationGrid::from_horizon(1.0, 0.0).is_err());
        let h = g.halved();
        assert_eq!(h.steps, 8000);
        assert_eq!(h.dt, 0.005);
    }
}
