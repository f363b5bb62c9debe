//! Real-valued maps with per-pixel validity.

use serde::{Deserialize, Serialize};

use crate::{Error, Grid, Result};

/// What a [`ScalarMap`] holds; controls export scaling tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapRole {
    Intensity,
    Variance,
    Transmission,
    Decibels,
}

impl MapRole {
    pub fn as_str(self) -> &'static str {
        match self {
            MapRole::Intensity => "intensity",
            MapRole::Variance => "variance",
            MapRole::Transmission => "transmission",
            MapRole::Decibels => "dB",
        }
    }
}

/// A 2D real map. Invalid pixels carry no value and are exported as gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    grid: Grid,
    role: MapRole,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ScalarMap {
    pub fn new(grid: Grid, role: MapRole, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::with_validity(grid, role, values, valid)
    }

    pub fn with_validity(
        grid: Grid,
        role: MapRole,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::Shape(format!(
                "map has {} values / {} flags, grid needs {}",
                values.len(),
                valid.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            role,
            values,
            valid,
        })
    }

    pub fn constant(grid: Grid, role: MapRole, value: f64) -> Self {
        Self {
            grid,
            role,
            values: vec![value; grid.len()],
            valid: vec![true; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn role(&self) -> MapRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = self.grid.index(x, y);
        self.valid[i].then_some(self.values[i])
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.grid.index(x, y)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Values at valid pixels, in raster order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .filter_map(|(&v, &ok)| ok.then_some(v))
    }

    /// Mean over valid pixels, `None` if there are none.
    pub fn valid_mean(&self) -> Option<f64> {
        let (s, n) = self
            .valid_values()
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| s / n as f64)
    }

    /// Smallest and largest valid value.
    pub fn valid_range(&self) -> Option<(f64, f64)> {
        self.valid_values().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    pub fn with_role(mut self, role: MapRole) -> Self {
        self.role = role;
        self
    }

    /// Pointwise transform of valid values; `f` returning `None` invalidates the pixel.
    pub fn map_valid(&self, role: MapRole, f: impl Fn(f64) -> Option<f64>) -> Self {
        let mut values = self.values.clone();
        let mut valid = self.valid.clone();
        for (v, ok) in values.iter_mut().zip(valid.iter_mut()) {
            if *ok {
                match f(*v) {
                    Some(out) => *v = out,
                    None => {
                        *v = 0.0;
                        *ok = false;
                    }
                }
            }
        }
        Self {
            grid: self.grid,
            role,
            values,
            valid,
        }
    }
}
