use std::sync::Arc;

use crate::error::{Error, Result};

use super::Grid;

/// `components`-vector samples at every grid node, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    components: usize,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn zeros(grid: Arc<Grid>, components: usize) -> Self {
        let len = grid.node_count() * components;
        Field {
            grid,
            components,
            values: vec![0.0; len],
            time: 0.0,
        }
    }

    pub fn from_values(grid: Arc<Grid>, components: usize, values: Vec<f64>, time: f64) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidField("need at least one component".into()));
        }
        if values.len() != grid.node_count() * components {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.node_count() * components,
                values.len()
            )));
        }
        Ok(Field {
            grid,
            components,
            values,
            time,
        })
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn<F>(grid: Arc<Grid>, components: usize, time: f64, f: F) -> Self
    where
        F: Fn(&[f64; 3], &mut [f64]),
    {
        let mut values = vec![0.0; grid.node_count() * components];
        for (node, out) in values.chunks_mut(components).enumerate() {
            f(&grid.position(node), out);
        }
        Field {
            grid,
            components,
            values,
            time,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn values_mut_vec(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    /// Validity scan: every sample must be finite.
    pub fn validate(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidField(format!(
                "non-finite sample {} at node {} component {}",
                self.values[i],
                i / self.components,
                i % self.components
            ))),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest Euclidean norm of a node vector.
    pub fn max_norm(&self) -> f64 {
        self.values
            .chunks(self.components)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Midpoint-rule `sum |u|^2 h^n` over all nodes.
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()
    }
}

/// Discrete gradient: `components x dim` entries per node,
/// laid out as `(node * components + i) * dim + alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    grid: Arc<Grid>,
    components: usize,
    values: Vec<f64>,
    time: f64,
}

impl GradientField {
    pub(crate) fn new(grid: Arc<Grid>, components: usize, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.node_count() * components * grid.dim());
        GradientField {
            grid,
            components,
            values,
            time,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// The `components x dim` block of one node.
    pub fn node(&self, node: usize) -> &[f64] {
        let b = self.components * self.grid.dim();
        &self.values[node * b..(node + 1) * b]
    }

    pub fn entry(&self, node: usize, component: usize, axis: usize) -> f64 {
        self.values[(node * self.components + component) * self.grid.dim() + axis]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidField("non-finite gradient sample".into()))
        }
    }
}
