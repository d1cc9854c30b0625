use crate::error::Compartment;
use crate::spatial::{Field, Grid1D};

/// The four compartment fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub s: Field,
    pub v: Field,
    pub i: Field,
    pub r: Field,
}

impl FieldState {
    /// Spatially constant state.
    pub fn homogeneous(grid: &Grid1D, t: f64, s: f64, v: f64, i: f64, r: f64) -> Self {
        FieldState { t, s: grid.constant(s), v: grid.constant(v), i: grid.constant(i), r: grid.constant(r) }
    }

    pub fn zeros(n_nodes: usize, t: f64) -> Self {
        FieldState {
            t,
            s: Field::zeros(n_nodes),
            v: Field::zeros(n_nodes),
            i: Field::zeros(n_nodes),
            r: Field::zeros(n_nodes),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.s.len()
    }

    pub fn field(&self, c: Compartment) -> &Field {
        match c {
            Compartment::S => &self.s,
            Compartment::V => &self.v,
            Compartment::I => &self.i,
            Compartment::R => &self.r,
        }
    }

    pub fn field_mut(&mut self, c: Compartment) -> &mut Field {
        match c {
            Compartment::S => &mut self.s,
            Compartment::V => &mut self.v,
            Compartment::I => &mut self.i,
            Compartment::R => &mut self.r,
        }
    }

    pub fn fields(&self) -> [&Field; 4] {
        [&self.s, &self.v, &self.i, &self.r]
    }

    pub fn fields_mut(&mut self) -> [&mut Field; 4] {
        [&mut self.s, &mut self.v, &mut self.i, &mut self.r]
    }

    /// First compartment holding a non-finite value.
    pub fn non_finite_field(&self) -> Option<Compartment> {
        Compartment::ALL.into_iter().find(|&c| !self.field(c).is_finite())
    }

    /// Largest nodewise max − min over the four fields.
    pub fn max_spread(&self) -> f64 {
        self.fields().iter().map(|f| f.spread()).fold(0.0, f64::max)
    }
}
