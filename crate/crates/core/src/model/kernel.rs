use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    /// Point mass at `tau0`.
    Dirac { tau0: f64 },
    /// Density 1/k on [0, k].
    Uniform,
    /// Piecewise-linear density through `(nodes[j], densities[j])`; nodes run from 0 to k.
    Table { nodes: Vec<f64>, densities: Vec<f64> },
}

/// Delay density g on [0, k] with unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayKernel {
    shape: KernelShape,
    horizon: f64,
}

impl DelayKernel {
    pub fn dirac(tau0: f64, k: f64) -> Result<Self> {
        check_horizon(k)?;
        if !tau0.is_finite() || tau0 < 0.0 || tau0 > k {
            return Err(Error::InvalidParameter(format!(
                "dirac delay tau0 = {tau0} must lie in [0, k = {k}]"
            )));
        }
        Ok(DelayKernel { shape: KernelShape::Dirac { tau0 }, horizon: k })
    }

    pub fn uniform(k: f64) -> Result<Self> {
        check_horizon(k)?;
        if k == 0.0 {
            return Err(Error::DegenerateKernel("uniform kernel needs k > 0".into()));
        }
        Ok(DelayKernel { shape: KernelShape::Uniform, horizon: k })
    }

    /// Tabulated density, renormalized to unit trapezoid mass. The first node must be 0 and
    /// the last node becomes the horizon k.
    pub fn table(nodes: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if nodes.len() != densities.len() {
            return Err(Error::SizeMismatch { expected: nodes.len(), found: densities.len() });
        }
        if nodes.len() < 2 {
            return Err(Error::DegenerateKernel("table kernel needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("table kernel must start at tau = 0, got {}", nodes[0])));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("table kernel nodes must be finite and strictly increasing".into()));
        }
        if densities.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidParameter("table kernel densities must be finite and nonnegative".into()));
        }
        let mass = trapezoid_mass(&nodes, &densities);
        if mass <= 0.0 {
            return Err(Error::DegenerateKernel("table kernel has zero mass".into()));
        }
        let horizon = *nodes.last().expect("checked length");
        let densities = densities.into_iter().map(|g| g / mass).collect();
        Ok(DelayKernel { shape: KernelShape::Table { nodes, densities }, horizon })
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// Maximum delay k.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn family_name(&self) -> &'static str {
        match self.shape {
            KernelShape::Dirac { .. } => "dirac",
            KernelShape::Uniform => "uniform",
            KernelShape::Table { .. } => "table",
        }
    }

    /// Density at τ, `None` for the point mass.
    pub fn density(&self, tau: f64) -> Option<f64> {
        if !(0.0..=self.horizon).contains(&tau) {
            return match self.shape {
                KernelShape::Dirac { .. } => None,
                _ => Some(0.0),
            };
        }
        match &self.shape {
            KernelShape::Dirac { .. } => None,
            KernelShape::Uniform => Some(1.0 / self.horizon),
            KernelShape::Table { nodes, densities } => {
                let j = nodes.partition_point(|&x| x <= tau).clamp(1, nodes.len() - 1);
                let (x0, x1) = (nodes[j - 1], nodes[j]);
                let w = (tau - x0) / (x1 - x0);
                Some(densities[j - 1] * (1.0 - w) + densities[j] * w)
            }
        }
    }

    /// ∫₀ᵏ g(τ) dτ, exact for every supported shape.
    pub fn kernel_mass(&self) -> f64 {
        match &self.shape {
            KernelShape::Dirac { .. } => 1.0,
            KernelShape::Uniform => self.horizon * (1.0 / self.horizon),
            KernelShape::Table { nodes, densities } => trapezoid_mass(nodes, densities),
        }
    }
}

fn check_horizon(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delay horizon k = {k} must be finite and nonnegative")))
    }
}

fn trapezoid_mass(nodes: &[f64], densities: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(densities.windows(2))
        .map(|(x, g)| 0.5 * (x[1] - x[0]) * (g[0] + g[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_mass_has_unit_mass() {
        assert_eq!(DelayKernel::dirac(0.0, 0.0).unwrap().kernel_mass(), 1.0);
        assert_eq!(DelayKernel::dirac(1.5, 2.0).unwrap().kernel_mass(), 1.0);
    }

    #[test]
    fn uniform_mass_and_density() {
        let g = DelayKernel::uniform(2.0).unwrap();
        assert!((g.kernel_mass() - 1.0).abs() < 1e-12);
        assert_eq!(g.density(0.7), Some(0.5));
        assert_eq!(g.density(2.5), Some(0.0));
    }

    #[test]
    fn degenerate_and_invalid_kernels() {
        assert!(matches!(DelayKernel::uniform(0.0), Err(Error::DegenerateKernel(_))));
        assert!(DelayKernel::dirac(3.0, 2.0).is_err());
        assert!(DelayKernel::dirac(-0.1, 2.0).is_err());
        assert!(DelayKernel::table(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(DelayKernel::table(vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(DelayKernel::table(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DelayKernel::table(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn table_is_renormalized() {
        // g(τ) = τ on [0, 1] has raw mass 1/2.
        let g = DelayKernel::table(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert!((g.kernel_mass() - 1.0).abs() < 1e-12);
        assert!((g.density(0.25).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(g.horizon(), 1.0);
    }

    proptest! {
        #[test]
        fn table_mass_is_one(raw in proptest::collection::vec((1e-3f64..1.0, 0.0f64..10.0), 2..40)) {
            let mut nodes = vec![0.0];
            for (gap, _) in &raw[1..] {
                let last = *nodes.last().unwrap();
                nodes.push(last + gap);
            }
            let mut densities: Vec<f64> = raw.iter().map(|(_, g)| *g).collect();
            densities[0] += 1e-3;
            let g = DelayKernel::table(nodes, densities).unwrap();
            prop_assert!((g.kernel_mass() - 1.0).abs() < 1e-12);
        }
    }
}
