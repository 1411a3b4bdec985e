use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Isotropic 3D Gaussian. Its covariance is `scale^2 * I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub center: Vector3<f64>,
    pub scale: f64,
    pub opacity: f64,
    pub color: Vector3<f64>,
}

impl Gaussian {
    pub fn new(center: Vector3<f64>, scale: f64, opacity: f64, color: Vector3<f64>) -> Result<Self> {
        let g = Self {
            center,
            scale,
            opacity,
            color,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Gaussian center".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument("Gaussian scale must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::InvalidArgument("opacity outside [0, 1]".into()));
        }
        if !self.color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument("color outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Lower-triangular Cholesky factor of the (isotropic) covariance, as a
    /// scalar multiple of the identity.
    pub fn cholesky_factor(&self) -> f64 {
        self.scale
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianMap {
    gaussians: Vec<Gaussian>,
    generation: u64,
}

impl GaussianMap {
    pub fn new(gaussians: Vec<Gaussian>) -> Result<Self> {
        for g in &gaussians {
            g.validate()?;
        }
        Ok(Self {
            gaussians,
            generation: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn gaussians(&self) -> &[Gaussian] {
        &self.gaussians
    }

    /// Parameter edits in place. Does not bump the generation counter; that
    /// only tracks structural changes.
    pub fn gaussians_mut(&mut self) -> &mut [Gaussian] {
        &mut self.gaussians
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn extend(&mut self, new: impl IntoIterator<Item = Gaussian>) -> usize {
        let before = self.gaussians.len();
        self.gaussians.extend(new);
        let added = self.gaussians.len() - before;
        if added > 0 {
            self.generation += 1;
        }
        added
    }

    /// Removes every Gaussian for which `keep` is false; returns the count removed.
    pub fn retain(&mut self, keep: impl FnMut(&Gaussian) -> bool) -> usize {
        let before = self.gaussians.len();
        self.gaussians.retain(keep);
        let removed = before - self.gaussians.len();
        if removed > 0 {
            self.generation += 1;
        }
        removed
    }

    /// Clamps every field back into its valid range.
    pub(crate) fn project_to_valid(&mut self, min_scale: f64) {
        for g in &mut self.gaussians {
            g.scale = g.scale.max(min_scale);
            g.opacity = g.opacity.clamp(0.0, 1.0);
            for c in g.color.iter_mut() {
                *c = c.clamp(0.0, 1.0);
            }
        }
    }
}
