//! Particle systems `ξ = (1/n) Σ δ_{x_i}` and their jump transformations.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::jump::BoundaryEvent;

/// Sizes with common weight `1/n`. Order carries no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub n: u64,
    pub sizes: Vec<f64>,
}

fn check_size(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(usage(format!("particle size {x} is not positive and finite")));
    }
    Ok(())
}

impl ParticleSystem {
    pub fn new(n: u64, sizes: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(usage("weight inverse n must be positive"));
        }
        for &x in &sizes {
            check_size(x)?;
        }
        Ok(ParticleSystem { n, sizes })
    }

    pub fn empty(n: u64) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn monodisperse(n: u64, x0: f64, count: usize) -> Result<Self> {
        Self::new(n, vec![x0; count])
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// `(1/n) Σ x_i^p`.
    pub fn moment(&self, p: f64) -> f64 {
        let sum: f64 = if p == 0.0 {
            self.sizes.len() as f64
        } else if p == 1.0 {
            self.sizes.iter().sum()
        } else {
            self.sizes.iter().map(|x| x.powf(p)).sum()
        };
        sum / self.n as f64
    }

    pub fn mass(&self) -> f64 {
        self.moment(1.0)
    }

    fn index(&self, i: usize) -> Result<()> {
        if i >= self.sizes.len() {
            return Err(usage(format!(
                "particle index {i} out of range for {} particles",
                self.sizes.len()
            )));
        }
        Ok(())
    }

    /// Adds a particle of size `x`.
    pub fn apply_source(&self, x: f64) -> Result<Self> {
        check_size(x)?;
        let mut out = self.clone();
        out.sizes.push(x);
        Ok(out)
    }

    /// Removes particle `i`.
    pub fn apply_efflux(&self, i: usize) -> Result<Self> {
        self.index(i)?;
        let mut out = self.clone();
        out.sizes.swap_remove(i);
        Ok(out)
    }

    /// Replaces particle `i` by the given fragments.
    pub fn apply_frag(&self, i: usize, fragments: &[f64]) -> Result<Self> {
        self.index(i)?;
        let Some((&first, rest)) = fragments.split_first() else {
            return Err(usage("fragment list is empty"));
        };
        for &z in fragments {
            check_size(z)?;
        }
        let mut out = self.clone();
        out.sizes[i] = first;
        out.sizes.extend_from_slice(rest);
        Ok(out)
    }

    /// Merges particles `i` and `j` into one particle of size `x_i + x_j`.
    pub fn apply_coag_direct(&self, i: usize, j: usize) -> Result<Self> {
        self.index(i)?;
        self.index(j)?;
        if i == j {
            return Err(usage("direct coagulation needs two distinct particles"));
        }
        let mut out = self.clone();
        out.sizes[i] += out.sizes[j];
        out.sizes.swap_remove(j);
        Ok(out)
    }

    /// Replaces the size of particle `i` by `y`.
    pub fn apply_frag_massflow(&self, i: usize, y: f64) -> Result<Self> {
        self.index(i)?;
        if !(y > 0.0) {
            return Err(usage(format!("mass flow fragment {y} is not positive")));
        }
        if y > self.sizes[i] {
            return Err(usage(format!(
                "mass flow fragment {y} exceeds its parent {}",
                self.sizes[i]
            )));
        }
        let mut out = self.clone();
        out.sizes[i] = y;
        Ok(out)
    }

    /// Grows particle `i` by `x_j`; particle `j` is unchanged and may equal `i`.
    pub fn apply_coag_massflow(&self, i: usize, j: usize) -> Result<Self> {
        self.index(i)?;
        self.index(j)?;
        let mut out = self.clone();
        out.sizes[i] += self.sizes[j];
        Ok(out)
    }
}

impl AsRef<ParticleSystem> for ParticleSystem {
    fn as_ref(&self) -> &ParticleSystem {
        self
    }
}

/// Dust, gel and particle-count thresholds that stand in for the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryGuards {
    pub x_min: f64,
    pub x_max: f64,
    pub n_max: usize,
}

impl Default for BoundaryGuards {
    fn default() -> Self {
        BoundaryGuards {
            x_min: 1e-280,
            x_max: 1e280,
            n_max: 10_000_000,
        }
    }
}

impl BoundaryGuards {
    pub fn new(x_min: f64, x_max: f64, n_max: usize) -> Result<Self> {
        let g = BoundaryGuards { x_min, x_max, n_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min > 0.0 && self.x_min < self.x_max) {
            return Err(usage("guards need 0 < x_min < x_max"));
        }
        if self.n_max == 0 {
            return Err(usage("n_max must be positive"));
        }
        Ok(())
    }

    /// Whether a single size lies outside `[x_min, x_max]`.
    pub fn size_event(&self, x: f64) -> Option<BoundaryEvent> {
        if x < self.x_min {
            Some(BoundaryEvent::Dust)
        } else if x > self.x_max {
            Some(BoundaryEvent::Gel)
        } else {
            None
        }
    }
}

/// Reports dust, gel or blowup for a whole system.
pub fn boundary_check(xi: &ParticleSystem, guards: &BoundaryGuards) -> Option<BoundaryEvent> {
    if xi.len() > guards.n_max {
        return Some(BoundaryEvent::Blowup);
    }
    xi.sizes.iter().find_map(|&x| guards.size_event(x))
}
