use crate::embedding::AmbientBox;

/// A black-box function to be minimized over an axis-aligned box.
pub trait Objective {
    /// Ambient dimension `D`.
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> f64;

    /// Search box; `[-1, 1]^D` unless overridden.
    fn bounds(&self) -> AmbientBox {
        AmbientBox::default()
    }
}

/// Adapts a closure into an [`Objective`].
#[derive(Debug, Clone)]
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }

    fn bounds(&self) -> AmbientBox {
        (**self).bounds()
    }
}
