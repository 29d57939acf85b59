/// Explicit midpoint Runge–Kutta stepper with reusable scratch buffers.
///
/// `y(t+dt) = y + dt·f(t + dt/2, y + dt/2·f(t, y))`
#[derive(Debug, Clone)]
pub struct Rk2 {
    k1: Vec<f64>,
    mid: Vec<f64>,
    k2: Vec<f64>,
}

impl Rk2 {
    pub fn new(dim: usize) -> Self {
        Rk2 {
            k1: vec![0.0; dim],
            mid: vec![0.0; dim],
            k2: vec![0.0; dim],
        }
    }

    /// Advances `y` in place. `f(t, y, dydt)` writes the derivative.
    pub fn step<E>(
        &mut self,
        t: f64,
        dt: f64,
        y: &mut [f64],
        mut f: impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    ) -> Result<(), E> {
        debug_assert_eq!(y.len(), self.k1.len());
        f(t, y, &mut self.k1)?;
        for ((m, yi), k) in self.mid.iter_mut().zip(y.iter()).zip(&self.k1) {
            *m = yi + 0.5 * dt * k;
        }
        f(t + 0.5 * dt, &self.mid, &mut self.k2)?;
        for (yi, k) in y.iter_mut().zip(&self.k2) {
            *yi += dt * k;
        }
        Ok(())
    }
}
