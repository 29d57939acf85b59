use super::{Result, Tape, Tensor, TensorError, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Flat index of the worst element.
    pub worst_index: usize,
    pub pass: bool,
}

/// Compares reverse-mode gradients of a scalar function against central
/// differences `(f(x+hδ) − f(x−hδ)) / 2h`, element by element.
///
/// The relative error of each element uses `max(|a|, |b|, 1e-8)` as the
/// denominator. `pass` is `max_rel_err <= tol`.
pub fn gradient_check<F>(f: F, x: &Tensor, h: f64, tol: f64) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>,
{
    if h <= 0.0 {
        return Err(TensorError::Invalid(format!("step h must be > 0, got {h}")));
    }
    let eval = |probe: Tensor| -> Result<f64> {
        let tape = Tape::new();
        let v = tape.constant(probe);
        let out = f(&tape, v)?.scalar();
        if !out.is_finite() {
            return Err(TensorError::NonFinite(format!("f(x) = {out}")));
        }
        Ok(out)
    };

    let analytic = {
        let tape = Tape::new();
        let v = tape.param(x.clone());
        let loss = f(&tape, v)?;
        if !loss.scalar().is_finite() {
            return Err(TensorError::NonFinite(format!("f(x) = {}", loss.scalar())));
        }
        tape.backward(loss)?.get(v).expect("leaf gradient")
    };

    let mut worst = (0.0_f64, 0usize);
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + h;
        let fp = eval(probe.clone())?;
        probe.data_mut()[i] = orig - h;
        let fm = eval(probe.clone())?;
        probe.data_mut()[i] = orig;
        let numeric = (fp - fm) / (2.0 * h);
        let a = analytic.data()[i];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        let rel = (a - numeric).abs() / denom;
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    Ok(GradCheckReport {
        max_rel_err: worst.0,
        worst_index: worst.1,
        pass: worst.0 <= tol,
    })
}
