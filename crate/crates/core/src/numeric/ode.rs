//! Dormand-Prince 5(4) with adaptive step size; integrates forward or
//! backward depending on the sign of `t1 - t0`.

use crate::{Error, Real, Result};

#[derive(Clone, Debug)]
pub struct DormandPrince<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for DormandPrince<T> {
    fn default() -> Self {
        Self {
            rtol: T::tol(1e-12),
            atol: T::tol(1e-14),
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl<T: Real> DormandPrince<T> {
    /// Integrate `y' = f(t, y)` from `t0` to `t1`, calling `observe` after
    /// every accepted step (the observer may abort with an error).
    pub fn integrate<F, O>(&self, mut f: F, t0: T, y0: &[T], t1: T, mut observe: O) -> Result<Vec<T>>
    where
        F: FnMut(T, &[T], &mut [T]),
        O: FnMut(T, &[T]) -> Result<()>,
    {
        let dim = y0.len();
        let mut y = y0.to_vec();
        let mut t = t0;
        let span = t1 - t0;
        if span == T::zero() {
            return Ok(y);
        }
        let dir = span.signum();
        let mut h = span.abs().min(T::lit(0.01)) * dir;
        let mut k = vec![vec![T::zero(); dim]; 7];
        let mut tmp = vec![T::zero(); dim];
        let mut y5 = vec![T::zero(); dim];
        let c: Vec<T> = C.iter().map(|&x| T::lit(x)).collect();
        let a: Vec<Vec<T>> = A.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
        let b5: Vec<T> = B5.iter().map(|&x| T::lit(x)).collect();
        let b4: Vec<T> = B4.iter().map(|&x| T::lit(x)).collect();
        for _ in 0..self.max_steps {
            if (t1 - t) * dir <= T::zero() {
                return Ok(y);
            }
            if (t + h - t1) * dir > T::zero() {
                h = t1 - t;
            }
            for s in 0..7 {
                for d in 0..dim {
                    let mut acc = y[d];
                    for (r, kr) in k.iter().enumerate().take(s) {
                        acc = acc + h * a[s][r] * kr[d];
                    }
                    tmp[d] = acc;
                }
                f(t + c[s] * h, &tmp, &mut k[s]);
            }
            let mut err = T::zero();
            for d in 0..dim {
                let mut hi = y[d];
                let mut lo = y[d];
                for s in 0..7 {
                    hi = hi + h * b5[s] * k[s][d];
                    lo = lo + h * b4[s] * k[s][d];
                }
                y5[d] = hi;
                let scale = self.atol + self.rtol * y[d].abs().max(hi.abs());
                let e = (hi - lo) / scale;
                err = err + e * e;
            }
            err = (err / T::from_usize_lossy(dim)).sqrt();
            if !err.is_finite() {
                h = h * T::lit(0.2);
                if h.abs() < T::epsilon() * (T::one() + t.abs()) {
                    return Err(Error::NotConverged(format!("step size underflow at t = {t}")));
                }
                continue;
            }
            if err <= T::one() {
                t = t + h;
                y.copy_from_slice(&y5);
                observe(t, &y)?;
            }
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
            };
            h = h * factor;
            if h.abs() < T::epsilon() * (T::one() + t.abs()) {
                return Err(Error::NotConverged(format!("step size underflow at t = {t}")));
            }
        }
        Err(Error::NotConverged("step budget exhausted".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = DormandPrince::<f64>::default()
            .integrate(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], 2.0, |_, _| Ok(()))
            .unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let y = DormandPrince::<f64>::default()
            .integrate(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[0.0, 1.0],
                -3.0,
                |_, _| Ok(()),
            )
            .unwrap();
        assert!((y[0] - (-3f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-3f64).cos()).abs() < 1e-10);
    }
}
