//! Classical fixed-step fourth-order Runge-Kutta.

use nalgebra::SVector;

pub fn rk4_step<const N: usize>(
    f: impl Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
    t: f64,
    x: &SVector<f64, N>,
    h: f64,
) -> SVector<f64, N> {
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &(x + k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(x + k2 * (0.5 * h)));
    let k4 = f(t + h, &(x + k3 * h));
    x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// Takes `steps` steps of size `h` from `(t0, x0)` and returns the final state.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
    t0: f64,
    x0: SVector<f64, N>,
    h: f64,
    steps: usize,
) -> SVector<f64, N> {
    (0..steps).fold(x0, |x, k| rk4_step(&f, t0 + k as f64 * h, &x, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector1;

    #[test]
    fn exact_for_cubic_polynomials() {
        // x' = 3t² integrates exactly under a fourth-order rule
        let x = integrate(|t, _| Vector1::new(3.0 * t * t), 0.0, Vector1::new(0.0), 0.25, 8);
        assert!((x[0] - 8.0).abs() < 1e-12);
    }
}
