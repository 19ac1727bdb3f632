//! Fourth-order central differences with one Richardson level.
//!
//! Each base stencil has error `O(h^4)`; combining the `h` and `h/2`
//! estimates as `(16 D(h/2) - D(h)) / 15` cancels that term.

use std::ops::{Add, Mul};

/// Values the stencils can combine linearly (scalars and `DVector<f64>`).
pub trait Linear: Clone + Add<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Clone + Add<Output = T> + Mul<f64, Output = T>> Linear for T {}

const D1_OFFSETS: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const D2_OFFSETS: [(f64, f64); 5] = [
    (-2.0, -1.0),
    (-1.0, 16.0),
    (0.0, -30.0),
    (1.0, 16.0),
    (2.0, -1.0),
];

fn combine<T: Linear>(terms: impl IntoIterator<Item = (f64, T)>) -> T {
    let mut it = terms.into_iter();
    let (w0, v0) = it.next().expect("non-empty stencil");
    it.fold(v0 * w0, |acc, (w, v)| acc + v * w)
}

fn richardson<T: Linear>(coarse: T, fine: T) -> T {
    fine * (16.0 / 15.0) + coarse * (-1.0 / 15.0)
}

fn d1_base<T: Linear>(f: &impl Fn(f64) -> T, h: f64) -> T {
    combine(D1_OFFSETS.iter().map(|&(k, w)| (w / (12.0 * h), f(k * h))))
}

fn d2_base<T: Linear>(f: &impl Fn(f64) -> T, h: f64) -> T {
    combine(
        D2_OFFSETS
            .iter()
            .map(|&(k, w)| (w / (12.0 * h * h), f(k * h))),
    )
}

fn d11_base<T: Linear>(f: &impl Fn(f64, f64) -> T, h: f64) -> T {
    combine(D1_OFFSETS.iter().flat_map(|&(i, wi)| {
        D1_OFFSETS
            .iter()
            .map(move |&(j, wj)| (wi * wj / (144.0 * h * h), f(i * h, j * h)))
    }))
}

/// First derivative at 0 of `f(s)`, evaluated through offsets `s`.
pub fn first<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    richardson(d1_base(&f, h), d1_base(&f, 0.5 * h))
}

/// Second derivative at 0 of `f(s)`.
pub fn second<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    richardson(d2_base(&f, h), d2_base(&f, 0.5 * h))
}

/// Mixed derivative `∂²/∂s∂r` at the origin of `f(s, r)`.
pub fn mixed<T: Linear>(f: impl Fn(f64, f64) -> T, h: f64) -> T {
    richardson(d11_base(&f, h), d11_base(&f, 0.5 * h))
}

/// Plain fourth-order first derivative without extrapolation.
pub fn first_o4<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    d1_base(&f, h)
}

/// Plain fourth-order second derivative without extrapolation.
pub fn second_o4<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    d2_base(&f, h)
}

/// Largest offset any stencil in this module reaches, in units of `h`.
pub const REACH: f64 = 2.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_sine() {
        let x0 = 0.7_f64;
        let d = first(|s| (x0 + s).sin(), 1e-2);
        assert!((d - x0.cos()).abs() < 1e-12, "{}", d - x0.cos());
        let dd = second(|s| (x0 + s).sin(), 1e-2);
        assert!((dd + x0.sin()).abs() < 1e-10, "{}", dd + x0.sin());
    }

    #[test]
    fn mixed_of_product() {
        // ∂x∂y sin(x) e^y = cos(x) e^y
        let (x0, y0) = (0.3_f64, -0.2_f64);
        let d = mixed(|s, r| (x0 + s).sin() * (y0 + r).exp(), 1e-2);
        assert!((d - x0.cos() * y0.exp()).abs() < 1e-10);
    }

    #[test]
    fn richardson_raises_order() {
        let f = |s: f64| (1.0 + s).exp();
        let e_plain = (first_o4(f, 0.1) - 1f64.exp()).abs();
        let e_rich = (first(f, 0.1) - 1f64.exp()).abs();
        assert!(e_rich < e_plain * 1e-2);
        // halving h cuts the plain fourth-order error by ~16
        let ratio = e_plain / (first_o4(f, 0.05) - 1f64.exp()).abs();
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }
}
