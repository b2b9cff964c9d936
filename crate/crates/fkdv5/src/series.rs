//! Truncated Taylor series ("jets") in one variable.
//!
//! A `Series<N>` holds the Taylor coefficients `c[k] = f^(k)(t0) / k!` of a
//! scalar function about some expansion point. Arithmetic on series propagates
//! derivatives exactly (to machine precision), which is what the equivalence
//! transformations and the residual checks rely on: no finite differencing
//! happens anywhere on the transformation side.

/// Taylor coefficients of a function about a fixed point, truncated at order `N-1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Series<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Series<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Series { c }
    }

    /// The identity function `t` expanded at `t0`.
    pub fn variable(t0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = t0;
        if N > 1 {
            c[1] = 1.0;
        }
        Series { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative (not Taylor coefficient) at the expansion point.
    pub fn deriv(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = self.c[k] + o.c[k];
        }
        Series { c }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = self.c[k] - o.c[k];
        }
        Series { c }
    }

    pub fn neg(&self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = -self.c[k];
        }
        Series { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = self.c[k] * s;
        }
        Series { c }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += self.c[j] * o.c[k - j];
            }
            c[k] = acc;
        }
        Series { c }
    }

    /// 1 / self; requires a nonzero constant term.
    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut c = [0.0; N];
        c[0] = 1.0 / a0;
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * c[k - j];
            }
            c[k] = -acc / a0;
        }
        Series { c }
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    pub fn exp(&self) -> Self {
        let mut c = [0.0; N];
        c[0] = self.c[0].exp();
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (j as f64) * self.c[j] * c[k - j];
            }
            c[k] = acc / k as f64;
        }
        Series { c }
    }

    /// Natural log; requires a positive constant term.
    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut c = [0.0; N];
        c[0] = a0.ln();
        for k in 1..N {
            let mut acc = (k as f64) * self.c[k];
            for j in 1..k {
                acc -= (j as f64) * c[j] * self.c[k - j];
            }
            c[k] = acc / ((k as f64) * a0);
        }
        Series { c }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = [0.0; N];
        let mut co = [0.0; N];
        s[0] = self.c[0].sin();
        co[0] = self.c[0].cos();
        for k in 1..N {
            let mut acc_s = 0.0;
            let mut acc_c = 0.0;
            for j in 1..=k {
                acc_s += (j as f64) * self.c[j] * co[k - j];
                acc_c += (j as f64) * self.c[j] * s[k - j];
            }
            s[k] = acc_s / k as f64;
            co[k] = -acc_c / k as f64;
        }
        (Series { c: s }, Series { c: co })
    }

    pub fn tanh(&self) -> Self {
        // y' = (1 - y^2) g'
        let mut y = Series::<N>::constant(self.c[0].tanh());
        for k in 1..N {
            let one_minus_sq = Series::constant(1.0).sub(&y.mul(&y));
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (j as f64) * self.c[j] * one_minus_sq.c[k - j];
            }
            y.c[k] = acc / k as f64;
        }
        y
    }

    /// Square root; requires a positive constant term.
    pub fn sqrt(&self) -> Self {
        let b0 = self.c[0].sqrt();
        let mut c = [0.0; N];
        c[0] = b0;
        for k in 1..N {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= c[j] * c[k - j];
            }
            c[k] = acc / (2.0 * b0);
        }
        Series { c }
    }

    /// Integer power by repeated multiplication (valid for any base sign).
    pub fn powi(&self, mut k: i64) -> Self {
        let base = if k < 0 {
            k = -k;
            self.recip()
        } else {
            *self
        };
        let mut acc = Series::constant(1.0);
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            k >>= 1;
        }
        acc
    }

    /// Real power; requires a positive constant term.
    pub fn powf(&self, p: f64) -> Self {
        self.ln().scale(p).exp()
    }

    /// Antiderivative with given constant term: if self is f', the result is f.
    pub fn integrate(&self, c0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = c0;
        for k in 1..N {
            c[k] = self.c[k - 1] / k as f64;
        }
        Series { c }
    }

    /// Derivative as a series; the top coefficient is unknown and set to zero,
    /// so the result is only trusted through order `N-2`.
    pub fn differentiate(&self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N - 1 {
            c[k] = self.c[k + 1] * (k + 1) as f64;
        }
        Series { c }
    }

    /// Composition `self ∘ inner`: `self` is expanded at `inner.c[0]`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut shifted = *inner;
        shifted.c[0] = 0.0;
        // Horner evaluation of the outer polynomial in the shifted inner series.
        let mut acc = Series::constant(self.c[N - 1]);
        for k in (0..N - 1).rev() {
            acc = acc.mul(&shifted).add(&Series::constant(self.c[k]));
        }
        acc
    }

    /// Compositional inverse: given `self` = series of T at t0 (with T'(t0) != 0),
    /// returns the series of T^{-1} at T(t0), whose constant term is `t0`.
    pub fn revert(&self, t0: f64) -> Self {
        let a1 = self.c[1];
        let mut b = Series::<N>::constant(t0);
        b.c[0] = 0.0; // work with the shifted inverse, add t0 back at the end
        let mut shifted = *self;
        shifted.c[0] = 0.0;
        for k in 1..N {
            // choose b.c[k] so the k-th coefficient of shifted ∘ b matches identity
            let comp = compose_shifted(&shifted, &b);
            let target = if k == 1 { 1.0 } else { 0.0 };
            b.c[k] += (target - comp.c[k]) / a1;
        }
        b.c[0] = t0;
        b
    }
}

fn compose_shifted<const N: usize>(outer: &Series<N>, inner: &Series<N>) -> Series<N> {
    // both have zero constant term
    let mut acc = Series::constant(outer.c[N - 1]);
    for k in (0..N - 1).rev() {
        acc = acc.mul(inner).add(&Series::constant(outer.c[k]));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    type S = Series<5>;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn exp_derivatives() {
        let t = S::variable(0.7);
        let e = t.scale(2.0).exp();
        for k in 0..5 {
            close(e.deriv(k), 2f64.powi(k as i32) * (1.4f64).exp(), 1e-12);
        }
    }

    #[test]
    fn recip_and_ln() {
        let t = S::variable(2.0);
        let r = t.recip();
        close(r.deriv(0), 0.5, 1e-15);
        close(r.deriv(1), -0.25, 1e-15);
        close(r.deriv(2), 0.25, 1e-15);
        let l = t.ln();
        close(l.deriv(1), 0.5, 1e-15);
        close(l.deriv(2), -0.25, 1e-15);
    }

    #[test]
    fn tanh_matches_closed_form() {
        let t = S::variable(0.3);
        let y = t.tanh();
        let v = 0.3f64.tanh();
        close(y.deriv(0), v, 1e-15);
        close(y.deriv(1), 1.0 - v * v, 1e-14);
        close(y.deriv(2), -2.0 * v * (1.0 - v * v), 1e-14);
    }

    #[test]
    fn powf_on_variable() {
        let t = S::variable(3.0);
        let p = t.powf(2.5);
        close(p.deriv(0), 3f64.powf(2.5), 1e-12);
        close(p.deriv(1), 2.5 * 3f64.powf(1.5), 1e-12);
    }

    #[test]
    fn compose_and_revert() {
        // T(t) = e^t at t0 = 0.5; inverse is ln at e^{0.5}
        let t = S::variable(0.5);
        let big_t = t.exp();
        let inv = big_t.revert(0.5);
        let y0 = 0.5f64.exp();
        close(inv.deriv(0), 0.5, 1e-14);
        close(inv.deriv(1), 1.0 / y0, 1e-13);
        close(inv.deriv(2), -1.0 / (y0 * y0), 1e-13);
        // compose back: T ∘ T^{-1} should be the identity series at y0
        let id = big_t.compose(&inv);
        close(id.c[0], y0, 1e-13);
        close(id.c[1], 1.0, 1e-12);
        close(id.c[2], 0.0, 1e-12);
    }
}
