//! Second-order Taylor jets: a value together with its first two derivatives
//! with respect to a scalar evaluation point.
//!
//! Component transforms are assembled from distribution transforms by sums,
//! products, quotients, and evaluation at affine arguments a + b·s. Carrying
//! `(f, f', f'')` through those operations gives exact derivatives without any
//! numerical differentiation, which the public order-{0,1,2} queries require.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value and first two derivatives of a scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Jet {
    /// `[f, f', f'']`.
    pub d: [f64; 3],
}

impl Jet {
    pub fn new(f: f64, d1: f64, d2: f64) -> Self {
        Jet { d: [f, d1, d2] }
    }

    /// A constant: derivatives vanish.
    pub fn constant(c: f64) -> Self {
        Jet { d: [c, 0.0, 0.0] }
    }

    /// The identity function evaluated at `s`.
    pub fn variable(s: f64) -> Self {
        Jet { d: [s, 1.0, 0.0] }
    }

    /// Derivative of the given order, 0 ≤ order ≤ 2.
    pub fn deriv(&self, order: usize) -> f64 {
        self.d[order]
    }

    pub fn scale(&self, c: f64) -> Self {
        Jet {
            d: [c * self.d[0], c * self.d[1], c * self.d[2]],
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            d: [
                self.d[0] + o.d[0],
                self.d[1] + o.d[1],
                self.d[2] + o.d[2],
            ],
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            d: [
                self.d[0] - o.d[0],
                self.d[1] - o.d[1],
                self.d[2] - o.d[2],
            ],
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (f, g) = (self.d, o.d);
        Jet {
            d: [
                f[0] * g[0],
                f[1] * g[0] + f[0] * g[1],
                f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2],
            ],
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    // Quotient recurrence divides by g only, never g³, so it stays finite
    // whenever the quotient's own derivatives are representable.
    fn div(self, o: Jet) -> Jet {
        let (n, g) = (self.d, o.d);
        let q0 = n[0] / g[0];
        let q1 = (n[1] - q0 * g[1]) / g[0];
        let q2 = (n[2] - q0 * g[2] - 2.0 * q1 * g[1]) / g[0];
        Jet { d: [q0, q1, q2] }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
