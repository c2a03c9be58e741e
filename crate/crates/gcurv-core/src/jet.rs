//! Truncated order-3 jets: the universal scalar of the engine.
//!
//! A [`Jet3`] carries a value together with all partial derivatives up to
//! third order with respect to a fixed set of `dim` chart coordinates.
//! Arithmetic propagates derivatives exactly (truncated Leibniz / chain
//! rules), so any quantity assembled from jets has exact derivatives up to
//! rounding — no finite differencing anywhere downstream.
//!
//! Second and third derivatives are stored once per sorted multi-index
//! (`i <= j`, `i <= j <= k`), which makes the symmetry of partials exact by
//! construction rather than a numerical property.

/// Number of sorted pairs `i <= j` drawn from `0..n`.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Number of sorted triples `i <= j <= k` drawn from `0..n`.
#[inline]
pub fn triple_count(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

/// Packed offset of the sorted pair `(i, j)`, `i <= j < n`.
#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Packed offset of the sorted triple `(i, j, k)`, `i <= j <= k < n`.
#[inline]
fn triple_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i <= j && j <= k && k < n);
    // Skip all triples starting below i, then index the (j, k) pair within
    // the (n - i)-element tail.
    let skipped: usize = (0..i).map(|r| pair_count(n - r)).sum();
    skipped + pair_index(n - i, j - i, k - i)
}

fn sort2(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let (x, y) = sort2(a, b);
    if c >= y {
        (x, y, c)
    } else if c >= x {
        (x, c, y)
    } else {
        (c, x, y)
    }
}

/// Order-3 jet of a scalar function of `dim` variables at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3 {
    dim: usize,
    value: f64,
    /// First partials, length `dim`.
    grad: Vec<f64>,
    /// Second partials for sorted pairs, length `pair_count(dim)`.
    hess: Vec<f64>,
    /// Third partials for sorted triples, length `triple_count(dim)`.
    third: Vec<f64>,
}

impl Jet3 {
    /// The constant `value`, all derivatives zero.
    pub fn constant(dim: usize, value: f64) -> Self {
        Jet3 {
            dim,
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; pair_count(dim)],
            third: vec![0.0; triple_count(dim)],
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        let mut j = Jet3::constant(dim, value);
        j.grad[index] = 1.0;
        j
    }

    pub fn zero(dim: usize) -> Self {
        Jet3::constant(dim, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// First partial `∂_i`.
    pub fn partial(&self, i: usize) -> f64 {
        self.grad[i]
    }

    /// Second partial `∂_i ∂_j` (any index order).
    pub fn partial2(&self, i: usize, j: usize) -> f64 {
        let (i, j) = sort2(i, j);
        self.hess[pair_index(self.dim, i, j)]
    }

    /// Third partial `∂_i ∂_j ∂_k` (any index order).
    pub fn partial3(&self, i: usize, j: usize, k: usize) -> f64 {
        let (i, j, k) = sort3(i, j, k);
        self.third[triple_index(self.dim, i, j, k)]
    }

    /// True when the value and every stored derivative are finite.
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|x| x.is_finite())
            && self.hess.iter().all(|x| x.is_finite())
            && self.third.iter().all(|x| x.is_finite())
    }

    /// The jet of `∂_a f`, one order lower: its value is `grad[a]`, its
    /// gradient is the Hessian row, its Hessian the third-order slice. The
    /// third-order part of the result is zero — i.e. it is only trustworthy
    /// through second order. Callers must not consume the lost order.
    pub fn partial_jet(&self, a: usize) -> Jet3 {
        let n = self.dim;
        let mut out = Jet3::constant(n, self.grad[a]);
        for i in 0..n {
            out.grad[i] = self.partial2(a, i);
        }
        for i in 0..n {
            for j in i..n {
                out.hess[pair_index(n, i, j)] = self.partial3(a, i, j);
            }
        }
        out
    }

    /// Multiply by a plain scalar.
    pub fn scale(&self, c: f64) -> Jet3 {
        let mut out = self.clone();
        out.value *= c;
        out.grad.iter_mut().for_each(|x| *x *= c);
        out.hess.iter_mut().for_each(|x| *x *= c);
        out.third.iter_mut().for_each(|x| *x *= c);
        out
    }

    fn binary_map(&self, rhs: &Jet3, f: impl Fn(f64, f64) -> f64) -> Jet3 {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        Jet3 {
            dim: self.dim,
            value: f(self.value, rhs.value),
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| f(*a, *b)).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| f(*a, *b)).collect(),
            third: self.third.iter().zip(&rhs.third).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    fn mul_impl(&self, rhs: &Jet3) -> Jet3 {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        let n = self.dim;
        let (a, b) = (self, rhs);
        let mut out = Jet3::constant(n, a.value * b.value);
        for i in 0..n {
            out.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                out.hess[pair_index(n, i, j)] = a.partial2(i, j) * b.value
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i]
                    + a.value * b.partial2(i, j);
            }
        }
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    out.third[triple_index(n, i, j, k)] = a.partial3(i, j, k) * b.value
                        + a.partial2(i, j) * b.grad[k]
                        + a.partial2(i, k) * b.grad[j]
                        + a.partial2(j, k) * b.grad[i]
                        + a.grad[i] * b.partial2(j, k)
                        + a.grad[j] * b.partial2(i, k)
                        + a.grad[k] * b.partial2(i, j)
                        + a.value * b.partial3(i, j, k);
                }
            }
        }
        out
    }

    /// Univariate chain rule: compose `f` (given by its value and first three
    /// derivatives at `self.value`) with this jet.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64, f3: f64) -> Jet3 {
        let n = self.dim;
        let u = self;
        let mut out = Jet3::constant(n, f0);
        for i in 0..n {
            out.grad[i] = f1 * u.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                out.hess[pair_index(n, i, j)] =
                    f2 * u.grad[i] * u.grad[j] + f1 * u.partial2(i, j);
            }
        }
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    out.third[triple_index(n, i, j, k)] = f3 * u.grad[i] * u.grad[j] * u.grad[k]
                        + f2 * (u.partial2(i, j) * u.grad[k]
                            + u.partial2(i, k) * u.grad[j]
                            + u.partial2(j, k) * u.grad[i])
                        + f1 * u.partial3(i, j, k);
                }
            }
        }
        out
    }

    /// `1 / self`. IEEE semantics at a zero value (infinities propagate);
    /// the expression evaluator rejects exact zero divisors before calling.
    pub fn recip(&self) -> Jet3 {
        let u = self.value;
        let u2 = u * u;
        self.chain(1.0 / u, -1.0 / u2, 2.0 / (u2 * u), -6.0 / (u2 * u2))
    }

    pub fn sin(&self) -> Jet3 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s, -c)
    }

    pub fn cos(&self) -> Jet3 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c, s)
    }

    pub fn tan(&self) -> Jet3 {
        let t = self.value.tan();
        let d = 1.0 + t * t;
        // (tan)' = 1 + t², then differentiate in t.
        self.chain(t, d, 2.0 * t * d, d * (2.0 + 6.0 * t * t))
    }

    pub fn sinh(&self) -> Jet3 {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s, c)
    }

    pub fn cosh(&self) -> Jet3 {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c, s)
    }

    pub fn tanh(&self) -> Jet3 {
        let t = self.value.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d, d * (6.0 * t * t - 2.0))
    }

    pub fn exp(&self) -> Jet3 {
        let e = self.value.exp();
        self.chain(e, e, e, e)
    }

    /// Natural logarithm; requires a strictly positive value (checked by the
    /// expression evaluator, debug-asserted here).
    pub fn log(&self) -> Jet3 {
        debug_assert!(self.value > 0.0, "log of non-positive jet value");
        let u = self.value;
        self.chain(u.ln(), 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))
    }

    /// Square root; requires a strictly positive value.
    pub fn sqrt(&self) -> Jet3 {
        debug_assert!(self.value > 0.0, "sqrt of non-positive jet value");
        let s = self.value.sqrt();
        let u = self.value;
        self.chain(s, 0.5 / s, -0.25 / (s * u), 0.375 / (s * u * u))
    }

    /// |self|: identity or negation by the sign of the value (the `+` branch
    /// at exactly zero). Non-differentiable points are the caller's concern.
    pub fn abs(&self) -> Jet3 {
        if self.value >= 0.0 {
            self.clone()
        } else {
            -self
        }
    }

    /// Integer power by repeated multiplication (exponentiation by squaring);
    /// negative exponents go through `recip`.
    pub fn powi(&self, n: i64) -> Jet3 {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut result = Jet3::constant(self.dim, 1.0);
        let mut base = self.clone();
        let mut n = n as u64;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul_impl(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul_impl(&base);
            }
        }
        result
    }

    /// Real power with strictly positive base.
    pub fn powf(&self, p: f64) -> Jet3 {
        debug_assert!(self.value > 0.0, "powf of non-positive jet value");
        let u = self.value;
        let f0 = u.powf(p);
        self.chain(
            f0,
            p * u.powf(p - 1.0),
            p * (p - 1.0) * u.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * u.powf(p - 3.0),
        )
    }

    /// True when every derivative entry is exactly zero (a constant jet).
    pub fn is_constant(&self) -> bool {
        self.grad.iter().all(|x| *x == 0.0)
            && self.hess.iter().all(|x| *x == 0.0)
            && self.third.iter().all(|x| *x == 0.0)
    }
}

/// Truncated Taylor composition: `outer` is an `m`-variable jet, `inner` are
/// `m` jets in a common set of `n` variables whose values sit at `outer`'s
/// base point (the caller guarantees this — jets do not store base points).
/// The result is the order-3 jet of the composite in the `n` variables.
pub fn compose_jets(outer: &Jet3, inner: &[Jet3]) -> Jet3 {
    let m = outer.dim;
    assert_eq!(inner.len(), m, "compose_jets: need one inner jet per outer variable");
    let n = inner.first().map_or(0, |g| g.dim);
    assert!(inner.iter().all(|g| g.dim == n), "compose_jets: inner dimension mismatch");

    let mut out = Jet3::constant(n, outer.value);
    for i in 0..n {
        let mut s = 0.0;
        for a in 0..m {
            s += outer.grad[a] * inner[a].grad[i];
        }
        out.grad[i] = s;
    }
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for a in 0..m {
                for b in 0..m {
                    s += outer.partial2(a, b) * inner[a].grad[i] * inner[b].grad[j];
                }
                s += outer.grad[a] * inner[a].partial2(i, j);
            }
            out.hess[pair_index(n, i, j)] = s;
        }
    }
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let mut s = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            s += outer.partial3(a, b, c)
                                * inner[a].grad[i]
                                * inner[b].grad[j]
                                * inner[c].grad[k];
                        }
                        s += outer.partial2(a, b)
                            * (inner[a].partial2(i, j) * inner[b].grad[k]
                                + inner[a].partial2(i, k) * inner[b].grad[j]
                                + inner[a].partial2(j, k) * inner[b].grad[i]);
                    }
                    s += outer.grad[a] * inner[a].partial3(i, j, k);
                }
                out.third[triple_index(n, i, j, k)] = s;
            }
        }
    }
    out
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $impl:expr) => {
        impl std::ops::$trait<&Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                let f: fn(&Jet3, &Jet3) -> Jet3 = $impl;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                std::ops::$trait::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                std::ops::$trait::$method(&self, rhs)
            }
        }
        impl std::ops::$trait<Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                std::ops::$trait::$method(self, &rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.binary_map(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.binary_map(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_impl(b));
jet_binop!(Div, div, |a, b| a.mul_impl(&b.recip()));

impl std::ops::Neg for &Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl std::ops::Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl std::ops::Mul<f64> for &Jet3 {
    type Output = Jet3;
    fn mul(self, c: f64) -> Jet3 {
        self.scale(c)
    }
}

impl std::ops::Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, c: f64) -> Jet3 {
        self.scale(c)
    }
}
