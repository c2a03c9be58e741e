//! Ambient structure fields: chart, semi-Riemannian metric, closed 3-form
//! flux and divergence data (vector + 1-form pair), all stored as parsed
//! expressions and evaluated into order-3 jets at chart points.

use crate::expr::{self, EvalError, Expr, Func, ParseError};
use crate::jet::Jet3;
use crate::tensor::{Symmetry, Tensor, Variance};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum FieldError {
    #[error("in {context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("in {context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: EvalError,
    },
    #[error("{0}")]
    Validation(String),
    #[error("point {point:?} lies outside the chart domain of `{coord}`")]
    OutsideDomain { coord: String, point: Vec<f64> },
    #[error("metric is degenerate at {point:?} (|det| = {det:.3e})")]
    DegenerateMetric { point: Vec<f64>, det: f64 },
    #[error("metric signature at {point:?} is ({got_p},{got_q}), declared ({want_p},{want_q})")]
    SignatureMismatch { point: Vec<f64>, got_p: usize, got_q: usize, want_p: usize, want_q: usize },
}

fn parse_in(text: &str, chart: &Chart, context: impl Fn() -> String) -> Result<Expr, FieldError> {
    expr::parse(text, &chart.coords).map_err(|source| FieldError::Parse { context: context(), source })
}

fn eval_in(e: &Expr, point: &[f64], context: impl Fn() -> String) -> Result<Jet3, FieldError> {
    expr::eval_jet(e, point).map_err(|source| FieldError::Eval { context: context(), source })
}

// ---------------------------------------------------------------------------
// Chart
// ---------------------------------------------------------------------------

/// A named coordinate chart: distinct coordinate names and optional open
/// interval restrictions per coordinate.
#[derive(Debug, Clone)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<String>,
    domains: Vec<Option<(f64, f64)>>,
}

impl Chart {
    pub fn new(name: &str, coords: &[&str]) -> Result<Chart, FieldError> {
        if coords.len() < 2 {
            return Err(FieldError::Validation(format!(
                "chart `{name}` must have dimension >= 2, got {}",
                coords.len()
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            let mut chars = c.chars();
            let head_ok = chars.next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_');
            if !head_ok || !chars.all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                return Err(FieldError::Validation(format!(
                    "coordinate `{c}` is not a valid identifier"
                )));
            }
            if Func::from_name(c).is_some() {
                return Err(FieldError::Validation(format!(
                    "coordinate `{c}` shadows a built-in function"
                )));
            }
            if coords[..i].contains(c) {
                return Err(FieldError::Validation(format!(
                    "duplicate coordinate name `{c}` in chart `{name}`"
                )));
            }
        }
        Ok(Chart {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            domains: vec![None; coords.len()],
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Restrict a coordinate to the open interval `(lo, hi)`.
    pub fn with_domain(mut self, coord: &str, lo: f64, hi: f64) -> Result<Chart, FieldError> {
        let idx = self
            .coords
            .iter()
            .position(|c| c == coord)
            .ok_or_else(|| FieldError::Validation(format!("no coordinate `{coord}` in chart")))?;
        if !(lo < hi) {
            return Err(FieldError::Validation(format!(
                "empty domain ({lo}, {hi}) for coordinate `{coord}`"
            )));
        }
        self.domains[idx] = Some((lo, hi));
        Ok(self)
    }

    pub fn domain(&self, idx: usize) -> Option<(f64, f64)> {
        self.domains[idx]
    }

    /// Check a point lies in the chart: right dimension, finite, inside all
    /// declared open intervals.
    pub fn check_point(&self, point: &[f64]) -> Result<(), FieldError> {
        if point.len() != self.dim() {
            return Err(FieldError::Validation(format!(
                "point has dimension {}, chart `{}` has dimension {}",
                point.len(),
                self.name,
                self.dim()
            )));
        }
        for (i, (&x, dom)) in point.iter().zip(&self.domains).enumerate() {
            if !x.is_finite() {
                return Err(FieldError::Validation(format!(
                    "coordinate `{}` is not finite at {point:?}",
                    self.coords[i]
                )));
            }
            if let Some((lo, hi)) = dom {
                if !(x > *lo && x < *hi) {
                    return Err(FieldError::OutsideDomain {
                        coord: self.coords[i].clone(),
                        point: point.to_vec(),
                    });
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Metric
// ---------------------------------------------------------------------------

/// Symmetric metric field: expressions stored for `i <= j`, with a declared
/// signature `(p, q)` that is re-verified at every evaluation point.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    upper: Vec<Expr>, // packed i <= j, row-major over the triangle
    pub signature: (usize, usize),
}

fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl MetricField {
    /// Build from a full matrix of expression strings. The two triangles
    /// must parse to structurally identical expressions.
    pub fn from_rows(chart: &Chart, rows: &[Vec<&str>], signature: (usize, usize)) -> Result<Self, FieldError> {
        let dim = chart.dim();
        if signature.0 + signature.1 != dim {
            return Err(FieldError::Validation(format!(
                "signature ({},{}) does not sum to dimension {dim}",
                signature.0, signature.1
            )));
        }
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(FieldError::Validation(format!("metric matrix must be {dim}x{dim}")));
        }
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                let ctx = |i: usize, j: usize| format!("metric component g[{i}][{j}]");
                let e = parse_in(rows[i][j], chart, || ctx(i, j))?;
                if i != j {
                    let mirror = parse_in(rows[j][i], chart, || ctx(j, i))?;
                    if mirror != e {
                        return Err(FieldError::Validation(format!(
                            "metric components g[{i}][{j}] and g[{j}][{i}] differ"
                        )));
                    }
                }
                upper.push(e);
            }
        }
        Ok(MetricField { dim, upper, signature })
    }

    /// Euclidean identity metric.
    pub fn euclidean(chart: &Chart) -> Self {
        let dim = chart.dim();
        let mut upper = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                upper.push(Expr::Number(if i == j { 1.0 } else { 0.0 }));
            }
        }
        MetricField { dim, upper, signature: (dim, 0) }
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.upper[tri_index(self.dim, i, j)]
    }

    fn eval(&self, point: &[f64]) -> Result<Vec<Vec<Jet3>>, FieldError> {
        let n = self.dim;
        let mut g = vec![vec![Jet3::zero(n); n]; n];
        for i in 0..n {
            for j in i..n {
                let jet = eval_in(self.entry(i, j), point, || format!("metric component g[{i}][{j}]"))?;
                g[j][i] = jet.clone();
                g[i][j] = jet;
            }
        }
        Ok(g)
    }
}

// ---------------------------------------------------------------------------
// Three-form flux
// ---------------------------------------------------------------------------

/// Totally antisymmetric 3-form: expressions stored for `i < j < k`.
#[derive(Debug, Clone)]
pub struct ThreeFormField {
    dim: usize,
    entries: Vec<((usize, usize, usize), Expr)>,
}

impl ThreeFormField {
    pub fn new(chart: &Chart, components: &[((usize, usize, usize), &str)]) -> Result<Self, FieldError> {
        let dim = chart.dim();
        let mut entries = Vec::new();
        for &((i, j, k), text) in components {
            if !(i < j && j < k && k < dim) {
                return Err(FieldError::Validation(format!(
                    "three-form indices ({i},{j},{k}) must be strictly increasing and < {dim}"
                )));
            }
            if entries.iter().any(|((a, b, c), _)| (*a, *b, *c) == (i, j, k)) {
                return Err(FieldError::Validation(format!(
                    "duplicate three-form component ({i},{j},{k})"
                )));
            }
            let e = parse_in(text, chart, || format!("three-form component H[{i},{j},{k}]"))?;
            entries.push(((i, j, k), e));
        }
        Ok(ThreeFormField { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        ThreeFormField { dim, entries: Vec::new() }
    }

    pub fn components(&self) -> &[((usize, usize, usize), Expr)] {
        &self.entries
    }

    /// Full antisymmetric fill as jets: `h[i][j][k]` for all index orders.
    fn eval(&self, point: &[f64]) -> Result<Vec<Vec<Vec<Jet3>>>, FieldError> {
        let n = self.dim;
        let mut h = vec![vec![vec![Jet3::zero(n); n]; n]; n];
        for ((i, j, k), e) in &self.entries {
            let jet = eval_in(e, point, || format!("three-form component H[{i},{j},{k}]"))?;
            // All six permutations of a strictly increasing triple.
            for (perm, sign) in [
                ([*i, *j, *k], 1.0),
                ([*j, *k, *i], 1.0),
                ([*k, *i, *j], 1.0),
                ([*j, *i, *k], -1.0),
                ([*i, *k, *j], -1.0),
                ([*k, *j, *i], -1.0),
            ] {
                h[perm[0]][perm[1]][perm[2]] = jet.scale(sign);
            }
        }
        Ok(h)
    }
}

// ---------------------------------------------------------------------------
// Divergence data (vector + 1-form pair)
// ---------------------------------------------------------------------------

/// The divergence-twisting pair: a vector field `X^i` and a 1-form `xi_i`.
#[derive(Debug, Clone)]
pub struct DilatonField {
    dim: usize,
    x_vec: Vec<Expr>,
    xi: Vec<Expr>,
}

impl DilatonField {
    pub fn new(chart: &Chart, x_vec: &[&str], xi: &[&str]) -> Result<Self, FieldError> {
        let dim = chart.dim();
        if x_vec.len() != dim || xi.len() != dim {
            return Err(FieldError::Validation(format!(
                "divergence data must have {dim} vector and {dim} covector components"
            )));
        }
        let xs = x_vec
            .iter()
            .enumerate()
            .map(|(i, t)| parse_in(t, chart, || format!("vector component X[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let xis = xi
            .iter()
            .enumerate()
            .map(|(i, t)| parse_in(t, chart, || format!("one-form component xi[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DilatonField { dim, x_vec: xs, xi: xis })
    }

    pub fn zero(dim: usize) -> Self {
        DilatonField {
            dim,
            x_vec: vec![Expr::Number(0.0); dim],
            xi: vec![Expr::Number(0.0); dim],
        }
    }

    fn eval(&self, point: &[f64]) -> Result<(Vec<Jet3>, Vec<Jet3>), FieldError> {
        let xs = self
            .x_vec
            .iter()
            .enumerate()
            .map(|(i, e)| eval_in(e, point, || format!("vector component X[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let xis = self
            .xi
            .iter()
            .enumerate()
            .map(|(i, e)| eval_in(e, point, || format!("one-form component xi[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((xs, xis))
    }
}

// ---------------------------------------------------------------------------
// Ambient structure and jet evaluation
// ---------------------------------------------------------------------------

/// Chart + metric + 3-form + divergence pair: everything a scenario needs to
/// evaluate curvature at a point.
#[derive(Debug, Clone)]
pub struct AmbientStructure {
    pub chart: Chart,
    pub metric: MetricField,
    pub h_field: ThreeFormField,
    pub dilaton: DilatonField,
}

impl AmbientStructure {
    pub fn new(
        chart: Chart,
        metric: MetricField,
        h_field: ThreeFormField,
        dilaton: DilatonField,
    ) -> Result<Self, FieldError> {
        let dim = chart.dim();
        if metric.dim != dim || h_field.dim != dim || dilaton.dim != dim {
            return Err(FieldError::Validation(
                "metric, three-form and divergence data must share the chart dimension".into(),
            ));
        }
        Ok(AmbientStructure { chart, metric, h_field, dilaton })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Evaluate every field of the structure as order-3 jets at `point`,
    /// verifying non-degeneracy and the declared metric signature.
    pub fn jets_at(&self, point: &[f64]) -> Result<StructureJets, FieldError> {
        self.chart.check_point(point)?;
        let n = self.dim();
        let g = self.metric.eval(point)?;

        let gv = nalgebra::DMatrix::from_fn(n, n, |i, j| g[i][j].value());
        let det = gv.clone().determinant();
        if det.abs() <= 1e-12 {
            return Err(FieldError::DegenerateMetric { point: point.to_vec(), det });
        }
        let eig = nalgebra::SymmetricEigen::new(gv);
        let mut got_p = 0;
        let mut got_q = 0;
        for &lambda in eig.eigenvalues.iter() {
            if lambda > 1e-10 {
                got_p += 1;
            } else if lambda < -1e-10 {
                got_q += 1;
            } else {
                return Err(FieldError::DegenerateMetric { point: point.to_vec(), det });
            }
        }
        let (want_p, want_q) = self.metric.signature;
        if (got_p, got_q) != (want_p, want_q) {
            return Err(FieldError::SignatureMismatch {
                point: point.to_vec(),
                got_p,
                got_q,
                want_p,
                want_q,
            });
        }

        let g_inv = jet_matrix_inverse(&g).ok_or_else(|| FieldError::DegenerateMetric {
            point: point.to_vec(),
            det,
        })?;
        let h = self.h_field.eval(point)?;
        let (x_vec, xi) = self.dilaton.eval(point)?;

        // e_pm = X +- g^{-1} xi, the two band projections of the divergence
        // generator (each stored with a factor-2 normalisation removed).
        let mut e_plus = Vec::with_capacity(n);
        let mut e_minus = Vec::with_capacity(n);
        for i in 0..n {
            let mut raised = Jet3::zero(n);
            for j in 0..n {
                raised = raised + &g_inv[i][j] * &xi[j];
            }
            e_plus.push(&x_vec[i] + &raised);
            e_minus.push(&x_vec[i] - &raised);
        }

        Ok(StructureJets {
            dim: n,
            point: point.to_vec(),
            g,
            g_inv,
            h,
            x_vec,
            xi,
            e_plus,
            e_minus,
            signature: (got_p, got_q),
        })
    }

    pub fn metric_at(&self, point: &[f64]) -> Result<MetricEval, FieldError> {
        Ok(self.jets_at(point)?.metric_eval())
    }

    pub fn h_contractions(&self, point: &[f64]) -> Result<HContractions, FieldError> {
        Ok(self.jets_at(point)?.h_contractions())
    }

    pub fn dilaton_split(&self, point: &[f64]) -> Result<DilatonSplit, FieldError> {
        Ok(self.jets_at(point)?.dilaton_split())
    }
}

/// All structure fields evaluated as order-3 jets at one point.
#[derive(Debug, Clone)]
pub struct StructureJets {
    pub dim: usize,
    pub point: Vec<f64>,
    pub g: Vec<Vec<Jet3>>,
    pub g_inv: Vec<Vec<Jet3>>,
    pub h: Vec<Vec<Vec<Jet3>>>,
    pub x_vec: Vec<Jet3>,
    pub xi: Vec<Jet3>,
    /// pi(e_+) = X + g^{-1} xi as a vector field jet.
    pub e_plus: Vec<Jet3>,
    /// pi(e_-) = X - g^{-1} xi.
    pub e_minus: Vec<Jet3>,
    pub signature: (usize, usize),
}

/// Pointwise metric data: values, inverse, and first/second coordinate
/// derivatives (derivative indices first).
#[derive(Debug, Clone)]
pub struct MetricEval {
    pub g: Tensor<f64>,
    pub g_inv: Tensor<f64>,
    /// `dg[k][i][j] = d_k g_{ij}`
    pub dg: Tensor<f64>,
    /// `d2g[k][l][i][j] = d_k d_l g_{ij}`
    pub d2g: Tensor<f64>,
}

/// Pointwise contractions of the 3-form against the metric.
#[derive(Debug, Clone)]
pub struct HContractions {
    /// `H_{ijk}`
    pub h: Tensor<f64>,
    /// Exterior derivative `(dH)_{lijk}`; vanishes for admissible fluxes.
    pub dh: Tensor<f64>,
    /// Full contraction `|H|^2 = H_{ijk} H_{abc} g^{ia} g^{jb} g^{kc}`.
    pub h_norm2: f64,
    /// `H^2_{ij} = g^{ab} g^{cd} H_{iac} H_{jbd}`.
    pub h_sq: Tensor<f64>,
    /// `H2[x][y][v][w] = H_{xya} H_{vwb} g^{ab}`.
    pub h2: Tensor<f64>,
}

/// Pointwise band split of the divergence pair.
#[derive(Debug, Clone)]
pub struct DilatonSplit {
    pub x_vec: Vec<f64>,
    pub xi: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    /// `g(pi e_+, pi e_+)`
    pub e_plus_norm2: f64,
    /// `g(pi e_-, pi e_-)`
    pub e_minus_norm2: f64,
    /// Generalised-metric norm of the full generator `e = 2(X + xi)`:
    /// `|e|^2 = 2 (g(X,X) + g^{-1}(xi,xi)) = |pi e_+|^2 + |pi e_-|^2`.
    pub e_total_norm2: f64,
}

impl StructureJets {
    pub fn g_vals(&self) -> Tensor<f64> {
        let n = self.dim;
        let mut t = Tensor::square(n, 2, Variance::Down).with_symmetry(Symmetry::Symmetric(0, 1));
        for i in 0..n {
            for j in i..n {
                t.set(&[i, j], self.g[i][j].value());
            }
        }
        t
    }

    pub fn g_inv_vals(&self) -> Tensor<f64> {
        let n = self.dim;
        let mut t = Tensor::square(n, 2, Variance::Up).with_symmetry(Symmetry::Symmetric(0, 1));
        for i in 0..n {
            for j in i..n {
                t.set(&[i, j], self.g_inv[i][j].value());
            }
        }
        t
    }

    pub fn metric_eval(&self) -> MetricEval {
        let n = self.dim;
        let mut dg = Tensor::square(n, 3, Variance::Down);
        let mut d2g = Tensor::square(n, 4, Variance::Down);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    dg.set(&[k, i, j], self.g[i][j].partial(k));
                    for l in 0..n {
                        d2g.set(&[k, l, i, j], self.g[i][j].partial2(k, l));
                    }
                }
            }
        }
        MetricEval { g: self.g_vals(), g_inv: self.g_inv_vals(), dg, d2g }
    }

    pub fn h_contractions(&self) -> HContractions {
        let n = self.dim;
        let gi = &self.g_inv;
        let mut h = Tensor::square(n, 3, Variance::Down);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    h.set(&[i, j, k], self.h[i][j][k].value());
                }
            }
        }

        // (dH)_{l i j k}: alternating sum of first partials.
        let mut dh = Tensor::square(n, 4, Variance::Down);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = self.h[i][j][k].partial(l) - self.h[l][j][k].partial(i)
                            + self.h[l][i][k].partial(j)
                            - self.h[l][i][j].partial(k);
                        dh.set(&[l, i, j, k], v);
                    }
                }
            }
        }

        let hv = |i: usize, j: usize, k: usize| self.h[i][j][k].value();
        let giv = |i: usize, j: usize| gi[i][j].value();

        let mut h_norm2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            for c in 0..n {
                                h_norm2 += hv(i, j, k) * hv(a, b, c) * giv(i, a) * giv(j, b) * giv(k, c);
                            }
                        }
                    }
                }
            }
        }

        let mut h_sq = Tensor::square(n, 2, Variance::Down).with_symmetry(Symmetry::Symmetric(0, 1));
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                s += giv(a, b) * giv(c, d) * hv(i, a, c) * hv(j, b, d);
                            }
                        }
                    }
                }
                h_sq.set(&[i, j], s);
            }
        }

        let mut h2 = Tensor::square(n, 4, Variance::Down);
        for x in 0..n {
            for y in 0..n {
                for v in 0..n {
                    for w in 0..n {
                        let mut s = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                s += hv(x, y, a) * hv(v, w, b) * giv(a, b);
                            }
                        }
                        h2.set(&[x, y, v, w], s);
                    }
                }
            }
        }

        HContractions { h, dh, h_norm2, h_sq, h2 }
    }

    pub fn dilaton_split(&self) -> DilatonSplit {
        let n = self.dim;
        let gv = |i: usize, j: usize| self.g[i][j].value();
        let giv = |i: usize, j: usize| self.g_inv[i][j].value();
        let xs: Vec<f64> = self.x_vec.iter().map(|j| j.value()).collect();
        let xis: Vec<f64> = self.xi.iter().map(|j| j.value()).collect();
        let ep: Vec<f64> = self.e_plus.iter().map(|j| j.value()).collect();
        let em: Vec<f64> = self.e_minus.iter().map(|j| j.value()).collect();

        let quad = |v: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += gv(i, j) * v[i] * v[j];
                }
            }
            s
        };
        let mut xi_inv2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                xi_inv2 += giv(i, j) * xis[i] * xis[j];
            }
        }

        DilatonSplit {
            e_plus_norm2: quad(&ep),
            e_minus_norm2: quad(&em),
            e_total_norm2: 2.0 * (quad(&xs) + xi_inv2),
            x_vec: xs,
            xi: xis,
            e_plus: ep,
            e_minus: em,
        }
    }
}

/// Gauss-Jordan inverse over the jet ring with value-magnitude pivoting.
/// Returns `None` when a pivot value vanishes.
pub fn jet_matrix_inverse(a: &[Vec<Jet3>]) -> Option<Vec<Vec<Jet3>>> {
    let n = a.len();
    let dim = a[0][0].dim();
    let mut m: Vec<Vec<Jet3>> = a.to_vec();
    let mut inv: Vec<Vec<Jet3>> = (0..n)
        .map(|i| (0..n).map(|j| Jet3::constant(dim, if i == j { 1.0 } else { 0.0 })).collect())
        .collect();

    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            m[r][col].value().abs().partial_cmp(&m[s][col].value().abs()).unwrap()
        })?;
        if m[pivot][col].value().abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);

        let p = m[col][col].clone();
        for j in 0..n {
            m[col][j] = &m[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            if f.value() == 0.0 && f.is_constant() {
                continue;
            }
            for j in 0..n {
                m[r][j] = &m[r][j] - &(&f * &m[col][j]);
                inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
            }
        }
    }
    Some(inv)
}
