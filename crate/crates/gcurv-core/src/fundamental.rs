//! Abstract hypersurface data and the constructive converse: checking the
//! flat Gauss-Codazzi system for data that is not known to come from an
//! embedding, and rebuilding a Euclidean immersion from classical `(h, k)`
//! data by integrating the flat synthetic connection.
//!
//! The data bundle mirrors what an embedded hypersurface induces — first
//! fundamental form, second fundamental form, tangential and normal flux
//! parts, tangential generator pair and its two normal pairings — but every
//! field is free input. [`flat_gc_residual`] feeds it through the same
//! identity assembly the embedded path uses, with all ambient curvature
//! contractions set to zero. [`reconstruct_immersion`] realises
//! flat-compatible classical data on a 2-chart as a surface in `R^3`: the
//! synthetic connection on `T Sigma (+) nu` is flat exactly when the Gauss
//! and Codazzi equations hold, so its parallel frame carries the coordinate
//! tangents to an integrable `R^3`-valued 1-form whose primitive is the
//! immersion.

use crate::classical::{christoffels, covariant_derivative, curvature, JetTensor};
use crate::expr::{self, Expr};
use crate::fields::{AmbientStructure, Chart, DilatonField, FieldError, MetricField, StructureJets, ThreeFormField};
use crate::gen_curvature::canonical_chi_scale;
use crate::hypersurface::{
    codazzi_residuals_for, gauss_residuals_for, second_form_from_parts, SecondFormJets,
};
use crate::jet::Jet3;
use crate::scenario::ResidualReport;
use crate::tensor::Variance;

fn parse_component(
    text: &str,
    chart: &Chart,
    context: impl Fn() -> String,
) -> Result<Expr, FieldError> {
    expr::parse(text, &chart.coords)
        .map_err(|source| FieldError::Parse { context: context(), source })
}

fn eval_component(e: &Expr, point: &[f64], context: impl Fn() -> String) -> Result<Jet3, FieldError> {
    expr::eval_jet(e, point).map_err(|source| FieldError::Eval { context: context(), source })
}

/// Hypersurface data as free input: everything a codimension-one embedding
/// would induce, with no embedding attached.
#[derive(Debug, Clone)]
pub struct HypersurfaceData {
    /// Tangential structure: first fundamental form, tangential flux and
    /// tangential generator pair, bundled over the hypersurface chart.
    sigma: AmbientStructure,
    /// Second fundamental form entries, symmetric.
    k: Vec<Vec<Expr>>,
    /// Normal flux contraction `H(n, ., .)`, antisymmetric, stored `i < j`.
    h_perp: Vec<((usize, usize), Expr)>,
    /// Normal generator pairings `<e, n_+>` and `<e, n_->`.
    e_perp_plus: Expr,
    e_perp_minus: Expr,
}

impl HypersurfaceData {
    /// Bundle the full data set. The tangential metric must be Riemannian
    /// (the reconstruction theorem is about Riemannian immersions) and `k`
    /// structurally symmetric.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        chart: Chart,
        h: MetricField,
        k_rows: &[Vec<&str>],
        h_sigma: ThreeFormField,
        h_perp: &[((usize, usize), &str)],
        e_sigma: DilatonField,
        e_perp_plus: &str,
        e_perp_minus: &str,
    ) -> Result<Self, FieldError> {
        let n = chart.dim();
        if h.signature != (n, 0) {
            return Err(FieldError::Validation(format!(
                "hypersurface data requires a Riemannian tangential metric, got signature ({},{})",
                h.signature.0, h.signature.1
            )));
        }
        if k_rows.len() != n || k_rows.iter().any(|r| r.len() != n) {
            return Err(FieldError::Validation(format!(
                "second fundamental form must be {n}x{n}"
            )));
        }
        let mut k = vec![vec![Expr::Number(0.0); n]; n];
        for i in 0..n {
            for j in i..n {
                let e = parse_component(k_rows[i][j], &chart, || format!("second form k[{i}][{j}]"))?;
                if i != j {
                    let mirror =
                        parse_component(k_rows[j][i], &chart, || format!("second form k[{j}][{i}]"))?;
                    if mirror != e {
                        return Err(FieldError::Validation(format!(
                            "second form components k[{i}][{j}] and k[{j}][{i}] differ"
                        )));
                    }
                }
                k[j][i] = e.clone();
                k[i][j] = e;
            }
        }
        let mut hp = Vec::new();
        for &((i, j), text) in h_perp {
            if !(i < j && j < n) {
                return Err(FieldError::Validation(format!(
                    "normal flux indices ({i},{j}) must be strictly increasing and < {n}"
                )));
            }
            if hp.iter().any(|((a, b), _)| (*a, *b) == (i, j)) {
                return Err(FieldError::Validation(format!(
                    "duplicate normal flux component ({i},{j})"
                )));
            }
            let e = parse_component(text, &chart, || format!("normal flux component H_perp[{i},{j}]"))?;
            hp.push(((i, j), e));
        }
        let ep = parse_component(e_perp_plus, &chart, || "normal pairing <e, n+>".to_string())?;
        let em = parse_component(e_perp_minus, &chart, || "normal pairing <e, n->".to_string())?;
        let sigma = AmbientStructure::new(chart, h, h_sigma, e_sigma)?;
        Ok(HypersurfaceData { sigma, k, h_perp: hp, e_perp_plus: ep, e_perp_minus: em })
    }

    /// Classical data: just `(h, k)`, all flux and generator fields zero.
    pub fn classical(chart: Chart, h: MetricField, k_rows: &[Vec<&str>]) -> Result<Self, FieldError> {
        let n = chart.dim();
        HypersurfaceData::new(
            chart,
            h,
            k_rows,
            ThreeFormField::zero(n),
            &[],
            DilatonField::zero(n),
            "0",
            "0",
        )
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn chart(&self) -> &Chart {
        &self.sigma.chart
    }

    fn k_jets(&self, point: &[f64]) -> Result<Vec<Vec<Jet3>>, FieldError> {
        let n = self.dim();
        let mut k = vec![vec![Jet3::zero(n); n]; n];
        for i in 0..n {
            for j in i..n {
                let jet =
                    eval_component(&self.k[i][j], point, || format!("second form k[{i}][{j}]"))?;
                k[j][i] = jet.clone();
                k[i][j] = jet;
            }
        }
        Ok(k)
    }

    /// Evaluate the bundle at one point: induced-structure jets plus the
    /// exterior curvature blocks, exactly as an embedding would provide them
    /// (with normal square `eps = +1` and a flat `d = n + 1` ambient).
    pub fn jets_at(&self, point: &[f64]) -> Result<(StructureJets, SecondFormJets), FieldError> {
        let sigma = self.sigma.jets_at(point)?;
        let n = sigma.dim;
        let k = self.k_jets(point)?;
        let mut hp = vec![vec![Jet3::zero(n); n]; n];
        for ((i, j), e) in &self.h_perp {
            let jet =
                eval_component(e, point, || format!("normal flux component H_perp[{i},{j}]"))?;
            hp[*i][*j] = jet.clone();
            hp[*j][*i] = jet.scale(-1.0);
        }
        let ep = eval_component(&self.e_perp_plus, point, || "normal pairing <e, n+>".to_string())?;
        let em = eval_component(&self.e_perp_minus, point, || "normal pairing <e, n->".to_string())?;
        let sf = second_form_from_parts(&sigma, &k, &hp, &ep, &em, 1.0, canonical_chi_scale(n + 1));
        Ok((sigma, sf))
    }
}

/// Evaluate every Gauss and Codazzi identity for the data against a flat
/// ambient: all ambient curvature contractions are zero, so the tangential
/// curvature and block terms must balance on their own.
pub fn flat_gc_residual(
    data: &HypersurfaceData,
    point: &[f64],
    tol: f64,
) -> Result<ResidualReport, FieldError> {
    let (sigma, sf) = data.jets_at(point)?;
    let chi = canonical_chi_scale(sigma.dim + 1);
    let gauss = gauss_residuals_for(&sigma, &sf, 1.0, chi, None);
    let codazzi = codazzi_residuals_for(&sigma, &sf, 1.0, chi, None);

    let mut rep = ResidualReport::new(&data.chart().name, "flat_gauss_codazzi", point);
    rep.push("gauss_pure_plus", gauss.pure_plus, tol);
    rep.push("gauss_pure_minus", gauss.pure_minus, tol);
    rep.push("gauss_mixed_plus", gauss.mixed_plus, tol);
    rep.push("gauss_mixed_minus", gauss.mixed_minus, tol);
    rep.push("codazzi_mixed_plus", codazzi.mixed_plus, tol);
    rep.push("codazzi_mixed_minus", codazzi.mixed_minus, tol);
    rep.push("codazzi_pure_plus", codazzi.pure_plus, tol);
    rep.push("codazzi_pure_minus", codazzi.pure_minus, tol);
    rep.push("codazzi_normal_plus", codazzi.normal_plus, tol);
    rep.push("codazzi_normal_minus", codazzi.normal_minus, tol);
    rep.push("codazzi_cross_plus", codazzi.cross_plus, tol);
    rep.push("codazzi_cross_minus", codazzi.cross_minus, tol);
    Ok(rep)
}

/// The classical flat Gauss and Codazzi residuals of the `(h, k)` part:
/// `max |Rm_h(a,b,v,w) - (k(a,v) k(b,w) - k(a,w) k(b,v))|` and
/// `max |(nabla_a k)(b,.) - (nabla_b k)(a,.)|`.
pub fn classical_flat_gc_residual(
    data: &HypersurfaceData,
    point: &[f64],
) -> Result<(f64, f64), FieldError> {
    let sigma = data.sigma.jets_at(point)?;
    let n = sigma.dim;
    let chr = christoffels(&sigma);
    let rm = curvature(&sigma, &chr).rm;
    let k = data.k_jets(point)?;

    let mut gauss = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let quad = k[a][v].value() * k[b][w].value() - k[a][w].value() * k[b][v].value();
                    gauss = gauss.max((rm.get(&[a, b, v, w]) - quad).abs());
                }
            }
        }
    }

    let mut kt = JetTensor::zeros(n, n, vec![Variance::Down; 2]);
    for a in 0..n {
        for b in 0..n {
            kt.set(&[a, b], k[a][b].clone());
        }
    }
    let dk = covariant_derivative(&chr.lc, &kt).values();
    let mut codazzi = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                codazzi = codazzi.max((dk.get(&[a, b, c]) - dk.get(&[b, a, c])).abs());
            }
        }
    }
    Ok((gauss, codazzi))
}

// ---------------------------------------------------------------------------
// Immersion reconstruction
// ---------------------------------------------------------------------------

/// Rectangular grid in a 2-dimensional chart: closed coordinate ranges and
/// the number of grid points per axis (so `points - 1` integration steps).
#[derive(Debug, Clone, serde::Serialize)]
pub struct GridSpec {
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub points: (usize, usize),
}

impl GridSpec {
    pub fn new(u_range: (f64, f64), v_range: (f64, f64), points: (usize, usize)) -> Self {
        GridSpec { u_range, v_range, points }
    }

    fn node(&self, iu: usize, iv: usize) -> [f64; 2] {
        let fu = iu as f64 / (self.points.0 - 1) as f64;
        let fv = iv as f64 / (self.points.1 - 1) as f64;
        [
            self.u_range.0 + fu * (self.u_range.1 - self.u_range.0),
            self.v_range.0 + fv * (self.v_range.1 - self.v_range.0),
        ]
    }

    fn steps(&self) -> (f64, f64) {
        (
            (self.u_range.1 - self.u_range.0) / (self.points.0 - 1) as f64,
            (self.v_range.1 - self.v_range.0) / (self.points.1 - 1) as f64,
        )
    }
}

/// One grid node of the integrated frame: `frame[mu][i]` is the `mu`-th
/// component (tangential 0/1, normal 2) of the `i`-th parallel frame field,
/// `position` the immersion value.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FrameNode {
    pub base: [f64; 2],
    pub frame: [[f64; 3]; 3],
    pub position: [f64; 3],
}

impl FrameNode {
    /// Image of the synthetic normal under the frame isomorphism: the unit
    /// normal of the reconstructed surface.
    pub fn normal(&self) -> [f64; 3] {
        self.frame[2]
    }
}

/// Parallel frame and immersion values over a rectangular grid,
/// `nodes[iu][iv]` with the first axis along `u`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SyntheticFrame {
    pub grid: GridSpec,
    pub nodes: Vec<Vec<FrameNode>>,
}

/// Integration quality measures for a reconstruction.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReconstructionDiagnostics {
    /// Largest classical flat Gauss/Codazzi residual over the grid.
    pub data_residual: f64,
    /// Max discrepancy (frame entries and positions) between integrating
    /// rows-then-columns and columns-then-rows.
    pub path_residual: f64,
    /// Max over interior nodes of `|<dF, dF> - h|`, with `dF` from central
    /// differences of the integrated positions.
    pub metric_residual: f64,
}

/// Connection data for the frame ODE at one point: metric values and the
/// two transport matrices `m[c]`, where `d_c E = -m[c] E` for a parallel
/// section `E = (Y, f)` of `T Sigma (+) nu`.
struct ConnEval {
    h: [[f64; 2]; 2],
    m: [[[f64; 3]; 3]; 2],
}

fn conn_at(data: &HypersurfaceData, point: &[f64]) -> Result<ConnEval, FieldError> {
    let sigma = data.sigma.jets_at(point)?;
    let chr = christoffels(&sigma);
    let k = data.k_jets(point)?;

    let mut h = [[0.0; 2]; 2];
    let mut a_op = [[0.0; 2]; 2]; // a_op[a][c] = h^{ab} k_{bc}
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = sigma.g[i][j].value();
            for b in 0..2 {
                a_op[i][j] += sigma.g_inv[i][b].value() * k[b][j].value();
            }
        }
    }
    // The synthetic rule: nabla_c Y = nabla^Sigma_c Y - k(c, Y) n and
    // nabla_c n = A d_c, written as one matrix on (Y^0, Y^1, f).
    let mut m = [[[0.0; 3]; 3]; 2];
    for c in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                m[c][a][b] = chr.lc[a][c][b].value();
            }
            m[c][a][2] = a_op[a][c];
            m[c][2][a] = -k[c][a].value();
        }
    }
    Ok(ConnEval { h, m })
}

type FrameState = ([[f64; 3]; 3], [f64; 3]);

fn state_deriv(conn: &ConnEval, axis: usize, state: &FrameState) -> FrameState {
    let (w, _) = state;
    let mut dw = [[0.0; 3]; 3];
    for mu in 0..3 {
        for i in 0..3 {
            for nu in 0..3 {
                dw[mu][i] -= conn.m[axis][mu][nu] * w[nu][i];
            }
        }
    }
    let mut df = [0.0; 3];
    for i in 0..3 {
        for b in 0..2 {
            df[i] += conn.h[axis][b] * w[b][i];
        }
    }
    (dw, df)
}

fn state_axpy(state: &FrameState, scale: f64, delta: &FrameState) -> FrameState {
    let mut out = *state;
    for mu in 0..3 {
        for i in 0..3 {
            out.0[mu][i] += scale * delta.0[mu][i];
        }
    }
    for i in 0..3 {
        out.1[i] += scale * delta.1[i];
    }
    out
}

/// One classical RK4 step of the joint (frame, position) system along a
/// coordinate axis.
fn rk4_step(
    data: &HypersurfaceData,
    from: [f64; 2],
    axis: usize,
    step: f64,
    state: &FrameState,
) -> Result<FrameState, FieldError> {
    let mut mid = from;
    mid[axis] += step / 2.0;
    let mut to = from;
    to[axis] += step;

    let c0 = conn_at(data, &from)?;
    let cm = conn_at(data, &mid)?;
    let c1 = conn_at(data, &to)?;

    let k1 = state_deriv(&c0, axis, state);
    let k2 = state_deriv(&cm, axis, &state_axpy(state, step / 2.0, &k1));
    let k3 = state_deriv(&cm, axis, &state_axpy(state, step / 2.0, &k2));
    let k4 = state_deriv(&c1, axis, &state_axpy(state, step, &k3));

    let mut out = *state;
    for (scale, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
        out = state_axpy(&out, scale * step / 6.0, k);
    }
    Ok(out)
}

/// Gram-Schmidt the coordinate frame plus normal at the grid corner with
/// respect to `h (+) 1`.
fn seed_frame(data: &HypersurfaceData, point: &[f64]) -> Result<FrameState, FieldError> {
    let conn = conn_at(data, point)?;
    let h = conn.h;
    let inner = |u: &[f64; 3], v: &[f64; 3]| {
        let mut s = u[2] * v[2];
        for a in 0..2 {
            for b in 0..2 {
                s += h[a][b] * u[a] * v[b];
            }
        }
        s
    };
    let mut cols = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0f64]];
    for i in 0..3 {
        for j in 0..i {
            let proj = inner(&cols[i].clone(), &cols[j]);
            for mu in 0..3 {
                cols[i][mu] -= proj * cols[j][mu];
            }
        }
        let norm = inner(&cols[i].clone(), &cols[i].clone()).sqrt();
        for mu in 0..3 {
            cols[i][mu] /= norm;
        }
    }
    // Store as frame[mu][i]: component mu of frame field i.
    let mut w = [[0.0; 3]; 3];
    for i in 0..3 {
        for mu in 0..3 {
            w[mu][i] = cols[i][mu];
        }
    }
    Ok((w, [0.0; 3]))
}

/// Integrate the full grid, first along `first_axis` from the corner, then
/// along the other axis from every node of that seed line.
fn integrate_grid(
    data: &HypersurfaceData,
    grid: &GridSpec,
    first_axis: usize,
) -> Result<Vec<Vec<FrameState>>, FieldError> {
    let (nu, nv) = grid.points;
    let (du, dv) = grid.steps();
    let mut states = vec![vec![None; nv]; nu];
    states[0][0] = Some(seed_frame(data, &grid.node(0, 0))?);

    let (seed_len, seed_step) = if first_axis == 0 { (nu, du) } else { (nv, dv) };
    for s in 1..seed_len {
        let (prev, cur) = if first_axis == 0 {
            ((s - 1, 0), (s, 0))
        } else {
            ((0, s - 1), (0, s))
        };
        let from = grid.node(prev.0, prev.1);
        let state = states[prev.0][prev.1].as_ref().unwrap();
        states[cur.0][cur.1] = Some(rk4_step(data, from, first_axis, seed_step, state)?);
    }

    let second_axis = 1 - first_axis;
    let (line_count, line_len, line_step) =
        if first_axis == 0 { (nu, nv, dv) } else { (nv, nu, du) };
    for l in 0..line_count {
        for s in 1..line_len {
            let (prev, cur) = if first_axis == 0 {
                ((l, s - 1), (l, s))
            } else {
                ((s - 1, l), (s, l))
            };
            let from = grid.node(prev.0, prev.1);
            let state = states[prev.0][prev.1].as_ref().unwrap();
            states[cur.0][cur.1] = Some(rk4_step(data, from, second_axis, line_step, state)?);
        }
    }
    Ok(states.into_iter().map(|row| row.into_iter().map(Option::unwrap).collect()).collect())
}

/// Reconstruct a Euclidean immersion of flat-compatible classical data over
/// a rectangular grid by parallel-frame integration, with path-dependence
/// and metric diagnostics.
pub fn reconstruct_immersion(
    data: &HypersurfaceData,
    grid: &GridSpec,
) -> Result<(SyntheticFrame, ReconstructionDiagnostics), FieldError> {
    if data.dim() != 2 {
        return Err(FieldError::Validation(format!(
            "immersion reconstruction works on 2-dimensional charts, got dimension {}",
            data.dim()
        )));
    }
    if grid.points.0 < 2 || grid.points.1 < 2 {
        return Err(FieldError::Validation("grid needs at least 2 points per axis".into()));
    }
    if !(grid.u_range.0 < grid.u_range.1) || !(grid.v_range.0 < grid.v_range.1) {
        return Err(FieldError::Validation("grid ranges must be non-empty intervals".into()));
    }

    let (nu, nv) = grid.points;
    let mut data_residual = 0.0f64;
    for iu in 0..nu {
        for iv in 0..nv {
            let p = grid.node(iu, iv);
            let (gauss, codazzi) = classical_flat_gc_residual(data, &p)?;
            let worst = gauss.max(codazzi);
            if worst > 1e-6 {
                return Err(FieldError::Validation(format!(
                    "data not flat-compatible: classical Gauss/Codazzi residual {worst:.3e} at {p:?}"
                )));
            }
            data_residual = data_residual.max(worst);
        }
    }

    let rows_first = integrate_grid(data, grid, 0)?;
    let cols_first = integrate_grid(data, grid, 1)?;

    let mut path_residual = 0.0f64;
    for iu in 0..nu {
        for iv in 0..nv {
            let (wa, fa) = &rows_first[iu][iv];
            let (wb, fb) = &cols_first[iu][iv];
            for mu in 0..3 {
                for i in 0..3 {
                    path_residual = path_residual.max((wa[mu][i] - wb[mu][i]).abs());
                }
                path_residual = path_residual.max((fa[mu] - fb[mu]).abs());
            }
        }
    }

    let nodes: Vec<Vec<FrameNode>> = rows_first
        .into_iter()
        .enumerate()
        .map(|(iu, row)| {
            row.into_iter()
                .enumerate()
                .map(|(iv, (frame, position))| FrameNode {
                    base: grid.node(iu, iv),
                    frame,
                    position,
                })
                .collect()
        })
        .collect();

    let (du, dv) = grid.steps();
    let mut metric_residual = 0.0f64;
    for iu in 1..nu - 1 {
        for iv in 1..nv - 1 {
            let tu = central_difference(&nodes, iu, iv, 0, du);
            let tv = central_difference(&nodes, iu, iv, 1, dv);
            let conn = conn_at(data, &nodes[iu][iv].base)?;
            let dots = [
                (dot3(&tu, &tu), conn.h[0][0]),
                (dot3(&tu, &tv), conn.h[0][1]),
                (dot3(&tv, &tv), conn.h[1][1]),
            ];
            for (got, want) in dots {
                metric_residual = metric_residual.max((got - want).abs());
            }
        }
    }

    Ok((
        SyntheticFrame { grid: grid.clone(), nodes },
        ReconstructionDiagnostics { data_residual, path_residual, metric_residual },
    ))
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn central_difference(
    nodes: &[Vec<FrameNode>],
    iu: usize,
    iv: usize,
    axis: usize,
    step: f64,
) -> [f64; 3] {
    let (plus, minus) = if axis == 0 {
        (&nodes[iu + 1][iv].position, &nodes[iu - 1][iv].position)
    } else {
        (&nodes[iu][iv + 1].position, &nodes[iu][iv - 1].position)
    };
    let mut d = [0.0; 3];
    for i in 0..3 {
        d[i] = (plus[i] - minus[i]) / (2.0 * step);
    }
    d
}

/// Fourth-order central difference of a grid field of `R^3` values.
fn fd4(values: &dyn Fn(usize, usize) -> [f64; 3], iu: usize, iv: usize, axis: usize, step: f64) -> [f64; 3] {
    let at = |off: i64| {
        if axis == 0 {
            values((iu as i64 + off) as usize, iv)
        } else {
            values(iu, (iv as i64 + off) as usize)
        }
    };
    let (m2, m1, p1, p2) = (at(-2), at(-1), at(1), at(2));
    let mut d = [0.0; 3];
    for i in 0..3 {
        d[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * step);
    }
    d
}

/// Recover the second fundamental form from the reconstructed mesh (normals
/// and positions differentiated by fourth-order finite differences) and
/// report the max deviation from the input `k` over the interior nodes.
pub fn recovered_k_residual(
    data: &HypersurfaceData,
    frame: &SyntheticFrame,
) -> Result<f64, FieldError> {
    let (nu, nv) = frame.grid.points;
    if nu < 5 || nv < 5 {
        return Err(FieldError::Validation(
            "recovering k needs at least a 5x5 grid for the interior stencil".into(),
        ));
    }
    let (du, dv) = frame.grid.steps();
    let steps = [du, dv];
    let positions = |iu: usize, iv: usize| frame.nodes[iu][iv].position;
    let normals = |iu: usize, iv: usize| frame.nodes[iu][iv].normal();

    let mut worst = 0.0f64;
    for iu in 2..nu - 2 {
        for iv in 2..nv - 2 {
            let point = frame.nodes[iu][iv].base;
            let k = data.k_jets(&point)?;
            for c in 0..2 {
                let dn = fd4(&normals, iu, iv, c, steps[c]);
                for d in 0..2 {
                    let t = fd4(&positions, iu, iv, d, steps[d]);
                    let got = dot3(&dn, &t);
                    worst = worst.max((got - k[c][d].value()).abs());
                }
            }
        }
    }
    Ok(worst)
}
