//! Hypersurfaces inside an ambient structure: induced fields, band-wise
//! second fundamental forms, and the curvature relations that tie the two
//! geometries together.
//!
//! An embedding `F: Sigma -> M` pulls the ambient metric, flux and
//! divergence data back to order-3 jets over the hypersurface chart, picks a
//! unit normal `n` (rejecting null normals), and splits every ambient object
//! into tangential and normal parts. The band lifts of tangent vectors span
//! `E_Sigma`, and the exterior curvature of the canonical connection lives
//! in the blocks
//!
//! * `k_pure_pm  = k - (<e, n_pm>/dim Sigma) h -+ H_perp/6` on `E_pm x E_pm`,
//! * `k_mixed_pm = k -+ H_perp/2`                on `E_-+ x E_pm`,
//!
//! together with the traces `t_pm = tr_h k - <e, n_pm>` and the tangential
//! corrector covectors `l_pm`. The module checks the Gauss and Codazzi
//! relations between ambient and induced curvature blocks, evaluates the
//! energy and momentum constraints of the normal slicing, and reduces them
//! to the classical constraint system when the divergence pair is an exact
//! one-form.

use crate::classical::{
    christoffels, covariant_derivative, curvature, Christoffels, JetTensor,
};
use crate::expr::{self, Expr};
use crate::fields::{jet_matrix_inverse, AmbientStructure, Chart, FieldError, StructureJets};
use crate::gen_curvature::{
    canonical_chi_scale, dstar_xi, e_band, gen_ricci, gen_riemann, gen_scalar, GenRiemann,
};
use crate::jet::{compose_jets, Jet3};
use crate::tensor::{MultiIndexIter, Tensor, Variance};

/// Threshold below which a normal vector counts as null and the immersion is
/// rejected.
const NULL_NORMAL_TOL: f64 = 1e-8;

/// Tolerance for the exact-divergence precondition of the classical
/// constraint decomposition.
const EXACT_DILATON_TOL: f64 = 1e-9;

/// A chart map `F: Sigma -> M` with a choice of unit normal direction.
#[derive(Debug, Clone)]
pub struct EmbeddingMap {
    pub sigma_chart: Chart,
    pub ambient_chart: Chart,
    components: Vec<Expr>,
    /// `+1` keeps the completed normal, `-1` flips it.
    pub normal_orientation: f64,
}

impl EmbeddingMap {
    pub fn new(
        sigma_chart: Chart,
        ambient_chart: Chart,
        components: &[&str],
        normal_orientation: f64,
    ) -> Result<EmbeddingMap, FieldError> {
        if components.len() != ambient_chart.dim() {
            return Err(FieldError::Validation(format!(
                "embedding into `{}` needs {} components, got {}",
                ambient_chart.name,
                ambient_chart.dim(),
                components.len()
            )));
        }
        if sigma_chart.dim() + 1 != ambient_chart.dim() {
            return Err(FieldError::Validation(format!(
                "`{}` must have codimension one in `{}` ({} vs {} coordinates)",
                sigma_chart.name,
                ambient_chart.name,
                sigma_chart.dim(),
                ambient_chart.dim()
            )));
        }
        if normal_orientation != 1.0 && normal_orientation != -1.0 {
            return Err(FieldError::Validation(format!(
                "normal orientation must be +1 or -1, got {normal_orientation}"
            )));
        }
        let parsed = components
            .iter()
            .enumerate()
            .map(|(i, text)| {
                expr::parse(text, &sigma_chart.coords).map_err(|source| FieldError::Parse {
                    context: format!("embedding component `{}`", ambient_chart.coords[i]),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EmbeddingMap {
            sigma_chart,
            ambient_chart,
            components: parsed,
            normal_orientation,
        })
    }

    pub fn dim_sigma(&self) -> usize {
        self.sigma_chart.dim()
    }

    pub fn dim_ambient(&self) -> usize {
        self.ambient_chart.dim()
    }

    /// Component jets of `F` at a hypersurface point.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<Jet3>, FieldError> {
        self.sigma_chart.check_point(point)?;
        self.components
            .iter()
            .enumerate()
            .map(|(i, e)| {
                expr::eval_jet(e, point).map_err(|source| FieldError::Eval {
                    context: format!("embedding component `{}`", self.ambient_chart.coords[i]),
                    source,
                })
            })
            .collect()
    }

    /// The image point `F(y)` in ambient coordinates.
    pub fn point(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        Ok(self.eval(point)?.iter().map(Jet3::value).collect())
    }
}

/// Everything `induce` computes at one hypersurface point, kept as jets so
/// the curvature relations can differentiate the induced objects again.
#[derive(Debug, Clone)]
pub struct InducedHypersurface {
    pub dim_sigma: usize,
    pub dim_ambient: usize,
    /// `g(n, n)`, either `+1` or `-1`.
    pub epsilon: f64,
    pub sigma_point: Vec<f64>,
    pub ambient_point: Vec<f64>,
    /// Ambient structure jets at `F(y)`, in ambient variables.
    pub ambient: StructureJets,
    /// Induced structure jets over the hypersurface chart: first fundamental
    /// form, tangential flux, tangential divergence pair.
    pub sigma: StructureJets,
    /// Tangent frame `df[alpha][mu] = d F^mu / d y^alpha` as jets.
    pub df: Vec<Vec<Jet3>>,
    /// Unit normal components, in ambient coordinates but jetted over the
    /// hypersurface variables.
    pub normal: Vec<Jet3>,
    /// Second fundamental form `k[alpha][beta] = g(nabla_alpha n, T_beta)`.
    pub k: Vec<Vec<Jet3>>,
    /// Normal flux contraction `H(n, T_alpha, T_beta)`.
    pub h_perp: Vec<Vec<Jet3>>,
    /// `xi(n)`.
    pub x_perp: Jet3,
    /// `g(X, n)`.
    pub gx_n: Jet3,
    /// `<e, n_+> = g(X, n) + xi(n)`.
    pub e_perp_plus: Jet3,
    /// `<e, n_-> = -g(X, n) + xi(n)`.
    pub e_perp_minus: Jet3,
}

/// Value-level snapshot of the induced fields.
#[derive(Debug, Clone)]
pub struct InducedStructure {
    pub epsilon: f64,
    /// First fundamental form `h`.
    pub h: Tensor<f64>,
    /// Tangential flux `H(T, T, T)`.
    pub h_par: Tensor<f64>,
    /// Normal flux contraction `H(n, T, T)`.
    pub h_perp: Tensor<f64>,
    /// Tangential one-form part `xi(T)`.
    pub xi_par: Tensor<f64>,
    /// Tangential vector part of `X`, indices raised with `h`.
    pub x_par: Tensor<f64>,
    /// `xi(n)`.
    pub x_perp: f64,
    pub e_perp_plus: f64,
    pub e_perp_minus: f64,
}

/// Value-level shape data: the classical operators together with the
/// band-wise exterior curvature blocks.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub epsilon: f64,
    /// Unit normal in ambient components.
    pub normal: Vec<f64>,
    /// Classical second fundamental form.
    pub k: Tensor<f64>,
    /// Shape operator `A[gamma][alpha] = h^{gamma beta} k_{alpha beta}`.
    pub shape_operator: Tensor<f64>,
    pub k_pure_plus: Tensor<f64>,
    pub k_pure_minus: Tensor<f64>,
    pub k_mixed_plus: Tensor<f64>,
    pub k_mixed_minus: Tensor<f64>,
    pub t_plus: f64,
    pub t_minus: f64,
    pub l_plus: Tensor<f64>,
    pub l_minus: Tensor<f64>,
}

/// Exterior curvature blocks as jets over the hypersurface chart.
#[derive(Debug, Clone)]
pub struct SecondFormJets {
    pub k_pure_plus: JetTensor,
    pub k_pure_minus: JetTensor,
    pub k_mixed_plus: JetTensor,
    pub k_mixed_minus: JetTensor,
    pub t_plus: Jet3,
    pub t_minus: Jet3,
    pub l_plus: JetTensor,
    pub l_minus: JetTensor,
}

impl SecondFormJets {
    pub fn pure(&self, band: f64) -> &JetTensor {
        if band > 0.0 {
            &self.k_pure_plus
        } else {
            &self.k_pure_minus
        }
    }

    pub fn mixed(&self, band: f64) -> &JetTensor {
        if band > 0.0 {
            &self.k_mixed_plus
        } else {
            &self.k_mixed_minus
        }
    }

    pub fn trace(&self, band: f64) -> &Jet3 {
        if band > 0.0 {
            &self.t_plus
        } else {
            &self.t_minus
        }
    }

    pub fn corrector(&self, band: f64) -> &JetTensor {
        if band > 0.0 {
            &self.l_plus
        } else {
            &self.l_minus
        }
    }
}

/// Assemble the exterior curvature blocks from their raw ingredients: the
/// induced structure jets, the classical second fundamental form, the normal
/// flux contraction and the normal generator pairings. Shared between the
/// embedded path and abstract hypersurface data: the pure blocks subtract
/// the trace part and a third of the normal flux torsion, the mixed blocks
/// subtract half of it, the traces pair `tr_h k` against the normal
/// generator component, and the corrector is the lowered tangential band
/// vector at weight `band * eps * chi`.
pub(crate) fn second_form_from_parts(
    sigma: &StructureJets,
    k: &[Vec<Jet3>],
    h_perp: &[Vec<Jet3>],
    e_perp_plus: &Jet3,
    e_perp_minus: &Jet3,
    eps: f64,
    chi: f64,
) -> SecondFormJets {
    let n = sigma.dim;
    let down2 = vec![Variance::Down, Variance::Down];

    let mut blocks = Vec::with_capacity(4);
    let mut traces = Vec::with_capacity(2);
    let mut correctors = Vec::with_capacity(2);
    for band in [1.0f64, -1.0] {
        let e_perp = if band > 0.0 { e_perp_plus } else { e_perp_minus };
        let mut pure = JetTensor::zeros(n, n, down2.clone());
        let mut mixed = JetTensor::zeros(n, n, down2.clone());
        for a in 0..n {
            for b in 0..n {
                let trace_part = (e_perp * &sigma.g[a][b]).scale(1.0 / n as f64);
                pure.set(
                    &[a, b],
                    &(&k[a][b] - &trace_part) - &h_perp[a][b].scale(band / 6.0),
                );
                mixed.set(&[a, b], &k[a][b] - &h_perp[a][b].scale(band / 2.0));
            }
        }
        let mut tr = Jet3::zero(n);
        for a in 0..n {
            for b in 0..n {
                tr = tr + &sigma.g_inv[a][b] * &k[a][b];
            }
        }
        traces.push(tr - e_perp.clone());

        let e_par = e_band(sigma, band);
        let mut l = JetTensor::zeros(n, n, vec![Variance::Down]);
        for b in 0..n {
            let mut s = Jet3::zero(n);
            for c in 0..n {
                s = s + &sigma.g[b][c] * &e_par[c];
            }
            l.set(&[b], s.scale(band * eps * chi));
        }
        correctors.push(l);
        blocks.push(pure);
        blocks.push(mixed);
    }

    let k_mixed_minus = blocks.pop().unwrap();
    let k_pure_minus = blocks.pop().unwrap();
    let k_mixed_plus = blocks.pop().unwrap();
    let k_pure_plus = blocks.pop().unwrap();
    let l_minus = correctors.pop().unwrap();
    let l_plus = correctors.pop().unwrap();
    let t_minus = traces.pop().unwrap();
    let t_plus = traces.pop().unwrap();
    SecondFormJets {
        k_pure_plus,
        k_pure_minus,
        k_mixed_plus,
        k_mixed_minus,
        t_plus,
        t_minus,
        l_plus,
        l_minus,
    }
}

fn compose_vec(v: &[Jet3], f: &[Jet3]) -> Vec<Jet3> {
    v.iter().map(|j| compose_jets(j, f)).collect()
}

fn compose_matrix(m: &[Vec<Jet3>], f: &[Jet3]) -> Vec<Vec<Jet3>> {
    m.iter().map(|row| compose_vec(row, f)).collect()
}

fn compose_cube(c: &[Vec<Vec<Jet3>>], f: &[Jet3]) -> Vec<Vec<Vec<Jet3>>> {
    c.iter().map(|m| compose_matrix(m, f)).collect()
}

/// Pull the ambient structure back along an embedding at one point.
pub fn induce(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<InducedHypersurface, FieldError> {
    let n_sig = emb.dim_sigma();
    let d = emb.dim_ambient();
    if amb.chart.coords != emb.ambient_chart.coords {
        return Err(FieldError::Validation(format!(
            "embedding targets chart `{}` but the ambient structure lives on `{}`",
            emb.ambient_chart.name, amb.chart.name
        )));
    }

    let f_jets = emb.eval(point)?;
    let f_vals: Vec<f64> = f_jets.iter().map(Jet3::value).collect();
    let ambient = amb.jets_at(&f_vals)?;
    let amb_chr = christoffels(&ambient);

    // Pull every ambient field back to jets over the hypersurface chart.
    let g_f = compose_matrix(&ambient.g, &f_jets);
    let h_f = compose_cube(&ambient.h, &f_jets);
    let gamma_f = compose_cube(&amb_chr.lc, &f_jets);
    let x_f = compose_vec(&ambient.x_vec, &f_jets);
    let xi_f = compose_vec(&ambient.xi, &f_jets);

    // Coordinate tangent frame T_alpha = dF(d_alpha).
    let df: Vec<Vec<Jet3>> = (0..n_sig)
        .map(|al| f_jets.iter().map(|fj| fj.partial_jet(al)).collect())
        .collect();

    let jac = nalgebra::DMatrix::from_fn(d, n_sig, |mu, al| df[al][mu].value());
    let smallest = jac.svd(false, false).singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if smallest < 1e-10 {
        return Err(FieldError::Validation(format!(
            "embedding Jacobian is rank-deficient at {point:?}"
        )));
    }

    // First fundamental form and its inverse.
    let mut h = vec![vec![Jet3::zero(n_sig); n_sig]; n_sig];
    for al in 0..n_sig {
        for be in 0..n_sig {
            let mut s = Jet3::zero(n_sig);
            for mu in 0..d {
                for nu in 0..d {
                    s = s + &(&g_f[mu][nu] * &df[al][mu]) * &df[be][nu];
                }
            }
            h[al][be] = s;
        }
    }
    let hv = nalgebra::DMatrix::from_fn(n_sig, n_sig, |i, j| h[i][j].value());
    let eig = nalgebra::SymmetricEigen::new(hv);
    let mut sig_p = 0;
    let mut sig_q = 0;
    for &lambda in eig.eigenvalues.iter() {
        if lambda > 1e-10 {
            sig_p += 1;
        } else if lambda < -1e-10 {
            sig_q += 1;
        } else {
            return Err(FieldError::Validation(format!(
                "null hypersurface unsupported: induced metric degenerates at {point:?}"
            )));
        }
    }
    let h_inv = jet_matrix_inverse(&h).ok_or_else(|| FieldError::DegenerateMetric {
        point: point.to_vec(),
        det: 0.0,
    })?;

    // Complete the frame with the coordinate axis most transverse to it,
    // then project out the tangential part.
    let mut pivot = 0;
    let mut best = -1.0;
    for c in 0..d {
        let mut m = nalgebra::DMatrix::zeros(d, d);
        for al in 0..n_sig {
            for mu in 0..d {
                m[(mu, al)] = df[al][mu].value();
            }
        }
        for mu in 0..d {
            m[(mu, n_sig)] = if mu == c { 1.0 } else { 0.0 };
        }
        let det = m.determinant().abs();
        if det > best {
            best = det;
            pivot = c;
        }
    }
    let mut n_raw: Vec<Jet3> = (0..d)
        .map(|mu| Jet3::constant(n_sig, if mu == pivot { 1.0 } else { 0.0 }))
        .collect();
    for al in 0..n_sig {
        let mut coef = Jet3::zero(n_sig);
        for be in 0..n_sig {
            let mut gc = Jet3::zero(n_sig);
            for nu in 0..d {
                gc = gc + &g_f[pivot][nu] * &df[be][nu];
            }
            coef = coef + &h_inv[al][be] * &gc;
        }
        for mu in 0..d {
            n_raw[mu] = &n_raw[mu] - &(&coef * &df[al][mu]);
        }
    }
    let mut norm2 = Jet3::zero(n_sig);
    for mu in 0..d {
        for nu in 0..d {
            norm2 = norm2 + &(&g_f[mu][nu] * &n_raw[mu]) * &n_raw[nu];
        }
    }
    if norm2.value().abs() < NULL_NORMAL_TOL {
        return Err(FieldError::Validation(format!(
            "null hypersurface unsupported: |g(n,n)| = {:.3e} at {point:?}",
            norm2.value().abs()
        )));
    }
    let epsilon = norm2.value().signum();
    let inv_len = norm2.scale(epsilon).sqrt().recip();
    let normal: Vec<Jet3> = n_raw
        .iter()
        .map(|c| (c * &inv_len).scale(emb.normal_orientation))
        .collect();

    // Second fundamental form k(X, Y) = g(nabla_X n, Y).
    let mut k = vec![vec![Jet3::zero(n_sig); n_sig]; n_sig];
    for al in 0..n_sig {
        let mut dn = Vec::with_capacity(d);
        for mu in 0..d {
            let mut s = normal[mu].partial_jet(al);
            for nu in 0..d {
                for rho in 0..d {
                    s = s + &(&gamma_f[mu][nu][rho] * &df[al][nu]) * &normal[rho];
                }
            }
            dn.push(s);
        }
        for be in 0..n_sig {
            let mut s = Jet3::zero(n_sig);
            for mu in 0..d {
                for nu in 0..d {
                    s = s + &(&g_f[mu][nu] * &dn[mu]) * &df[be][nu];
                }
            }
            k[al][be] = s;
        }
    }

    // Tangential / normal split of the flux and the divergence pair.
    let mut h_par = vec![vec![vec![Jet3::zero(n_sig); n_sig]; n_sig]; n_sig];
    let mut h_perp = vec![vec![Jet3::zero(n_sig); n_sig]; n_sig];
    for al in 0..n_sig {
        for be in 0..n_sig {
            let mut sp = Jet3::zero(n_sig);
            for mu in 0..d {
                for nu in 0..d {
                    for rho in 0..d {
                        sp = sp + &(&(&h_f[mu][nu][rho] * &normal[mu]) * &df[al][nu]) * &df[be][rho];
                    }
                }
            }
            h_perp[al][be] = sp;
            for ga in 0..n_sig {
                let mut st = Jet3::zero(n_sig);
                for mu in 0..d {
                    for nu in 0..d {
                        for rho in 0..d {
                            st = st
                                + &(&(&h_f[mu][nu][rho] * &df[al][mu]) * &df[be][nu]) * &df[ga][rho];
                        }
                    }
                }
                h_par[al][be][ga] = st;
            }
        }
    }
    let mut xi_par = Vec::with_capacity(n_sig);
    let mut gx_low = Vec::with_capacity(n_sig);
    for be in 0..n_sig {
        let mut sx = Jet3::zero(n_sig);
        let mut sg = Jet3::zero(n_sig);
        for mu in 0..d {
            sx = sx + &xi_f[mu] * &df[be][mu];
            for nu in 0..d {
                sg = sg + &(&g_f[mu][nu] * &x_f[mu]) * &df[be][nu];
            }
        }
        xi_par.push(sx);
        gx_low.push(sg);
    }
    let raise = |low: &[Jet3]| -> Vec<Jet3> {
        (0..n_sig)
            .map(|al| {
                let mut s = Jet3::zero(n_sig);
                for be in 0..n_sig {
                    s = s + &h_inv[al][be] * &low[be];
                }
                s
            })
            .collect()
    };
    let x_par = raise(&gx_low);
    let xi_raised = raise(&xi_par);
    let e_plus: Vec<Jet3> = (0..n_sig).map(|a| &x_par[a] + &xi_raised[a]).collect();
    let e_minus: Vec<Jet3> = (0..n_sig).map(|a| &x_par[a] - &xi_raised[a]).collect();

    let mut x_perp = Jet3::zero(n_sig);
    let mut gx_n = Jet3::zero(n_sig);
    for mu in 0..d {
        x_perp = x_perp + &xi_f[mu] * &normal[mu];
        for nu in 0..d {
            gx_n = gx_n + &(&g_f[mu][nu] * &x_f[mu]) * &normal[nu];
        }
    }
    let e_perp_plus = &gx_n + &x_perp;
    let e_perp_minus = &x_perp - &gx_n;

    let sigma = StructureJets {
        dim: n_sig,
        point: point.to_vec(),
        g: h,
        g_inv: h_inv,
        h: h_par,
        x_vec: x_par,
        xi: xi_par,
        e_plus,
        e_minus,
        signature: (sig_p, sig_q),
    };

    Ok(InducedHypersurface {
        dim_sigma: n_sig,
        dim_ambient: d,
        epsilon,
        sigma_point: point.to_vec(),
        ambient_point: f_vals,
        ambient,
        sigma,
        df,
        normal,
        k,
        h_perp,
        x_perp,
        gx_n,
        e_perp_plus,
        e_perp_minus,
    })
}

impl InducedHypersurface {
    pub fn tangent_values(&self) -> Vec<Vec<f64>> {
        self.df
            .iter()
            .map(|row| row.iter().map(Jet3::value).collect())
            .collect()
    }

    pub fn normal_values(&self) -> Vec<f64> {
        self.normal.iter().map(Jet3::value).collect()
    }

    pub fn induced_structure(&self) -> InducedStructure {
        let n = self.dim_sigma;
        let mut h = Tensor::square(n, 2, Variance::Down);
        let mut h_perp = Tensor::square(n, 2, Variance::Down);
        let mut h_par = Tensor::square(n, 3, Variance::Down);
        let mut xi_par = Tensor::square(n, 1, Variance::Down);
        let mut x_par = Tensor::square(n, 1, Variance::Up);
        for a in 0..n {
            xi_par.set(&[a], self.sigma.xi[a].value());
            x_par.set(&[a], self.sigma.x_vec[a].value());
            for b in 0..n {
                h.set(&[a, b], self.sigma.g[a][b].value());
                h_perp.set(&[a, b], self.h_perp[a][b].value());
                for c in 0..n {
                    h_par.set(&[a, b, c], self.sigma.h[a][b][c].value());
                }
            }
        }
        InducedStructure {
            epsilon: self.epsilon,
            h,
            h_par,
            h_perp,
            xi_par,
            x_par,
            x_perp: self.x_perp.value(),
            e_perp_plus: self.e_perp_plus.value(),
            e_perp_minus: self.e_perp_minus.value(),
        }
    }

    /// Exterior curvature blocks of the canonical connection, as jets.
    pub fn second_form_jets(&self) -> SecondFormJets {
        second_form_from_parts(
            &self.sigma,
            &self.k,
            &self.h_perp,
            &self.e_perp_plus,
            &self.e_perp_minus,
            self.epsilon,
            canonical_chi_scale(self.dim_ambient),
        )
    }

    pub fn shape_data(&self) -> ShapeData {
        let n = self.dim_sigma;
        let sf = self.second_form_jets();
        let mut k = Tensor::square(n, 2, Variance::Down);
        let mut shape = Tensor::new(vec![n, n], vec![Variance::Up, Variance::Down]);
        for a in 0..n {
            for b in 0..n {
                k.set(&[a, b], self.k[a][b].value());
                let mut s = 0.0;
                for c in 0..n {
                    s += self.sigma.g_inv[a][c].value() * self.k[b][c].value();
                }
                shape.set(&[a, b], s);
            }
        }
        ShapeData {
            epsilon: self.epsilon,
            normal: self.normal_values(),
            k,
            shape_operator: shape,
            k_pure_plus: sf.k_pure_plus.values(),
            k_pure_minus: sf.k_pure_minus.values(),
            k_mixed_plus: sf.k_mixed_plus.values(),
            k_mixed_minus: sf.k_mixed_minus.values(),
            t_plus: sf.t_plus.value(),
            t_minus: sf.t_minus.value(),
            l_plus: sf.l_plus.values(),
            l_minus: sf.l_minus.values(),
        }
    }

    /// Both Gauss relations (pure and mixed band pattern), per band, as
    /// max-abs residuals over all tangential index combinations.
    pub fn gauss_residuals(&self) -> GaussResiduals {
        let chi = canonical_chi_scale(self.dim_ambient);
        let amb_chr = christoffels(&self.ambient);
        let amb = gen_riemann(&self.ambient, &amb_chr, chi);
        let t = self.tangent_values();
        let nv = self.normal_values();
        gauss_residuals_for(
            &self.sigma,
            &self.second_form_jets(),
            self.epsilon,
            chi,
            Some((&amb, &t, &nv)),
        )
    }

    /// The four Codazzi relations per band, as max-abs residuals.
    pub fn codazzi_residuals(&self) -> CodazziResiduals {
        let chi = canonical_chi_scale(self.dim_ambient);
        let amb_chr = christoffels(&self.ambient);
        let amb = gen_riemann(&self.ambient, &amb_chr, chi);
        let t = self.tangent_values();
        let nv = self.normal_values();
        codazzi_residuals_for(
            &self.sigma,
            &self.second_form_jets(),
            self.epsilon,
            chi,
            Some((&amb, &t, &nv)),
        )
    }

    /// Normal-normal Ricci contraction against the ambient scalar: the
    /// energy (Hamiltonian) constraint of the slicing.
    pub fn energy_constraint(&self) -> EnergyConstraint {
        let amb_chr = christoffels(&self.ambient);
        let rc = gen_ricci(&self.ambient, &amb_chr);
        let sc_amb = gen_scalar(&self.ambient, &amb_chr);
        let sig_chr = christoffels(&self.sigma);
        let sc_sig = gen_scalar(&self.sigma, &sig_chr);
        let sf = self.second_form_jets();
        let nv = self.normal_values();
        let eps = self.epsilon;
        let n = self.dim_sigma;
        let hinv = self.sigma.g_inv_vals();
        let tp = sf.t_plus.value();
        let tm = sf.t_minus.value();

        let mut lhs_stored = 0.0;
        let mut rhs_stored = 0.0;
        let mut residual = 0.0f64;
        for band in [1.0f64, -1.0] {
            let block = if band > 0.0 { &rc.plus } else { &rc.minus };
            let mut rnn = 0.0;
            for a in 0..self.dim_ambient {
                for b in 0..self.dim_ambient {
                    rnn += block.get(&[a, b]) * nv[a] * nv[b];
                }
            }
            let lhs = 2.0 * rnn - eps * sc_amb;

            let km = sf.mixed(band).values();
            let mut k2 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            k2 += hinv.get(&[a, c])
                                * hinv.get(&[b, d])
                                * km.get(&[a, b])
                                * km.get(&[c, d]);
                        }
                    }
                }
            }
            let rhs = -eps * sc_sig - k2 + (tp * tp + tm * tm) / 2.0;
            residual = residual.max((lhs - rhs).abs());
            if band > 0.0 {
                lhs_stored = lhs;
                rhs_stored = rhs;
            }
        }
        EnergyConstraint { lhs: lhs_stored, rhs: rhs_stored, residual }
    }

    /// Tangent-normal Ricci contraction against the divergence of the
    /// shifted shape operator: the momentum constraint, per band.
    ///
    /// The two sides agree when the divergence pair is compatible (the
    /// generator is generalised Killing, e.g. an exact dilaton pair); for a
    /// generic pair they differ by the mixed-type trace of the ambient
    /// Riemann tensor, which the identity drops.
    pub fn momentum_constraint(&self) -> MomentumConstraint {
        let n = self.dim_sigma;
        let amb_chr = christoffels(&self.ambient);
        let rc = gen_ricci(&self.ambient, &amb_chr);
        let hsq = self.ambient.h_contractions().h_sq;
        let sig_chr = christoffels(&self.sigma);
        let sf = self.second_form_jets();
        let t = self.tangent_values();
        let nv = self.normal_values();
        let hinv = self.sigma.g_inv_vals();

        let mut sides = Vec::with_capacity(4);
        let mut residual = 0.0f64;
        for band in [1.0f64, -1.0] {
            let block = if band > 0.0 { &rc.plus } else { &rc.minus };
            // S = k - band H_perp / 2, as jets.
            let mut s_jets = JetTensor::zeros(n, n, vec![Variance::Down, Variance::Down]);
            for a in 0..n {
                for b in 0..n {
                    s_jets.set(&[a, b], &self.k[a][b] - &self.h_perp[a][b].scale(band / 2.0));
                }
            }
            let grad = covariant_derivative(&sig_chr.lc, &s_jets);
            let e_par = e_band(&self.sigma, band);
            let t_jet = sf.trace(band);

            let mut lhs = Tensor::square(n, 1, Variance::Down);
            let mut rhs = Tensor::square(n, 1, Variance::Down);
            for al in 0..n {
                let mut l = 0.0;
                for a in 0..self.dim_ambient {
                    for b in 0..self.dim_ambient {
                        l += block.get(&[a, b]) * t[al][a] * nv[b];
                    }
                }
                lhs.set(&[al], l);

                let mut div = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        div += hinv.get(&[i, j]) * grad.get(&[i, al, j]).value();
                    }
                }
                let mut shift = 0.0;
                for be in 0..n {
                    shift += s_jets.get(&[al, be]).value() * e_par[be].value();
                }
                let mut hsq_n = 0.0;
                for a in 0..self.dim_ambient {
                    for b in 0..self.dim_ambient {
                        hsq_n += hsq.get(&[a, b]) * nv[a] * t[al][b];
                    }
                }
                let r = div - band * shift - 0.25 * hsq_n - t_jet.partial(al);
                rhs.set(&[al], r);
                residual = residual.max((l - r).abs());
            }
            sides.push(lhs);
            sides.push(rhs);
        }
        let rhs_minus = sides.pop().unwrap();
        let lhs_minus = sides.pop().unwrap();
        let rhs_plus = sides.pop().unwrap();
        let lhs_plus = sides.pop().unwrap();
        MomentumConstraint { lhs_plus, rhs_plus, lhs_minus, rhs_minus, residual }
    }

    /// Classical constraint system of the slicing, defined when the
    /// divergence pair is an exact one-form (`X = 0`, `d xi = 0`).
    pub fn classical_constraints(&self) -> Result<ClassicalConstraints, FieldError> {
        let d = self.dim_ambient;
        let mut worst = 0.0f64;
        for mu in 0..d {
            worst = worst.max(self.ambient.x_vec[mu].value().abs());
            for nu in 0..d {
                worst = worst.max(self.ambient.x_vec[mu].partial(nu).abs());
                worst = worst
                    .max((self.ambient.xi[nu].partial(mu) - self.ambient.xi[mu].partial(nu)).abs());
            }
        }
        if worst > EXACT_DILATON_TOL {
            return Err(FieldError::Validation(
                "classical decomposition requires e = 2ξ, dξ = 0".into(),
            ));
        }

        let n = self.dim_sigma;
        let eps = self.epsilon;
        let sig_chr = christoffels(&self.sigma);
        let hinv = self.sigma.g_inv_vals();

        let mut k_jets = JetTensor::zeros(n, n, vec![Variance::Down, Variance::Down]);
        let mut hp_jets = JetTensor::zeros(n, n, vec![Variance::Down, Variance::Down]);
        let mut tr_k = Jet3::zero(n);
        for a in 0..n {
            for b in 0..n {
                k_jets.set(&[a, b], self.k[a][b].clone());
                hp_jets.set(&[a, b], self.h_perp[a][b].clone());
                tr_k = tr_k + &self.sigma.g_inv[a][b] * &self.k[a][b];
            }
        }

        // Scalar pieces.
        let sc_h = curvature(&self.sigma, &sig_chr).sc;
        let dstar_xi_par = dstar_xi(&self.sigma, &sig_chr);
        let h_par_norm2 = self.sigma.h_contractions().h_norm2;
        let mut h_perp_norm2 = 0.0;
        let mut k_norm2 = 0.0;
        let mut xi_norm2 = 0.0;
        for a in 0..n {
            for b in 0..n {
                xi_norm2 += hinv.get(&[a, b]) * self.sigma.xi[a].value() * self.sigma.xi[b].value();
                for c in 0..n {
                    for e in 0..n {
                        let w = hinv.get(&[a, c]) * hinv.get(&[b, e]);
                        h_perp_norm2 += w * self.h_perp[a][b].value() * self.h_perp[c][e].value();
                        k_norm2 += w * self.k[a][b].value() * self.k[c][e].value();
                    }
                }
            }
        }
        let x = self.x_perp.value();
        let tk = tr_k.value();
        let lhs1 = -eps * sc_h + tk * tk - k_norm2;
        let rhs1 = -eps * h_par_norm2 / 12.0 + h_perp_norm2 / 4.0 - 2.0 * eps * dstar_xi_par
            + 2.0 * tk * x
            - eps * xi_norm2
            - x * x;

        // Covector pieces.
        let grad_k = covariant_derivative(&sig_chr.lc, &k_jets);
        let xi_sharp: Vec<f64> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| hinv.get(&[a, b]) * self.sigma.xi[b].value())
                    .sum()
            })
            .collect();
        let codiff_hp = crate::classical::codifferential(&self.sigma, &sig_chr.lc, &hp_jets);
        let mut momentum_gap = Tensor::square(n, 1, Variance::Down);
        let mut flux_gap = Tensor::square(n, 1, Variance::Down);
        for al in 0..n {
            let mut div_k = 0.0;
            for i in 0..n {
                for j in 0..n {
                    div_k += hinv.get(&[i, j]) * grad_k.get(&[i, al, j]).value();
                }
            }
            let mut pairing = 0.0;
            for b in 0..n {
                for c in 0..n {
                    let mut hp_up = 0.0;
                    for bb in 0..n {
                        for cc in 0..n {
                            hp_up += hinv.get(&[b, bb])
                                * hinv.get(&[c, cc])
                                * self.h_perp[bb][cc].value();
                        }
                    }
                    pairing += hp_up * self.sigma.h[al][b][c].value();
                }
            }
            let mut contraction = 0.0;
            let mut flux_contraction = 0.0;
            for b in 0..n {
                contraction += self.k[al][b].value() * xi_sharp[b];
                flux_contraction += xi_sharp[b] * self.h_perp[b][al].value();
            }
            momentum_gap.set(
                &[al],
                div_k - tr_k.partial(al) - 0.25 * pairing + self.x_perp.partial(al) - contraction,
            );
            flux_gap.set(&[al], codiff_hp.get(&[al]).value() + flux_contraction);
        }

        Ok(ClassicalConstraints { hamiltonian_gap: lhs1 - rhs1, momentum_gap, flux_gap })
    }
}

/// Residuals of the two Gauss relations, per band.
#[derive(Debug, Clone, Default)]
pub struct GaussResiduals {
    pub pure_plus: f64,
    pub pure_minus: f64,
    pub mixed_plus: f64,
    pub mixed_minus: f64,
}

impl GaussResiduals {
    pub fn max(&self) -> f64 {
        self.pure_plus
            .max(self.pure_minus)
            .max(self.mixed_plus)
            .max(self.mixed_minus)
    }
}

/// Residuals of the four Codazzi relations, per band: the mixed relation
/// with one normal slot, the pure one, and the two double-normal ones
/// (same-band and cross-band).
#[derive(Debug, Clone, Default)]
pub struct CodazziResiduals {
    pub mixed_plus: f64,
    pub mixed_minus: f64,
    pub pure_plus: f64,
    pub pure_minus: f64,
    pub normal_plus: f64,
    pub normal_minus: f64,
    pub cross_plus: f64,
    pub cross_minus: f64,
}

impl CodazziResiduals {
    pub fn max(&self) -> f64 {
        self.mixed_plus
            .max(self.mixed_minus)
            .max(self.pure_plus)
            .max(self.pure_minus)
            .max(self.normal_plus)
            .max(self.normal_minus)
            .max(self.cross_plus)
            .max(self.cross_minus)
    }
}

/// Ambient curvature blocks with the frame they are contracted against:
/// `None` encodes a generically flat ambient (all contractions zero), which
/// is how abstract hypersurface data is checked against the identities.
type AmbientBlocks<'a> = Option<(&'a GenRiemann, &'a [Vec<f64>], &'a [f64])>;

/// Gauss relation assembly shared by embedded hypersurfaces and abstract
/// data: `sigma` carries the induced structure jets, `sf` the exterior
/// curvature blocks, `eps` the normal square, `chi` the ambient corrector
/// weight.
pub(crate) fn gauss_residuals_for(
    sigma: &StructureJets,
    sf: &SecondFormJets,
    eps: f64,
    chi: f64,
    amb: AmbientBlocks<'_>,
) -> GaussResiduals {
    let n = sigma.dim;
    let sig_chr = christoffels(sigma);
    let sig = gen_riemann(sigma, &sig_chr, chi);

    let mut out = GaussResiduals::default();
    for band in [1.0f64, -1.0] {
        let (sig_pure, sig_mixed) = if band > 0.0 {
            (&sig.pure_plus, &sig.mixed_plus)
        } else {
            (&sig.pure_minus, &sig.mixed_minus)
        };
        let amb_blocks = amb.map(|(gr, t, _)| {
            if band > 0.0 {
                (&gr.pure_plus, &gr.mixed_plus, t)
            } else {
                (&gr.pure_minus, &gr.mixed_minus, t)
            }
        });
        let kp = sf.pure(band).values();
        let km = sf.mixed(band).values();
        let mut worst_pure = 0.0f64;
        let mut worst_mixed = 0.0f64;
        for al in 0..n {
            for be in 0..n {
                for ga in 0..n {
                    for de in 0..n {
                        let amb_pure = amb_blocks.map_or(0.0, |(p, _, t)| {
                            contract4(p, &t[al], &t[be], &t[ga], &t[de])
                        });
                        let lhs_pure =
                            band * 2.0 * eps * (amb_pure - sig_pure.get(&[al, be, ga, de]));
                        let rhs_pure = kp.get(&[de, al]) * kp.get(&[ga, be])
                            - kp.get(&[ga, al]) * kp.get(&[de, be])
                            + kp.get(&[al, de]) * kp.get(&[be, ga])
                            - kp.get(&[be, de]) * kp.get(&[al, ga])
                            + (kp.get(&[ga, de]) - kp.get(&[de, ga]))
                                * (kp.get(&[be, al]) - kp.get(&[al, be]));
                        worst_pure = worst_pure.max((lhs_pure - rhs_pure).abs());

                        let amb_mixed = amb_blocks.map_or(0.0, |(_, m, t)| {
                            contract4(m, &t[al], &t[be], &t[ga], &t[de])
                        });
                        let lhs_mixed =
                            band * 2.0 * eps * (amb_mixed - sig_mixed.get(&[al, be, ga, de]));
                        let rhs_mixed = kp.get(&[al, de]) * km.get(&[be, ga])
                            - km.get(&[be, de]) * kp.get(&[al, ga])
                            + (kp.get(&[ga, de]) - kp.get(&[de, ga])) * km.get(&[be, al]);
                        worst_mixed = worst_mixed.max((lhs_mixed - rhs_mixed).abs());
                    }
                }
            }
        }
        if band > 0.0 {
            out.pure_plus = worst_pure;
            out.mixed_plus = worst_mixed;
        } else {
            out.pure_minus = worst_pure;
            out.mixed_minus = worst_mixed;
        }
    }
    out
}

/// Codazzi relation assembly shared by embedded hypersurfaces and abstract
/// data; see [`gauss_residuals_for`] for the parameter roles.
pub(crate) fn codazzi_residuals_for(
    sigma: &StructureJets,
    sf: &SecondFormJets,
    eps: f64,
    chi: f64,
    amb: AmbientBlocks<'_>,
) -> CodazziResiduals {
    let n = sigma.dim;
    let sig_chr = christoffels(sigma);
    let conn = InheritedConnection::new(sigma, &sig_chr, chi);
    let hinv = sigma.g_inv_vals();

    let mut out = CodazziResiduals::default();
    for band in [1.0f64, -1.0] {
        let amb_blocks = amb.map(|(gr, t, nv)| {
            if band > 0.0 {
                (&gr.pure_plus, &gr.mixed_plus, &gr.mixed_minus, t, nv)
            } else {
                (&gr.pure_minus, &gr.mixed_minus, &gr.mixed_plus, t, nv)
            }
        });
        let kp = sf.pure(band).values();
        let km = sf.mixed(band).values();
        let kp_opp = sf.pure(-band).values();
        let km_opp = sf.mixed(-band).values();
        let lv = sf.corrector(band).values();

        // Derivatives of the blocks with the band pattern of each slot.
        let dk_pure_opp =
            banded_covariant_derivative(&conn, -band, &[band, band], sf.pure(band)).values();
        let dk_mixed =
            banded_covariant_derivative(&conn, band, &[-band, band], sf.mixed(band)).values();
        let dk_pure =
            banded_covariant_derivative(&conn, band, &[band, band], sf.pure(band)).values();
        let dl = banded_covariant_derivative(&conn, band, &[band], sf.corrector(band)).values();
        let dl_opp_arg =
            banded_covariant_derivative(&conn, band, &[-band], sf.corrector(-band)).values();
        let dl_opp_dir =
            banded_covariant_derivative(&conn, -band, &[band], sf.corrector(band)).values();

        let mut worst_mixed = 0.0f64;
        let mut worst_pure = 0.0f64;
        for al in 0..n {
            for be in 0..n {
                for ga in 0..n {
                    let lhs1 = amb_blocks.map_or(0.0, |(_, m, _, t, nv)| {
                        band * 2.0 * contract4(m, &t[al], &t[be], nv, &t[ga])
                    });
                    let rhs1 = dk_pure_opp.get(&[be, al, ga]) - dk_mixed.get(&[al, be, ga])
                        + eps * km.get(&[be, al]) * lv.get(&[ga]);
                    worst_mixed = worst_mixed.max((lhs1 - rhs1).abs());

                    let lhs2 = amb_blocks.map_or(0.0, |(p, m, _, t, nv)| {
                        band * 2.0
                            * (contract4(p, &t[al], &t[be], nv, &t[ga])
                                + contract4(m, &t[ga], nv, &t[al], &t[be]))
                    });
                    let rhs2 = dk_pure.get(&[ga, al, be]) - dk_pure.get(&[ga, be, al])
                        + dk_pure.get(&[be, al, ga])
                        - dk_pure.get(&[al, be, ga])
                        + eps
                            * (lv.get(&[ga]) * (kp.get(&[be, al]) - kp.get(&[al, be]))
                                + lv.get(&[be]) * kp.get(&[ga, al])
                                - lv.get(&[al]) * kp.get(&[ga, be]));
                    worst_pure = worst_pure.max((lhs2 - rhs2).abs());
                }
            }
        }

        let mut worst_normal = 0.0f64;
        let mut worst_cross = 0.0f64;
        for al in 0..n {
            for be in 0..n {
                let lhs3 = amb_blocks.map_or(0.0, |(p, m, _, t, nv)| {
                    band * 2.0
                        * (contract4(p, &t[al], nv, nv, &t[be])
                            + contract4(m, &t[be], nv, &t[al], nv)
                            - contract4(m, &t[al], nv, nv, &t[be]))
                });
                // The curvature trace runs over the full frame: tangential
                // directions give the quadratic block terms below, while the
                // normal direction contributes the corrector square.
                let mut rhs3 = -(dl.get(&[al, be]) + dl.get(&[be, al]))
                    + eps * lv.get(&[al]) * lv.get(&[be]);
                for ga in 0..n {
                    for de in 0..n {
                        let w = hinv.get(&[de, ga]);
                        rhs3 += w
                            * (kp.get(&[al, ga]) * kp.get(&[de, be])
                                + kp.get(&[be, ga]) * kp.get(&[de, al])
                                - 2.0 * kp.get(&[al, de]) * kp.get(&[be, ga])
                                - km_opp.get(&[al, ga]) * km.get(&[de, be])
                                + kp.get(&[ga, al]) * kp.get(&[de, be]));
                    }
                }
                worst_normal = worst_normal.max((lhs3 - rhs3).abs());

                let lhs4 = amb_blocks.map_or(0.0, |(_, m, m_opp, t, nv)| {
                    band * 2.0
                        * (contract4(m, nv, &t[be], &t[al], nv)
                            - contract4(m_opp, nv, &t[al], nv, &t[be]))
                });
                let mut rhs4 = dl_opp_arg.get(&[al, be]) - dl_opp_dir.get(&[be, al]);
                for ga in 0..n {
                    for de in 0..n {
                        let w = hinv.get(&[de, ga]);
                        rhs4 += w
                            * (2.0 * km.get(&[be, ga]) * kp.get(&[de, al])
                                - km.get(&[be, ga]) * kp.get(&[al, de])
                                - 2.0 * km_opp.get(&[al, ga]) * kp_opp.get(&[de, be])
                                + km_opp.get(&[al, ga]) * kp_opp.get(&[be, de]));
                    }
                }
                worst_cross = worst_cross.max((lhs4 - rhs4).abs());
            }
        }

        if band > 0.0 {
            out.mixed_plus = worst_mixed;
            out.pure_plus = worst_pure;
            out.normal_plus = worst_normal;
            out.cross_plus = worst_cross;
        } else {
            out.mixed_minus = worst_mixed;
            out.pure_minus = worst_pure;
            out.normal_minus = worst_normal;
            out.cross_minus = worst_cross;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct EnergyConstraint {
    pub lhs: f64,
    pub rhs: f64,
    /// Max over both bands of `|lhs - rhs|`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct MomentumConstraint {
    pub lhs_plus: Tensor<f64>,
    pub rhs_plus: Tensor<f64>,
    pub lhs_minus: Tensor<f64>,
    pub rhs_minus: Tensor<f64>,
    pub residual: f64,
}

/// Signed gaps of the classical constraint system (Hamiltonian, momentum
/// and flux equations).
#[derive(Debug, Clone)]
pub struct ClassicalConstraints {
    pub hamiltonian_gap: f64,
    pub momentum_gap: Tensor<f64>,
    pub flux_gap: Tensor<f64>,
}

impl ClassicalConstraints {
    pub fn residuals(&self) -> (f64, f64, f64) {
        (self.hamiltonian_gap.abs(), self.momentum_gap.max_abs(), self.flux_gap.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        let (a, b, c) = self.residuals();
        a.max(b).max(c)
    }
}

/// Coefficient arrays of the connection a hypersurface inherits from the
/// canonical ambient one, for every combination of direction band and
/// argument band. The same-band rule carries the tangential flux torsion at
/// weight 1/6 plus the divergence corrector at the ambient `chi_scale`; the
/// cross-band rule carries the torsion at weight 1/2 and no corrector.
#[derive(Debug, Clone)]
pub struct InheritedConnection {
    pub n: usize,
    pub chi_scale: f64,
    pub same_plus: Vec<Vec<Vec<Jet3>>>,
    pub same_minus: Vec<Vec<Vec<Jet3>>>,
    pub cross_plus: Vec<Vec<Vec<Jet3>>>,
    pub cross_minus: Vec<Vec<Vec<Jet3>>>,
}

impl InheritedConnection {
    pub fn new(sigma: &StructureJets, chr: &Christoffels, chi_scale: f64) -> Self {
        let n = sigma.dim;
        let same = |band: f64| -> Vec<Vec<Vec<Jet3>>> {
            let mut gamma = chr.with_h_scale(band, 1.0 / 6.0).clone();
            let e = e_band(sigma, band);
            let mut ge = vec![Jet3::zero(n); n];
            for (gm, slot) in ge.iter_mut().enumerate() {
                for l in 0..n {
                    *slot = &*slot + &sigma.g[gm][l] * &e[l];
                }
            }
            let f = band * chi_scale;
            for k in 0..n {
                for c in 0..n {
                    for gm in 0..n {
                        let mut corr = &sigma.g[c][gm] * &e[k];
                        if k == c {
                            corr = corr - ge[gm].clone();
                        }
                        gamma[k][c][gm] = &gamma[k][c][gm] + &corr.scale(f);
                    }
                }
            }
            gamma
        };
        InheritedConnection {
            n,
            chi_scale,
            same_plus: same(1.0),
            same_minus: same(-1.0),
            cross_plus: chr.with_h_scale(1.0, 0.5).clone(),
            cross_minus: chr.with_h_scale(-1.0, 0.5).clone(),
        }
    }

    /// Coefficients for an argument of band `slot_band` differentiated
    /// along a direction of band `dir_band`.
    pub fn slot_rule(&self, slot_band: f64, dir_band: f64) -> &Vec<Vec<Vec<Jet3>>> {
        match (slot_band > 0.0, dir_band > 0.0) {
            (true, true) => &self.same_plus,
            (false, false) => &self.same_minus,
            (true, false) => &self.cross_plus,
            (false, true) => &self.cross_minus,
        }
    }
}

/// Inherited connection of an embedded hypersurface at a point.
pub fn induced_connection_coefficients(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<InheritedConnection, FieldError> {
    let ind = induce(amb, emb, point)?;
    let chr = christoffels(&ind.sigma);
    Ok(InheritedConnection::new(&ind.sigma, &chr, canonical_chi_scale(ind.dim_ambient)))
}

/// Covariant derivative of an all-covariant band tensor with respect to the
/// inherited connection; `slot_bands[s]` is the band of slot `s` and
/// `dir_band` the band of the derivative direction. The derivative index is
/// prepended.
pub fn banded_covariant_derivative(
    conn: &InheritedConnection,
    dir_band: f64,
    slot_bands: &[f64],
    t: &JetTensor,
) -> JetTensor {
    let n = t.n;
    assert_eq!(t.jet_dim, n, "can only differentiate chart tensors");
    assert_eq!(slot_bands.len(), t.rank(), "one band per slot");
    assert!(t.variance.iter().all(|v| *v == Variance::Down));
    let mut variance = vec![Variance::Down];
    variance.extend_from_slice(&t.variance);
    let mut out = JetTensor::zeros(n, n, variance);

    for idx in MultiIndexIter::new(vec![n; t.rank()]) {
        for c in 0..n {
            let mut jet = t.get(&idx).partial_jet(c);
            for (s, &sb) in slot_bands.iter().enumerate() {
                let gamma = conn.slot_rule(sb, dir_band);
                let mut swapped = idx.clone();
                for k in 0..n {
                    swapped[s] = k;
                    jet = jet - &gamma[k][c][idx[s]] * t.get(&swapped);
                }
            }
            let mut out_idx = vec![c];
            out_idx.extend_from_slice(&idx);
            out.set(&out_idx, jet);
        }
    }
    out
}

fn contract4(block: &Tensor<f64>, a: &[f64], b: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if b[j] == 0.0 {
                continue;
            }
            for p in 0..n {
                if v[p] == 0.0 {
                    continue;
                }
                for q in 0..n {
                    total += block.get(&[i, j, p, q]) * a[i] * b[j] * v[p] * w[q];
                }
            }
        }
    }
    total
}

/// Shape data at a point (convenience wrapper over `induce`).
pub fn gen_second_fundamental_form(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<ShapeData, FieldError> {
    Ok(induce(amb, emb, point)?.shape_data())
}

pub fn gauss_residuals(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<GaussResiduals, FieldError> {
    Ok(induce(amb, emb, point)?.gauss_residuals())
}

pub fn codazzi_residuals(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<CodazziResiduals, FieldError> {
    Ok(induce(amb, emb, point)?.codazzi_residuals())
}

pub fn energy_constraint(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<EnergyConstraint, FieldError> {
    Ok(induce(amb, emb, point)?.energy_constraint())
}

pub fn momentum_constraint(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<MomentumConstraint, FieldError> {
    Ok(induce(amb, emb, point)?.momentum_constraint())
}

pub fn classical_constraints(
    amb: &AmbientStructure,
    emb: &EmbeddingMap,
    point: &[f64],
) -> Result<ClassicalConstraints, FieldError> {
    induce(amb, emb, point)?.classical_constraints()
}

/// How far the divergence pair is from the compatibility conditions
/// `L_X g = 0` and `d xi = i_X H`, in the ambient space and (when an
/// embedding is given) for the induced fields on the hypersurface.
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub ambient_killing: f64,
    pub ambient_flux: f64,
    pub induced_killing: Option<f64>,
    pub induced_flux: Option<f64>,
}

impl CompatibilityReport {
    pub fn max(&self) -> f64 {
        self.ambient_killing
            .max(self.ambient_flux)
            .max(self.induced_killing.unwrap_or(0.0))
            .max(self.induced_flux.unwrap_or(0.0))
    }
}

fn pair_residuals(sj: &StructureJets) -> (f64, f64) {
    let n = sj.dim;
    let killing = crate::classical::lie_derivative_metric(sj, &sj.x_vec).max_abs();
    let mut flux = 0.0f64;
    for mu in 0..n {
        for nu in 0..n {
            let dxi = sj.xi[nu].partial(mu) - sj.xi[mu].partial(nu);
            let mut ixh = 0.0;
            for rho in 0..n {
                ixh += sj.x_vec[rho].value() * sj.h[rho][mu][nu].value();
            }
            flux = flux.max((dxi - ixh).abs());
        }
    }
    (killing, flux)
}

/// Check the compatibility conditions at a point: `point` is a hypersurface
/// point when an embedding is supplied, an ambient point otherwise.
pub fn compatibility_check(
    amb: &AmbientStructure,
    emb: Option<&EmbeddingMap>,
    point: &[f64],
) -> Result<CompatibilityReport, FieldError> {
    match emb {
        None => {
            let sj = amb.jets_at(point)?;
            let (killing, flux) = pair_residuals(&sj);
            Ok(CompatibilityReport {
                ambient_killing: killing,
                ambient_flux: flux,
                induced_killing: None,
                induced_flux: None,
            })
        }
        Some(emb) => {
            let ind = induce(amb, emb, point)?;
            let (killing, flux) = pair_residuals(&ind.ambient);
            let (ind_killing, ind_flux) = pair_residuals(&ind.sigma);
            Ok(CompatibilityReport {
                ambient_killing: killing,
                ambient_flux: flux,
                induced_killing: Some(ind_killing),
                induced_flux: Some(ind_flux),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DilatonField, MetricField, ThreeFormField};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flat_ambient(coords: &[&str]) -> AmbientStructure {
        let chart = Chart::new("flat", coords).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h = ThreeFormField::zero(coords.len());
        let dil = DilatonField::zero(coords.len());
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    fn sphere_embedding(orientation: f64) -> EmbeddingMap {
        let sigma = Chart::new("angles", &["th", "ph"])
            .unwrap()
            .with_domain("th", 0.05, 3.1)
            .unwrap();
        let ambient = Chart::new("flat", &["x", "y", "z"]).unwrap();
        EmbeddingMap::new(
            sigma,
            ambient,
            &["sin(th)*cos(ph)", "sin(th)*sin(ph)", "cos(th)"],
            orientation,
        )
        .unwrap()
    }

    /// Flat metric with a constant-coefficient flux `6 dx dy dz`.
    fn flux_ambient() -> AmbientStructure {
        let chart = Chart::new("flat", &["x", "y", "z"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), "6")]).unwrap();
        let dil = DilatonField::zero(3);
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    fn plane_embedding() -> EmbeddingMap {
        let sigma = Chart::new("plane", &["u", "v"]).unwrap();
        let ambient = Chart::new("flat", &["x", "y", "z"]).unwrap();
        EmbeddingMap::new(sigma, ambient, &["u", "v", "0"], 1.0).unwrap()
    }

    /// Flux ambient with a rotation field and its matching potential: a
    /// compatible pair with non-trivial vector part.
    fn rotation_ambient() -> AmbientStructure {
        let chart = Chart::new("flat", &["x", "y", "z"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), "6")]).unwrap();
        let dil =
            DilatonField::new(&chart, &["-y", "x", "0"], &["0", "0", "-3*(x^2 + y^2)"]).unwrap();
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    /// Curved three-dimensional ambient structure with flux and a generic
    /// (non-compatible) divergence pair.
    fn curved_ambient() -> AmbientStructure {
        let chart = Chart::new("c3", &["x", "y", "z"]).unwrap();
        let metric = MetricField::from_rows(
            &chart,
            &[
                vec!["1 + x^2/4", "x*y/10", "0"],
                vec!["x*y/10", "2 + sin(y)/2", "z/8"],
                vec!["0", "z/8", "1 + exp(z/3)/2"],
            ],
            (3, 0),
        )
        .unwrap();
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), "1 + x*y/5")]).unwrap();
        let dil = DilatonField::new(
            &chart,
            &["y/4", "x*z/7", "1/2"],
            &["z/3", "sin(x)/5", "x*y/6"],
        )
        .unwrap();
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    /// Same metric and flux but an exact divergence pair `X = 0`,
    /// `xi = d((x + y*z/3)/4)`.
    fn exact_dilaton_ambient() -> AmbientStructure {
        let chart = Chart::new("c3", &["x", "y", "z"]).unwrap();
        let metric = MetricField::from_rows(
            &chart,
            &[
                vec!["1 + x^2/4", "x*y/10", "0"],
                vec!["x*y/10", "2 + sin(y)/2", "z/8"],
                vec!["0", "z/8", "1 + exp(z/3)/2"],
            ],
            (3, 0),
        )
        .unwrap();
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), "1 + x*y/5")]).unwrap();
        let dil = DilatonField::new(&chart, &["0", "0", "0"], &["1/4", "z/12", "y/12"]).unwrap();
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    fn graph_embedding(expr: &str) -> EmbeddingMap {
        let sigma = Chart::new("graph", &["u", "v"]).unwrap();
        let ambient = Chart::new("c3", &["x", "y", "z"]).unwrap();
        EmbeddingMap::new(sigma, ambient, &["u", "v", expr], 1.0).unwrap()
    }

    const GRAPH: &str = "u^2/5 + u*v/10 - v^2/5 + 1/10";
    const GRAPH_POINT: [f64; 2] = [0.3, -0.2];

    #[test]
    fn round_sphere_shape_data() {
        let amb = flat_ambient(&["x", "y", "z"]);
        let emb = sphere_embedding(1.0);
        let y = [0.7, 0.3];
        let ind = induce(&amb, &emb, &y).unwrap();
        assert_eq!(ind.epsilon, 1.0);

        // Outward unit normal of the unit sphere is the position itself.
        let p = emb.point(&y).unwrap();
        for mu in 0..3 {
            assert_abs_diff_eq!(ind.normal[mu].value(), p[mu], epsilon = 1e-12);
        }

        let sd = ind.shape_data();
        let s2 = 0.7f64.sin().powi(2);
        assert_abs_diff_eq!(*sd.k.get(&[0, 0]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.k.get(&[1, 1]), s2, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.k.get(&[0, 1]), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.t_plus, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.t_minus, 2.0, epsilon = 1e-12);
        // Pure and mixed blocks collapse to k without flux and divergence.
        assert_abs_diff_eq!(sd.k_pure_plus.sub(&sd.k).max_abs(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.k_mixed_minus.sub(&sd.k).max_abs(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.l_plus.max_abs(), 0.0, epsilon = 1e-15);
        // Shape operator is the identity.
        assert_abs_diff_eq!(*sd.shape_operator.get(&[0, 0]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.shape_operator.get(&[1, 1]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.shape_operator.get(&[0, 1]), 0.0, epsilon = 1e-12);

        // Orientation flip reverses the normal, k and the traces but not
        // epsilon.
        let flipped = induce(&amb, &sphere_embedding(-1.0), &y).unwrap();
        assert_eq!(flipped.epsilon, 1.0);
        let sd_f = flipped.shape_data();
        assert_abs_diff_eq!(sd_f.normal[2], -p[2], epsilon = 1e-12);
        assert_abs_diff_eq!(*sd_f.k.get(&[0, 0]), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd_f.t_plus, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn flux_plane_second_forms_and_flux_split() {
        let amb = flux_ambient();
        let emb = plane_embedding();
        let y = [0.5, 0.25];
        let ind = induce(&amb, &emb, &y).unwrap();
        assert_eq!(ind.epsilon, 1.0);
        assert_abs_diff_eq!(ind.normal[2].value(), 1.0, epsilon = 1e-12);

        let sd = ind.shape_data();
        assert_abs_diff_eq!(sd.k.max_abs(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(*sd.k_pure_plus.get(&[0, 1]), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.k_pure_minus.get(&[0, 1]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.k_mixed_plus.get(&[0, 1]), -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.k_mixed_minus.get(&[0, 1]), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.t_plus, 0.0, epsilon = 1e-12);

        // Tangential flux vanishes, the normal contraction carries all of it.
        let st = ind.induced_structure();
        assert_abs_diff_eq!(st.h_par.max_abs(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(*st.h_perp.get(&[0, 1]), 6.0, epsilon = 1e-12);

        // Reassembling the flux from its split reproduces every contraction
        // against the adapted frame {T_u, T_v, n}.
        let hc = ind.ambient.h_contractions();
        let t = ind.tangent_values();
        let nv = ind.normal_values();
        let frame = [&t[0], &t[1], &nv];
        for (i, a) in frame.iter().enumerate() {
            for (j, b) in frame.iter().enumerate() {
                for (l, c) in frame.iter().enumerate() {
                    let mut full = 0.0;
                    for mu in 0..3 {
                        for nu in 0..3 {
                            for rho in 0..3 {
                                full += hc.h.get(&[mu, nu, rho]) * a[mu] * b[nu] * c[rho];
                            }
                        }
                    }
                    let normals = [i, j, l].iter().filter(|&&s| s == 2).count();
                    let split = match normals {
                        0 => *st.h_par.get(&[i, j, l]),
                        1 => {
                            if i == 2 {
                                *st.h_perp.get(&[j, l])
                            } else if j == 2 {
                                -*st.h_perp.get(&[i, l])
                            } else {
                                *st.h_perp.get(&[i, j])
                            }
                        }
                        _ => 0.0,
                    };
                    assert_abs_diff_eq!(full, split, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn normal_exact_pair_shifts_pure_blocks() {
        // xi = z dz on flat space; on the plane z = 1 the pair is purely
        // normal: <e, n_pm> = 1, no tangential corrector, pure blocks -h/2.
        let chart = Chart::new("flat", &["x", "y", "z"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h = ThreeFormField::zero(3);
        let dil = DilatonField::new(&chart, &["0", "0", "0"], &["0", "0", "z"]).unwrap();
        let amb = AmbientStructure::new(chart, metric, h, dil).unwrap();
        let sigma = Chart::new("plane", &["u", "v"]).unwrap();
        let ambient = Chart::new("flat", &["x", "y", "z"]).unwrap();
        let emb = EmbeddingMap::new(sigma, ambient, &["u", "v", "1"], 1.0).unwrap();

        let ind = induce(&amb, &emb, &[0.2, -0.3]).unwrap();
        assert_abs_diff_eq!(ind.e_perp_plus.value(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ind.e_perp_minus.value(), 1.0, epsilon = 1e-12);
        let sd = ind.shape_data();
        assert_abs_diff_eq!(sd.l_plus.max_abs(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sd.l_minus.max_abs(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(*sd.k_pure_plus.get(&[0, 0]), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(*sd.k_pure_minus.get(&[1, 1]), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.t_plus, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn mixed_blocks_are_band_transposes_and_traces_agree() {
        let amb = curved_ambient();
        let emb = graph_embedding(GRAPH);
        let ind = induce(&amb, &emb, &GRAPH_POINT).unwrap();
        let sd = ind.shape_data();
        let n = ind.dim_sigma;

        // K^-(a_+, b_-) = K^+(b_-, a_+).
        for a in 0..n {
            for b in 0..n {
                assert_abs_diff_eq!(
                    *sd.k_mixed_minus.get(&[a, b]),
                    *sd.k_mixed_plus.get(&[b, a]),
                    epsilon = 1e-12
                );
            }
        }

        // Trace of the pure block equals tr_h k - <e, n_pm>.
        let hinv = ind.sigma.g_inv_vals();
        for band in [1.0f64, -1.0] {
            let sf = ind.second_form_jets();
            let block = sf.pure(band).values();
            let mut tr = 0.0;
            for a in 0..n {
                for b in 0..n {
                    tr += hinv.get(&[a, b]) * block.get(&[a, b]);
                }
            }
            assert_abs_diff_eq!(tr, sf.trace(band).value(), epsilon = 1e-10);
        }
    }

    #[test]
    fn inherited_connection_is_metric_and_shifts_divergence() {
        let amb = curved_ambient();
        let emb = graph_embedding(GRAPH);
        let ind = induce(&amb, &emb, &GRAPH_POINT).unwrap();
        let sig_chr = christoffels(&ind.sigma);
        let chi = canonical_chi_scale(ind.dim_ambient);
        let conn = InheritedConnection::new(&ind.sigma, &sig_chr, chi);
        let n = ind.dim_sigma;

        // First fundamental form is parallel for every band combination.
        let mut h_jt = JetTensor::zeros(n, n, vec![Variance::Down, Variance::Down]);
        for a in 0..n {
            for b in 0..n {
                h_jt.set(&[a, b], ind.sigma.g[a][b].clone());
            }
        }
        for dir_band in [1.0f64, -1.0] {
            for slot_band in [1.0f64, -1.0] {
                let grad =
                    banded_covariant_derivative(&conn, dir_band, &[slot_band, slot_band], &h_jt);
                assert!(
                    grad.values().max_abs() < 1e-10,
                    "metricity failed for bands ({dir_band}, {slot_band})"
                );
            }
        }

        // Trace of the same-band rule shifts the divergence of a vector
        // field by -band (d-2)/(d-1) h(e_par, A).
        let a_field: Vec<Jet3> = (0..n)
            .map(|i| Jet3::constant(n, 0.4 + 0.3 * i as f64))
            .collect();
        let d = ind.dim_ambient as f64;
        for band in [1.0f64, -1.0] {
            let lhs = divergence(conn.slot_rule(band, band), &a_field).value();
            let base = divergence(&sig_chr.lc, &a_field).value();
            let e_par = e_band(&ind.sigma, band);
            let mut pairing = 0.0;
            for i in 0..n {
                for j in 0..n {
                    pairing += ind.sigma.g[i][j].value() * e_par[i].value() * a_field[j].value();
                }
            }
            let want = base - band * (d - 2.0) / (d - 1.0) * pairing;
            assert_abs_diff_eq!(lhs, want, epsilon = 1e-11);
        }
    }

    #[test]
    fn gauss_relations_hold_on_round_sphere() {
        let amb = flat_ambient(&["x", "y", "z"]);
        let emb = sphere_embedding(1.0);
        let ind = induce(&amb, &emb, &[0.7, 0.3]).unwrap();
        let res = ind.gauss_residuals();
        assert!(res.max() < 1e-10, "sphere Gauss residuals: {res:?}");

        // Spot value: the curvature terms reduce to minus twice the
        // sectional value of the round metric.
        let sig_chr = christoffels(&ind.sigma);
        let sig = gen_riemann(&ind.sigma, &sig_chr, canonical_chi_scale(3));
        let s2 = 0.7f64.sin().powi(2);
        assert_abs_diff_eq!(*sig.pure_plus.get(&[0, 1, 0, 1]), s2, epsilon = 1e-10);
    }

    #[test]
    fn gauss_relations_hold_on_flux_plane_and_curved_graph() {
        let res = gauss_residuals(&flux_ambient(), &plane_embedding(), &[0.5, 0.25]).unwrap();
        assert!(res.max() < 1e-12, "flux plane Gauss residuals: {res:?}");

        let res = gauss_residuals(&curved_ambient(), &graph_embedding(GRAPH), &GRAPH_POINT).unwrap();
        assert!(res.max() < 1e-9, "curved graph Gauss residuals: {res:?}");
    }

    #[test]
    fn codazzi_relations_hold_on_flux_plane_and_curved_graph() {
        let res = codazzi_residuals(&flux_ambient(), &plane_embedding(), &[0.5, 0.25]).unwrap();
        assert!(res.max() < 1e-12, "flux plane Codazzi residuals: {res:?}");

        let res =
            codazzi_residuals(&curved_ambient(), &graph_embedding(GRAPH), &GRAPH_POINT).unwrap();
        assert!(res.max() < 1e-9, "curved graph Codazzi residuals: {res:?}");

        let res = codazzi_residuals(&flat_ambient(&["x", "y", "z"]), &sphere_embedding(1.0), &[
            0.7, 0.3,
        ])
        .unwrap();
        assert!(res.max() < 1e-10, "sphere Codazzi residuals: {res:?}");
    }

    #[test]
    fn energy_constraint_on_unit_spheres() {
        // S^2 in flat R^3: scalar 2, trace 2, |k|^2 = 2 -> both sides vanish.
        let e2 = energy_constraint(&flat_ambient(&["x", "y", "z"]), &sphere_embedding(1.0), &[
            0.7, 0.3,
        ])
        .unwrap();
        assert!(e2.residual < 1e-10, "energy residual on S^2: {e2:?}");
        assert_abs_diff_eq!(e2.lhs, 0.0, epsilon = 1e-10);

        // S^3 in flat R^4: scalar 6, trace 3, |k|^2 = 3.
        let sigma = Chart::new("angles", &["a", "b", "c"])
            .unwrap()
            .with_domain("a", 0.05, 3.1)
            .unwrap()
            .with_domain("b", 0.05, 3.1)
            .unwrap();
        let ambient = Chart::new("flat", &["x", "y", "z", "w"]).unwrap();
        let emb = EmbeddingMap::new(
            sigma,
            ambient,
            &[
                "sin(a)*sin(b)*cos(c)",
                "sin(a)*sin(b)*sin(c)",
                "sin(a)*cos(b)",
                "cos(a)",
            ],
            1.0,
        )
        .unwrap();
        let amb = flat_ambient(&["x", "y", "z", "w"]);
        let ind = induce(&amb, &emb, &[0.8, 0.6, 0.3]).unwrap();
        let sd = ind.shape_data();
        assert_abs_diff_eq!(sd.t_plus.abs(), 3.0, epsilon = 1e-10);
        let e3 = ind.energy_constraint();
        assert!(e3.residual < 1e-10, "energy residual on S^3: {e3:?}");
    }

    #[test]
    fn flux_plane_energy_spot_value() {
        // 2 Rc(n,n) = -36, eps Sc = -18, so both sides equal -18: the
        // hypersurface side is carried entirely by |K|^2 = |H_perp|^2/4.
        let e = energy_constraint(&flux_ambient(), &plane_embedding(), &[0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(e.lhs, -18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.rhs, -18.0, epsilon = 1e-12);
        assert!(e.residual < 1e-12);
    }

    #[test]
    fn energy_and_momentum_constraints_on_curved_graph() {
        // The energy identity holds for an arbitrary divergence pair.
        let ind = induce(&curved_ambient(), &graph_embedding(GRAPH), &GRAPH_POINT).unwrap();
        let e = ind.energy_constraint();
        assert!(e.residual < 1e-9, "energy: {e:?}");
        // Non-trivial sides: the slicing is not vacuum.
        assert!(e.lhs.abs() > 1e-3, "expected a non-trivial energy value: {e:?}");

        // The momentum identity needs a compatible pair; check it on two of
        // them, one with a non-trivial vector part.
        let ind = induce(&rotation_ambient(), &graph_embedding(GRAPH), &GRAPH_POINT).unwrap();
        let m = ind.momentum_constraint();
        assert!(m.residual < 1e-9, "momentum (rotation pair): {m:?}");
        assert!(m.lhs_plus.max_abs() > 1e-3, "expected non-trivial momentum: {m:?}");

        let ind = induce(&exact_dilaton_ambient(), &graph_embedding(GRAPH), &GRAPH_POINT).unwrap();
        let m = ind.momentum_constraint();
        assert!(m.residual < 1e-9, "momentum (exact dilaton): {m:?}");

        let m0 = momentum_constraint(&flux_ambient(), &plane_embedding(), &[0.5, 0.25]).unwrap();
        assert!(m0.residual < 1e-12);
        assert!(m0.lhs_plus.max_abs() < 1e-12);
    }

    #[test]
    fn classical_constraints_reduce_the_generalised_ones() {
        let amb = exact_dilaton_ambient();
        let emb = graph_embedding(GRAPH);
        let ind = induce(&amb, &emb, &GRAPH_POINT).unwrap();
        let cls = ind.classical_constraints().unwrap();
        let energy = ind.energy_constraint();
        let momentum = ind.momentum_constraint();

        // Hamiltonian gap equals the (identical) sides of the energy
        // constraint.
        assert_abs_diff_eq!(cls.hamiltonian_gap, energy.rhs, epsilon = 1e-9);
        assert!(energy.rhs.abs() > 1e-3, "expected curved test data: {energy:?}");

        // Momentum and flux gaps are the symmetric and antisymmetric band
        // combinations of the generalised momentum sides.
        for al in 0..ind.dim_sigma {
            let plus = momentum.rhs_plus.get(&[al]);
            let minus = momentum.rhs_minus.get(&[al]);
            assert_abs_diff_eq!(2.0 * cls.momentum_gap.get(&[al]), plus + minus, epsilon = 1e-9);
            assert_abs_diff_eq!(*cls.flux_gap.get(&[al]), minus - plus, epsilon = 1e-9);
        }

        // A vector part in the pair disables the decomposition.
        let err = classical_constraints(&curved_ambient(), &emb, &GRAPH_POINT).unwrap_err();
        assert!(
            err.to_string().contains("classical decomposition requires"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn null_normals_and_degenerate_jacobians_are_rejected() {
        let chart = Chart::new("mink", &["x", "y", "z"]).unwrap();
        let metric = MetricField::from_rows(
            &chart,
            &[
                vec!["1", "0", "0"],
                vec!["0", "1", "0"],
                vec!["0", "0", "-1"],
            ],
            (2, 1),
        )
        .unwrap();
        let amb = AmbientStructure::new(
            chart,
            metric,
            ThreeFormField::zero(3),
            DilatonField::zero(3),
        )
        .unwrap();

        let sigma = Chart::new("sheet", &["u", "v"]).unwrap();
        let ambient = Chart::new("mink", &["x", "y", "z"]).unwrap();
        let null = EmbeddingMap::new(sigma.clone(), ambient.clone(), &["u", "v", "v"], 1.0).unwrap();
        let err = induce(&amb, &null, &[0.1, 0.2]).unwrap_err();
        assert!(
            err.to_string().contains("null hypersurface unsupported"),
            "unexpected error: {err}"
        );

        let folded = EmbeddingMap::new(sigma, ambient, &["u", "u", "0"], 1.0).unwrap();
        let err = induce(&amb, &folded, &[0.1, 0.2]).unwrap_err();
        assert!(err.to_string().contains("rank-deficient"), "unexpected error: {err}");
    }

    #[test]
    fn compatibility_check_reports_pair_conditions() {
        // Rotation field with the matching exact potential: compatible.
        let amb = rotation_ambient();
        let rep = compatibility_check(&amb, Some(&plane_embedding()), &[0.5, 0.25]).unwrap();
        assert!(rep.max() < 1e-12, "compatible pair should have no residuals: {rep:?}");
        assert!(rep.induced_killing.is_some());

        // Dropping the potential leaves the flux residual i_X H.
        let chart = Chart::new("flat", &["x", "y", "z"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), "6")]).unwrap();
        let dil = DilatonField::new(&chart, &["-y", "x", "0"], &["0", "0", "0"]).unwrap();
        let amb = AmbientStructure::new(chart, metric, h, dil).unwrap();
        let rep = compatibility_check(&amb, None, &[0.5, 0.25, 0.0]).unwrap();
        assert_abs_diff_eq!(rep.ambient_killing, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.ambient_flux, 3.0, epsilon = 1e-12);
        assert!(rep.induced_killing.is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Gauss relations and block symmetries on random graph
        /// hypersurfaces inside the curved ambient structure.
        #[test]
        fn gauss_relations_hold_on_random_graphs(
            a in -5i32..=5,
            b in -5i32..=5,
            c in -5i32..=5,
        ) {
            let expr = format!("({a})*u^2/10 + ({b})*u*v/10 + ({c})*v^2/10 + 1/10");
            let emb = graph_embedding(&expr);
            let ind = induce(&curved_ambient(), &emb, &GRAPH_POINT).unwrap();

            let res = ind.gauss_residuals();
            prop_assert!(res.max() < 1e-8, "Gauss residuals: {:?}", res);

            let sd = ind.shape_data();
            for i in 0..ind.dim_sigma {
                for j in 0..ind.dim_sigma {
                    prop_assert!(
                        (sd.k.get(&[i, j]) - sd.k.get(&[j, i])).abs() < 1e-10,
                        "k must be symmetric"
                    );
                    prop_assert!(
                        (sd.k_mixed_minus.get(&[i, j]) - sd.k_mixed_plus.get(&[j, i])).abs()
                            < 1e-10,
                        "mixed blocks must be band transposes"
                    );
                }
            }
        }
    }

}
