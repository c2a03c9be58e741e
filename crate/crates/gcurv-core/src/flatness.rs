//! Diagnostics for canonically flat structures.
//!
//! A structure whose canonical connection has vanishing generalised
//! curvature satisfies a rigid package of pointwise equations: the base
//! metric is conformally flat (vanishing Weyl tensor), the flux is parallel,
//! the band vectors have pure-trace gradients, a scalar equation ties
//! `|H|^2` to the divergence and norm of the band vector, and the quadratic
//! part of the Riemann tensor is an explicit algebraic expression in the
//! band data. [`flatness_report`] evaluates all of them as residuals.
//!
//! In Riemannian signature flatness forces complete triviality
//! ([`triviality_check`]); in neutral signature it does not, and
//! [`neutral_flat_example`] builds the canonical counterexample: a
//! conformally flat metric on `R^{2m}` with null band vector and a
//! two-parameter family of null flux terms.

use crate::classical::{christoffels, covariant_derivative, curvature, Christoffels, JetTensor};
use crate::fields::{
    AmbientStructure, Chart, DilatonField, FieldError, MetricField, StructureJets, ThreeFormField,
};
use crate::gen_curvature::{canonical_chi_scale, div_e, e_band, gen_riemann};
use crate::scenario::ResidualReport;
use crate::tensor::{Tensor, Variance};

/// Residual norms of the flatness conclusions; every field is a
/// non-negative max-abs and vanishes (to tolerance) on canonically flat
/// structures.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FlatnessReport {
    /// max |Rm^D| over the four generalised curvature blocks.
    pub max_riemann: f64,
    /// max |Weyl| of the base metric.
    pub weyl: f64,
    /// max |nabla H| (Levi-Civita).
    pub nabla_h: f64,
    /// max |g nabla^+ pi e_+ - (div(pi e_+)/d) g|.
    pub e_gradient_plus: f64,
    /// Same for the minus band with the minus Bismut connection.
    pub e_gradient_minus: f64,
    /// Scalar equation `|H|^2/6 + div(pi e_+) - |pi e_+|^2`.
    pub dilaton_eom: f64,
    /// Quadratic flux identity: `H2(A,B,A,B)/6` against the divergence and
    /// Q-tensor terms, maximised over orthogonal basis pairs and bands.
    pub q_vs_h2: f64,
    /// |div(pi e_+) + div(pi e_-)|.
    pub div_antisymmetry: f64,
    /// Quadratic Riemann formula residual over orthogonal basis pairs and
    /// bands.
    pub quadratic_riemann: f64,
}

impl FlatnessReport {
    /// Largest entry — zero iff every conclusion holds exactly.
    pub fn max(&self) -> f64 {
        self.max_riemann
            .max(self.weyl)
            .max(self.nabla_h)
            .max(self.e_gradient_plus)
            .max(self.e_gradient_minus)
            .max(self.dilaton_eom.abs())
            .max(self.q_vs_h2)
            .max(self.div_antisymmetry)
            .max(self.quadratic_riemann)
    }
}

fn pairing(g: &Tensor<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            s += g.get(&[i, j]) * a[i] * b[j];
        }
    }
    s
}

fn quad4(t: &Tensor<f64>, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if b[j] == 0.0 {
                continue;
            }
            for k in 0..n {
                if c[k] == 0.0 {
                    continue;
                }
                for l in 0..n {
                    s += t.get(&[i, j, k, l]) * a[i] * b[j] * c[k] * d[l];
                }
            }
        }
    }
    s
}

/// Ordered coordinate-basis pairs `(A, B)` with `g(A, B) = 0`, enforced by
/// one Gram-Schmidt step where possible. A pair whose first leg is null and
/// not already orthogonal to the second cannot be orthogonalised along
/// itself and is skipped (shifting `B` by multiples of a null `A` never
/// changes `g(A, B)`).
fn orthogonal_pairs(sj: &StructureJets) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = sj.dim;
    let g = sj.g_vals();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut a = vec![0.0; n];
            a[i] = 1.0;
            let mut b = vec![0.0; n];
            b[j] = 1.0;
            let gab = *g.get(&[i, j]);
            if gab.abs() > 1e-13 {
                let gaa = *g.get(&[i, i]);
                if gaa.abs() < 1e-13 {
                    continue;
                }
                b[i] -= gab / gaa;
            }
            out.push((a, b));
        }
    }
    out
}

/// Residual of the pure-trace gradient equation for one band:
/// max |g(nabla^pm_v pi e_pm, w) - (div(pi e_pm)/d) g_{vw}|.
fn e_gradient_residual(sj: &StructureJets, chr: &Christoffels, band: f64) -> f64 {
    let n = sj.dim;
    let gamma = chr.with_h_scale(band, 0.5);
    let e = e_band(sj, band);
    let scale = div_e(sj, chr, band) / n as f64;
    let mut worst = 0.0f64;
    for v in 0..n {
        for w in 0..n {
            let mut lowered = 0.0;
            for k in 0..n {
                let mut up = e[k].partial(v);
                for m in 0..n {
                    up += gamma[k][v][m].value() * e[m].value();
                }
                lowered += sj.g[w][k].value() * up;
            }
            worst = worst.max((lowered - scale * sj.g[v][w].value()).abs());
        }
    }
    worst
}

/// Quadratic flux identity residual: over orthogonal pairs and both bands,
/// `H2(A,B,A,B)/6 + band * div(pi e)/(d(d-1)) * CS(A,B) - Q(A,B)` with
/// `CS(A,B) = |A|^2 |B|^2 - g(A,B)^2` and the Q-tensor
/// `Q(A,B) = (2|e|^2 CS - |B|^2 g(A,e)^2 - |A|^2 g(B,e)^2
///            + 2 g(A,B) g(A,e) g(B,e)) / (2(d-1)^2)`.
fn q_vs_h2(sj: &StructureJets, chr: &Christoffels) -> f64 {
    let d = sj.dim as f64;
    let g = sj.g_vals();
    let h2 = sj.h_contractions().h2;
    let pairs = orthogonal_pairs(sj);
    let mut worst = 0.0f64;
    for band in [1.0f64, -1.0] {
        let e: Vec<f64> = e_band(sj, band).iter().map(|j| j.value()).collect();
        let e2 = pairing(&g, &e, &e);
        let dive = div_e(sj, chr, band);
        for (a, b) in &pairs {
            let a2 = pairing(&g, a, a);
            let b2 = pairing(&g, b, b);
            let gab = pairing(&g, a, b);
            let cs = a2 * b2 - gab * gab;
            let gae = pairing(&g, a, &e);
            let gbe = pairing(&g, b, &e);
            let q = (2.0 * e2 * cs - b2 * gae * gae - a2 * gbe * gbe
                + 2.0 * gab * gae * gbe)
                / (2.0 * (d - 1.0) * (d - 1.0));
            let lhs = quad4(&h2, a, b, a, b) / 6.0;
            let rhs = -band * dive / (d * (d - 1.0)) * cs + q;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Quadratic Riemann formula residual over orthogonal pairs and bands:
/// `Rm(A,B,A,B) - band * div(pi e)/(2d(d-1)) * |A|^2 |B|^2
///  - 3/(4(d-1)^2) * (2|e|^2 |A|^2 |B|^2 - |B|^2 g(A,e)^2 - |A|^2 g(B,e)^2)`.
fn quadratic_riemann(sj: &StructureJets, chr: &Christoffels, rm: &Tensor<f64>) -> f64 {
    let d = sj.dim as f64;
    let g = sj.g_vals();
    let pairs = orthogonal_pairs(sj);
    let mut worst = 0.0f64;
    for band in [1.0f64, -1.0] {
        let e: Vec<f64> = e_band(sj, band).iter().map(|j| j.value()).collect();
        let e2 = pairing(&g, &e, &e);
        let dive = div_e(sj, chr, band);
        for (a, b) in &pairs {
            let a2 = pairing(&g, a, a);
            let b2 = pairing(&g, b, b);
            let gae = pairing(&g, a, &e);
            let gbe = pairing(&g, b, &e);
            let lhs = quad4(rm, a, b, a, b);
            let rhs = band * dive / (2.0 * d * (d - 1.0)) * a2 * b2
                + 3.0 / (4.0 * (d - 1.0) * (d - 1.0))
                    * (2.0 * e2 * a2 * b2 - b2 * gae * gae - a2 * gbe * gbe);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

fn h_jets(sj: &StructureJets) -> JetTensor {
    let n = sj.dim;
    let mut t = JetTensor::zeros(n, n, vec![Variance::Down; 3]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                t.set(&[i, j, k], sj.h[i][j][k].clone());
            }
        }
    }
    t
}

/// Evaluate every flatness conclusion as a residual at one point.
pub fn flatness_report(amb: &AmbientStructure, point: &[f64]) -> Result<FlatnessReport, FieldError> {
    if amb.dim() < 3 {
        return Err(FieldError::Validation(
            "flatness diagnostics need chart dimension >= 3".into(),
        ));
    }
    let sj = amb.jets_at(point)?;
    let chr = christoffels(&sj);
    let cb = curvature(&sj, &chr);
    let gr = gen_riemann(&sj, &chr, canonical_chi_scale(sj.dim));
    let hc = sj.h_contractions();
    let ds = sj.dilaton_split();
    let dive_plus = div_e(&sj, &chr, 1.0);
    let dive_minus = div_e(&sj, &chr, -1.0);

    Ok(FlatnessReport {
        max_riemann: gr.max_abs(),
        weyl: cb.weyl.max_abs(),
        nabla_h: covariant_derivative(&chr.lc, &h_jets(&sj)).values().max_abs(),
        e_gradient_plus: e_gradient_residual(&sj, &chr, 1.0),
        e_gradient_minus: e_gradient_residual(&sj, &chr, -1.0),
        dilaton_eom: hc.h_norm2 / 6.0 + dive_plus - ds.e_plus_norm2,
        q_vs_h2: q_vs_h2(&sj, &chr),
        div_antisymmetry: (dive_plus + dive_minus).abs(),
        quadratic_riemann: quadratic_riemann(&sj, &chr, &cb.rm),
    })
}

/// The quadratic flux identity alone (first-order data only).
pub fn q_vs_h2_residual(amb: &AmbientStructure, point: &[f64]) -> Result<f64, FieldError> {
    let sj = amb.jets_at(point)?;
    let chr = christoffels(&sj);
    Ok(q_vs_h2(&sj, &chr))
}

/// Triviality residuals: the quantities that flatness forces to vanish in
/// any signature, plus the raw flux/generator components in Riemannian
/// signature (where flatness forces complete triviality).
pub fn triviality_check(amb: &AmbientStructure, point: &[f64]) -> Result<ResidualReport, FieldError> {
    let sj = amb.jets_at(point)?;
    let chr = christoffels(&sj);
    let hc = sj.h_contractions();
    let ds = sj.dilaton_split();
    let n = sj.dim;
    let tol = 1e-8;

    let mut rep = ResidualReport::new(&amb.chart.name, "triviality", point);
    rep.push("h_norm2", hc.h_norm2, tol);
    rep.push("e_plus_norm2", ds.e_plus_norm2, tol);
    rep.push("e_minus_norm2", ds.e_minus_norm2, tol);

    for band in [1.0f64, -1.0] {
        let tag = if band > 0.0 { "plus" } else { "minus" };
        let e = e_band(&sj, band);

        let mut interior = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += e[i].value() * sj.h[i][j][k].value();
                }
                interior = interior.max(s.abs());
            }
        }
        rep.push(&format!("interior_flux_{tag}"), interior, tol);

        let mut bismut = 0.0f64;
        let mut lc = 0.0f64;
        let gamma_pm = chr.with_h_scale(band, 0.5);
        for v in 0..n {
            for k in 0..n {
                let mut up_pm = e[k].partial(v);
                let mut up_lc = e[k].partial(v);
                for m in 0..n {
                    up_pm += gamma_pm[k][v][m].value() * e[m].value();
                    up_lc += chr.lc[k][v][m].value() * e[m].value();
                }
                bismut = bismut.max(up_pm.abs());
                lc = lc.max(up_lc.abs());
            }
        }
        rep.push(&format!("bismut_gradient_{tag}"), bismut, tol);
        rep.push(&format!("lc_gradient_{tag}"), lc, tol);
    }

    if sj.signature.1 == 0 {
        // Riemannian: vanishing norms already force vanishing components,
        // so report them directly (complete triviality).
        rep.push("h_components", hc.h.max_abs(), tol);
        let e_comp = ds
            .x_vec
            .iter()
            .chain(ds.xi.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        rep.push("e_components", e_comp, tol);
    }
    Ok(rep)
}

/// Residual of the conformal-factor Ricci equation with the gradient ansatz
/// `d phi = sigma * sqrt(3)/(2(d-1)) * g pi e_+`:
/// `Rc - (d-2)(nabla d phi - d phi (x) d phi)
///     - (lap phi + (d-2)|d phi|^2) g`, max over components.
pub fn conformal_factor_residual(
    amb: &AmbientStructure,
    point: &[f64],
    sigma: f64,
) -> Result<f64, FieldError> {
    if sigma != 1.0 && sigma != -1.0 {
        return Err(FieldError::Validation(format!(
            "conformal factor sign must be +1 or -1, got {sigma}"
        )));
    }
    let sj = amb.jets_at(point)?;
    let chr = christoffels(&sj);
    let cb = curvature(&sj, &chr);
    let n = sj.dim;
    let d = n as f64;
    let c = sigma * 3.0f64.sqrt() / (2.0 * (d - 1.0));

    let mut e_up = JetTensor::zeros(n, n, vec![Variance::Up]);
    for (i, jet) in sj.e_plus.iter().enumerate() {
        e_up.set(&[i], jet.clone());
    }
    let grad_e = covariant_derivative(&chr.lc, &e_up);

    // d phi as a covector and its lowered covariant gradient.
    let mut dphi = vec![0.0; n];
    for (i, slot) in dphi.iter_mut().enumerate() {
        for k in 0..n {
            *slot += c * sj.g[i][k].value() * sj.e_plus[k].value();
        }
    }
    let mut hess = Tensor::square(n, 2, Variance::Down);
    for v in 0..n {
        for w in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += c * sj.g[w][k].value() * grad_e.get(&[v, k]).value();
            }
            hess.set(&[v, w], s);
        }
    }
    let lap = c * div_e(&sj, &chr, 1.0);
    let ds = sj.dilaton_split();
    let dphi_norm2 = c * c * ds.e_plus_norm2;

    let mut worst = 0.0f64;
    for v in 0..n {
        for w in 0..n {
            let rhs = (d - 2.0) * (hess.get(&[v, w]) - dphi[v] * dphi[w])
                + (lap + (d - 2.0) * dphi_norm2) * sj.g[v][w].value();
            worst = worst.max((cb.rc.get(&[v, w]) - rhs).abs());
        }
    }
    Ok(worst)
}

/// The neutral-signature flat structure on `R^{2m}`, `d = 2m > 2`, in
/// coordinates `(u, v, x2..xm, y2..ym)` over `u > 0`:
///
/// * metric `g = (du dv + sum_i (dx_i^2 - dy_i^2)) / u` of signature (m, m),
/// * flux `H = sum_i u^{-2} du ^ dx_i ^ dy_i`,
/// * generator `e = 2X` with `X = pi e_+ = 2(d-1)/sqrt(3) d_v` (null).
///
/// `pi e_+ = pi e_-` is one of the two consistent completions (the structure
/// only determines `pi e_+` up to the relative band sign); flatness holds
/// either way.
pub fn neutral_flat_example(m: usize) -> Result<AmbientStructure, FieldError> {
    if m < 2 {
        return Err(FieldError::Validation(format!(
            "the neutral flat example needs m >= 2 (dimension 2m > 2), got m = {m}"
        )));
    }
    let mut coords: Vec<String> = vec!["u".into(), "v".into()];
    for i in 2..=m {
        coords.push(format!("x{i}"));
    }
    for i in 2..=m {
        coords.push(format!("y{i}"));
    }
    let coord_refs: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
    // Keep sample points clear of the u = 0 metric singularity.
    let chart = Chart::new("neutral_flat", &coord_refs)?.with_domain("u", 1e-3, f64::INFINITY)?;

    let n = 2 * m;
    let mut rows_owned = vec![vec!["0".to_string(); n]; n];
    rows_owned[0][1] = "1/(2*u)".into();
    rows_owned[1][0] = "1/(2*u)".into();
    for i in 2..=m {
        rows_owned[i][i] = "1/u".into();
        rows_owned[m - 1 + i][m - 1 + i] = "-1/u".into();
    }
    let rows: Vec<Vec<&str>> = rows_owned.iter().map(|r| r.iter().map(|s| s.as_str()).collect()).collect();
    let metric = MetricField::from_rows(&chart, &rows, (m, m))?;

    let mut h_components: Vec<((usize, usize, usize), String)> = Vec::new();
    for i in 2..=m {
        h_components.push(((0, i, m - 1 + i), "1/u^2".to_string()));
    }
    let h_refs: Vec<((usize, usize, usize), &str)> =
        h_components.iter().map(|(idx, s)| (*idx, s.as_str())).collect();
    let h_field = ThreeFormField::new(&chart, &h_refs)?;

    let x_v = format!("2*{}/sqrt(3)", n - 1);
    let mut x_comp: Vec<String> = vec!["0".into(); n];
    x_comp[1] = x_v;
    let x_refs: Vec<&str> = x_comp.iter().map(|s| s.as_str()).collect();
    let zero_refs: Vec<&str> = vec!["0"; n];
    let dilaton = DilatonField::new(&chart, &x_refs, &zero_refs)?;

    AmbientStructure::new(chart, metric, h_field, dilaton)
}
