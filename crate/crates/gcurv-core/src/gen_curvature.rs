//! Generalised curvature of the canonical band-preserving connection.
//!
//! The connection acts on the two metric bands of `TM (+) T*M`; its
//! curvature splits into four nonzero blocks indexed by the band pattern of
//! the arguments. Blocks are stored as chart tensors over the band
//! projections (every band section is `sigma_pm A` for a vector `A`):
//!
//! * `pure_plus[a][b][v][w]`  = Rm(s+a, s+b, s+v, s+w)
//! * `pure_minus[a][b][v][w]` = Rm(s-a, s-b, s-v, s-w)
//! * `mixed_plus[a][b][v][w]` = Rm(s+a, s-b, s+v, s+w)
//! * `mixed_minus[a][b][v][w]`= Rm(s-a, s+b, s-v, s-w)
//!
//! The divergence correction enters through the band vectors `pi e_pm` with
//! a weight `chi_scale`; the canonical weight on a chart of dimension `d`
//! is `1/(d-1)`, and the same code evaluates induced hypersurface
//! connections by passing the ambient weight instead.

use crate::classical::{covariant_derivative, curvature, divergence, Christoffels, JetTensor};
use crate::fields::StructureJets;
use crate::jet::Jet3;
use crate::tensor::{Tensor, Variance};

/// Canonical divergence weight for a chart of dimension `d`.
pub fn canonical_chi_scale(d: usize) -> f64 {
    1.0 / (d as f64 - 1.0)
}

/// Band projection vector `pi e_+` or `pi e_-` as jets.
pub fn e_band(sj: &StructureJets, band: f64) -> &[Jet3] {
    if band > 0.0 {
        &sj.e_plus
    } else {
        &sj.e_minus
    }
}

/// The algebraic divergence corrector as a (0,3) tensor:
/// `chi[a][b][c] = g(a,b) g(pi e,c) - g(a,c) g(pi e,b)` for the chosen band.
pub fn chi_eval(sj: &StructureJets, band: f64) -> Tensor<f64> {
    let n = sj.dim;
    let e = e_band(sj, band);
    let mut ge = vec![0.0; n];
    for (i, slot) in ge.iter_mut().enumerate() {
        for k in 0..n {
            *slot += sj.g[i][k].value() * e[k].value();
        }
    }
    let mut t = Tensor::square(n, 3, Variance::Down);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                t.set(&[a, b, c], sj.g[a][b].value() * ge[c] - sj.g[a][c].value() * ge[b]);
            }
        }
    }
    t
}

/// First-order part of the connection acting on the corrector:
/// `out[c][a][v][w] = g(a,v) g(nabla_c pi e, w) - g(a,w) g(nabla_c pi e, v)`,
/// where `nabla` carries torsion scale `band/6` when the direction lies in
/// the corrector's own band and `band/2` otherwise.
pub fn chi_covariant(sj: &StructureJets, chr: &Christoffels, band: f64, dir_band: f64) -> Tensor<f64> {
    let n = sj.dim;
    let scale = if dir_band == band { 1.0 / 6.0 } else { 0.5 };
    let gamma = chr.with_h_scale(band, scale);
    let e = e_band(sj, band);

    // Lowered derivative L[c][w] = g(nabla_c pi e, d_w).
    let mut low = vec![vec![0.0; n]; n];
    for (c, row) in low.iter_mut().enumerate() {
        for k in 0..n {
            let mut up = e[k].partial(c);
            for m in 0..n {
                up += gamma[k][c][m].value() * e[m].value();
            }
            for (w, slot) in row.iter_mut().enumerate() {
                *slot += sj.g[w][k].value() * up;
            }
        }
    }

    let gv = |i: usize, j: usize| sj.g[i][j].value();
    let mut t = Tensor::square(n, 4, Variance::Down);
    for c in 0..n {
        for a in 0..n {
            for v in 0..n {
                for w in 0..n {
                    t.set(&[c, a, v, w], gv(a, v) * low[c][w] - gv(a, w) * low[c][v]);
                }
            }
        }
    }
    t
}

/// The four curvature blocks.
#[derive(Debug, Clone)]
pub struct GenRiemann {
    pub pure_plus: Tensor<f64>,
    pub pure_minus: Tensor<f64>,
    pub mixed_plus: Tensor<f64>,
    pub mixed_minus: Tensor<f64>,
}

impl GenRiemann {
    pub fn max_abs(&self) -> f64 {
        self.pure_plus
            .max_abs()
            .max(self.pure_minus.max_abs())
            .max(self.mixed_plus.max_abs())
            .max(self.mixed_minus.max_abs())
    }
}

fn h_jet_tensor(sj: &StructureJets) -> JetTensor {
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

fn xi_jet_tensor(sj: &StructureJets) -> JetTensor {
    let n = sj.dim;
    let mut t = JetTensor::zeros(n, n, vec![Variance::Down]);
    for i in 0..n {
        t.set(&[i], sj.xi[i].clone());
    }
    t
}

/// All four blocks of the generalised curvature tensor, evaluated from the
/// closed-form blockwise expressions.
pub fn gen_riemann(sj: &StructureJets, chr: &Christoffels, chi_scale: f64) -> GenRiemann {
    let n = sj.dim;
    let s = chi_scale;
    let cb = curvature(sj, chr);
    let hc = sj.h_contractions();
    let nh = covariant_derivative(&chr.lc, &h_jet_tensor(sj)).values();
    let gv = |i: usize, j: usize| sj.g[i][j].value();

    let mut blocks: Vec<Tensor<f64>> = Vec::with_capacity(4);
    for band in [1.0f64, -1.0] {
        let e = e_band(sj, band);
        // Lowered corrector vector and its squared length.
        let mut ge = vec![0.0; n];
        for (i, slot) in ge.iter_mut().enumerate() {
            for k in 0..n {
                *slot += gv(i, k) * e[k].value();
            }
        }
        let e2: f64 = (0..n).map(|i| ge[i] * e[i].value()).sum();

        let chi_same = chi_covariant(sj, chr, band, band);
        let chi_opp = chi_covariant(sj, chr, band, -band);

        let mut pure = Tensor::square(n, 4, Variance::Down);
        let mut mixed = Tensor::square(n, 4, Variance::Down);
        for a in 0..n {
            for b in 0..n {
                for v in 0..n {
                    for w in 0..n {
                        let h2 = |p: usize, q: usize, r: usize, t: usize| *hc.h2.get(&[p, q, r, t]);

                        let mut disp = cb.rm.get(&[a, b, v, w])
                            - h2(a, v, b, w) / 36.0
                            - h2(b, v, w, a) / 36.0
                            - h2(v, w, a, b) / 18.0;
                        disp += band * (s / 2.0)
                            * (chi_same.get(&[v, w, b, a]) - chi_same.get(&[w, v, b, a])
                                + chi_same.get(&[b, a, v, w])
                                - chi_same.get(&[a, b, v, w]));
                        disp += (s * s / 2.0)
                            * (2.0 * e2 * (gv(w, a) * gv(v, b) - gv(v, a) * gv(w, b))
                                + ge[a] * (gv(w, b) * ge[v] - gv(v, b) * ge[w])
                                + ge[b] * (gv(v, a) * ge[w] - gv(w, a) * ge[v]));
                        pure.set(&[a, b, v, w], band * disp);

                        let mut m = cb.rm.get(&[a, b, v, w])
                            - band * 0.5 * nh.get(&[a, b, v, w])
                            + band / 6.0 * nh.get(&[b, a, v, w])
                            - h2(b, w, a, v) / 12.0
                            - h2(w, a, b, v) / 12.0
                            - h2(a, b, v, w) / 6.0;
                        m += band * s * chi_opp.get(&[b, a, v, w]);
                        mixed.set(&[a, b, v, w], band / 2.0 * m);
                    }
                }
            }
        }
        blocks.push(pure);
        blocks.push(mixed);
    }

    let mixed_minus = blocks.pop().unwrap();
    let pure_minus = blocks.pop().unwrap();
    let mixed_plus = blocks.pop().unwrap();
    let pure_plus = blocks.pop().unwrap();
    GenRiemann { pure_plus, pure_minus, mixed_plus, mixed_minus }
}

/// The two mixed-band Ricci blocks. `plus[A][B]` pairs a minus-band first
/// slot with a plus-band second slot; `minus` the reverse.
#[derive(Debug, Clone)]
pub struct GenRicci {
    pub plus: Tensor<f64>,
    pub minus: Tensor<f64>,
}

/// Generalised Ricci blocks from the closed-form expression
/// `4 Rc_pm = 4 Rc - H^2 -+ 2 d*H + 4 [nabla xi]^sym +- 4 [nabla gX]^anti +- 2 H(xi)`.
pub fn gen_ricci(sj: &StructureJets, chr: &Christoffels) -> GenRicci {
    let n = sj.dim;
    let cb = curvature(sj, chr);
    let hc = sj.h_contractions();
    let gv = |i: usize, j: usize| sj.g[i][j].value();
    let giv = |i: usize, j: usize| sj.g_inv[i][j].value();

    // d*H as a 2-form: -(g-trace over derivative and first slot).
    let h_jt = h_jet_tensor(sj);
    let dstar_h = crate::classical::codifferential(sj, &chr.lc, &h_jt).values();

    // nabla xi and nabla (g X) as value matrices, derivative index first.
    let nxi = covariant_derivative(&chr.lc, &xi_jet_tensor(sj)).values();
    let mut gx = JetTensor::zeros(n, n, vec![Variance::Down]);
    for i in 0..n {
        let mut s = Jet3::zero(n);
        for k in 0..n {
            s = s + &sj.g[i][k] * &sj.x_vec[k];
        }
        gx.set(&[i], s);
    }
    let ngx = covariant_derivative(&chr.lc, &gx).values();

    // Flux contraction H(xi)_{vw} = H_{vkw} (g^{-1} xi)^k, the slot order
    // that matches the curvature trace (verified against the
    // from-definition evaluation; the first-slot contraction flips sign).
    let mut xi_up = vec![0.0; n];
    for (k, slot) in xi_up.iter_mut().enumerate() {
        for l in 0..n {
            *slot += giv(k, l) * sj.xi[l].value();
        }
    }
    let mut h_xi = Tensor::square(n, 2, Variance::Down);
    for v in 0..n {
        for w in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += sj.h[v][k][w].value() * xi_up[k];
            }
            h_xi.set(&[v, w], s);
        }
    }

    let mut out = Vec::with_capacity(2);
    for band in [1.0f64, -1.0] {
        let mut t = Tensor::square(n, 2, Variance::Down);
        for a in 0..n {
            for b in 0..n {
                let v = cb.rc.get(&[a, b]) - hc.h_sq.get(&[a, b]) / 4.0
                    - band / 2.0 * dstar_h.get(&[a, b])
                    + 0.5 * (nxi.get(&[a, b]) + nxi.get(&[b, a]))
                    + band / 2.0 * (ngx.get(&[a, b]) - ngx.get(&[b, a]))
                    + band / 2.0 * h_xi.get(&[a, b]);
                t.set(&[a, b], v);
            }
        }
        out.push(t);
    }
    let minus = out.pop().unwrap();
    let plus = out.pop().unwrap();
    // `gv` is kept for parity with the block assembly below.
    let _ = gv;
    GenRicci { plus, minus }
}

/// Ricci blocks assembled by tracing the mixed curvature blocks; agrees
/// with [`gen_ricci`] and cross-checks the block formulas.
pub fn ricci_from_riemann(sj: &StructureJets, gr: &GenRiemann) -> GenRicci {
    let n = sj.dim;
    let giv = |i: usize, j: usize| sj.g_inv[i][j].value();
    let mut plus = Tensor::square(n, 2, Variance::Down);
    let mut minus = Tensor::square(n, 2, Variance::Down);
    for a in 0..n {
        for b in 0..n {
            let mut sp = 0.0;
            let mut sm = 0.0;
            for i in 0..n {
                for j in 0..n {
                    sp += giv(i, j)
                        * (gr.mixed_plus.get(&[i, a, j, b]) - gr.mixed_minus.get(&[j, b, i, a]));
                    sm += giv(i, j)
                        * (gr.mixed_plus.get(&[j, b, i, a]) - gr.mixed_minus.get(&[i, a, j, b]));
                }
            }
            plus.set(&[a, b], sp);
            minus.set(&[a, b], sm);
        }
    }
    GenRicci { plus, minus }
}

/// Riemannian divergence of the band corrector `pi e_band`.
pub fn div_e(sj: &StructureJets, chr: &Christoffels, band: f64) -> f64 {
    divergence(&chr.lc, e_band(sj, band)).value()
}

/// Codifferential of the 1-form part of the divergence pair.
pub fn dstar_xi(sj: &StructureJets, chr: &Christoffels) -> f64 {
    crate::classical::codifferential(sj, &chr.lc, &xi_jet_tensor(sj)).get(&[]).value()
}

/// Generalised scalar curvature
/// `Sc - |H|^2/12 + div(pi e_+) - div(pi e_-) - |e|^2/2`.
pub fn gen_scalar(sj: &StructureJets, chr: &Christoffels) -> f64 {
    let cb = curvature(sj, chr);
    let hc = sj.h_contractions();
    let ds = sj.dilaton_split();
    cb.sc - hc.h_norm2 / 12.0 + div_e(sj, chr, 1.0) - div_e(sj, chr, -1.0) - 0.5 * ds.e_total_norm2
}

/// Residual of the scalar field equation `|H|^2/6 - d*xi - |e|^2/2`;
/// vanishes exactly for solutions of the dilatonic system.
pub fn dilaton_eom_residual(sj: &StructureJets, chr: &Christoffels) -> f64 {
    let hc = sj.h_contractions();
    let ds = sj.dilaton_split();
    hc.h_norm2 / 6.0 - dstar_xi(sj, chr) - 0.5 * ds.e_total_norm2
}

/// Right-hand side of the mixed-trace identity: the metric trace of either
/// Ricci block equals `Sc - |H|^2/4 - d*xi`.
pub fn mixed_trace_rhs(sj: &StructureJets, chr: &Christoffels) -> f64 {
    let cb = curvature(sj, chr);
    let hc = sj.h_contractions();
    cb.sc - hc.h_norm2 / 4.0 - dstar_xi(sj, chr)
}

/// Metric trace of a Ricci block.
pub fn ricci_trace(sj: &StructureJets, block: &Tensor<f64>) -> f64 {
    let n = sj.dim;
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            s += sj.g_inv[a][b].value() * block.get(&[a, b]);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::christoffels;
    use crate::fields::{AmbientStructure, Chart, DilatonField, MetricField, ThreeFormField};

    fn flat_torus_with_flux(c: &str) -> AmbientStructure {
        let chart = Chart::new("t3", &["x", "y", "z"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), c)]).unwrap();
        AmbientStructure::new(chart, metric, h, DilatonField::zero(3)).unwrap()
    }

    fn curved_full() -> AmbientStructure {
        // Curved metric, non-constant closed flux (top degree in d = 3),
        // and a generic divergence pair; exercises every term.
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
        let dil = DilatonField::new(&chart, &["y/4", "x*z/7", "1/2"], &["z/3", "sin(x)/5", "x*y/6"]).unwrap();
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    fn compatible_pair(c: f64) -> AmbientStructure {
        // Flat metric, H = c dx^dy^dz, X the rotation field, xi chosen so
        // that d(xi) equals the contraction of H with X.
        let chart = Chart::new("cp", &["x", "y", "z"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let h_text = format!("{c}");
        let xi_text = format!("-{c}/2 * (x^2 + y^2)");
        let h = ThreeFormField::new(&chart, &[((0, 1, 2), h_text.as_str())]).unwrap();
        let dil = DilatonField::new(&chart, &["-y", "x", "0"], &["0", "0", xi_text.as_str()]).unwrap();
        AmbientStructure::new(chart, metric, h, dil).unwrap()
    }

    #[test]
    fn trivial_blocks_reduce_to_classical_curvature() {
        let chart = Chart::new("s2", &["th", "ph"]).unwrap();
        let metric =
            MetricField::from_rows(&chart, &[vec!["1", "0"], vec!["0", "sin(th)^2"]], (2, 0)).unwrap();
        let a = AmbientStructure::new(chart, metric, ThreeFormField::zero(2), DilatonField::zero(2)).unwrap();
        let sj = a.jets_at(&[1.0, 0.3]).unwrap();
        let chr = christoffels(&sj);
        let cb = curvature(&sj, &chr);
        let gr = gen_riemann(&sj, &chr, canonical_chi_scale(2));
        assert!(gr.pure_plus.sub(&cb.rm).max_abs() < 1e-12);
        assert!(gr.pure_minus.sub(&cb.rm.clone().scale_by(-1.0)).max_abs() < 1e-12);
        assert!(gr.mixed_plus.sub(&cb.rm.clone().scale_by(0.5)).max_abs() < 1e-12);
        assert!(gr.mixed_minus.sub(&cb.rm.clone().scale_by(-0.5)).max_abs() < 1e-12);
    }

    #[test]
    fn constant_flux_torus_frozen_values() {
        let a = flat_torus_with_flux("2");
        let sj = a.jets_at(&[0.1, 0.2, 0.3]).unwrap();
        let chr = christoffels(&sj);
        let gr = gen_riemann(&sj, &chr, canonical_chi_scale(3));
        // Block value -c^2/12 at (x,y,x,y) for the plus band; the minus
        // band stores the negated display value, hence +c^2/12.
        assert!((gr.pure_plus.get(&[0, 1, 0, 1]) + 4.0 / 12.0).abs() < 1e-13);
        assert!((gr.pure_minus.get(&[0, 1, 0, 1]) - 4.0 / 12.0).abs() < 1e-13);

        // Ricci blocks: 4 Rc_pm = -H^2 = -2 c^2 delta.
        let rc = gen_ricci(&sj, &chr);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -2.0 } else { 0.0 };
                assert!((rc.plus.get(&[i, j]) - want).abs() < 1e-13);
                assert!((rc.minus.get(&[i, j]) - want).abs() < 1e-13);
            }
        }

        assert!((gen_scalar(&sj, &chr) + 2.0).abs() < 1e-13);
        // Mixed trace identity.
        let rhs = mixed_trace_rhs(&sj, &chr);
        assert!((ricci_trace(&sj, &rc.plus) - rhs).abs() < 1e-12);
        assert!((ricci_trace(&sj, &rc.minus) - rhs).abs() < 1e-12);
    }

    #[test]
    fn chi_eval_trace_identity() {
        let a = curved_full();
        let sj = a.jets_at(&[0.3, -0.4, 0.5]).unwrap();
        for band in [1.0, -1.0] {
            let chi = chi_eval(&sj, band);
            let e = e_band(&sj, band);
            for b in 0..3 {
                let mut tr = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        tr += sj.g_inv[i][j].value() * chi.get(&[i, b, j]);
                    }
                }
                let mut geb = 0.0;
                for k in 0..3 {
                    geb += sj.g[b][k].value() * e[k].value();
                }
                assert!((tr + 2.0 * geb).abs() < 1e-12, "trace is -(d-1) g(pi e, .)");
            }
        }
    }

    #[test]
    fn chi_covariant_radial_component() {
        // Flat plane, X = u d_u: the (c,a,v,w) = (u,v,v,u) component is
        // g(a,v) g(nabla_u X, w) = +1.
        let chart = Chart::new("p2", &["u", "v"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let dil = DilatonField::new(&chart, &["u", "0"], &["0", "0"]).unwrap();
        let a = AmbientStructure::new(chart, metric, ThreeFormField::zero(2), dil).unwrap();
        let sj = a.jets_at(&[0.7, -0.2]).unwrap();
        let chr = christoffels(&sj);
        let chi = chi_covariant(&sj, &chr, 1.0, 1.0);
        assert!((chi.get(&[0, 1, 1, 0]) - 1.0).abs() < 1e-13);
        assert!((chi.get(&[0, 1, 0, 1]) + 1.0).abs() < 1e-13);
        assert!(chi.get(&[0, 0, 0, 0]).abs() < 1e-13);
    }

    #[test]
    fn flat_with_exact_one_form_frozen_values() {
        let chart = Chart::new("f3", &["u", "v", "w"]).unwrap();
        let metric = MetricField::euclidean(&chart);
        let dil = DilatonField::new(&chart, &["0", "0", "0"], &["u", "0", "0"]).unwrap();
        let a = AmbientStructure::new(chart, metric, ThreeFormField::zero(3), dil).unwrap();
        let sj = a.jets_at(&[1.2, 0.0, 0.0]).unwrap();
        let chr = christoffels(&sj);
        let rc = gen_ricci(&sj, &chr);
        for i in 0..3 {
            for j in 0..3 {
                let want = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
                assert!((rc.plus.get(&[i, j]) - want).abs() < 1e-13);
                assert!((rc.minus.get(&[i, j]) - want).abs() < 1e-13);
            }
        }

        // Constant 1-form xi = du: scalar equation residual and scalar
        // curvature are both -|xi|^2 = -1.
        let dil2 = DilatonField::new(&a.chart, &["0", "0", "0"], &["1", "0", "0"]).unwrap();
        let a2 = AmbientStructure::new(a.chart.clone(), a.metric.clone(), ThreeFormField::zero(3), dil2).unwrap();
        let sj2 = a2.jets_at(&[0.4, 0.1, -0.9]).unwrap();
        let chr2 = christoffels(&sj2);
        assert!((dilaton_eom_residual(&sj2, &chr2) + 1.0).abs() < 1e-13);
        assert!((gen_scalar(&sj2, &chr2) + 1.0).abs() < 1e-13);
    }

    #[test]
    fn scalar_trace_chain_vanishes() {
        let a = curved_full();
        let sj = a.jets_at(&[0.2, 0.5, -0.3]).unwrap();
        let chr = christoffels(&sj);
        let chain = gen_scalar(&sj, &chr) - mixed_trace_rhs(&sj, &chr) - dilaton_eom_residual(&sj, &chr);
        let divsum = div_e(&sj, &chr, 1.0) - div_e(&sj, &chr, -1.0) + 2.0 * dstar_xi(&sj, &chr);
        assert!((chain - divsum).abs() < 1e-12);
        assert!(divsum.abs() < 1e-12);
    }

    #[test]
    fn assembled_ricci_matches_direct_formula() {
        let a = curved_full();
        for p in [[0.3, -0.4, 0.5], [0.0, 0.7, -0.2]] {
            let sj = a.jets_at(&p).unwrap();
            let chr = christoffels(&sj);
            let gr = gen_riemann(&sj, &chr, canonical_chi_scale(3));
            let direct = gen_ricci(&sj, &chr);
            let assembled = ricci_from_riemann(&sj, &gr);
            assert!(direct.plus.sub(&assembled.plus).max_abs() < 1e-11);
            assert!(direct.minus.sub(&assembled.minus).max_abs() < 1e-11);
        }
    }

    #[test]
    fn mixed_trace_identity_on_curved_data() {
        let a = curved_full();
        let sj = a.jets_at(&[-0.1, 0.3, 0.6]).unwrap();
        let chr = christoffels(&sj);
        let rc = gen_ricci(&sj, &chr);
        let rhs = mixed_trace_rhs(&sj, &chr);
        assert!((ricci_trace(&sj, &rc.plus) - rhs).abs() < 1e-11);
        assert!((ricci_trace(&sj, &rc.minus) - rhs).abs() < 1e-11);
    }

    #[test]
    fn compatible_pair_frozen_ricci_values() {
        // X is the z-axis rotation field, xi = -(c/2)(x^2+y^2) dz, and
        // H = c dx^dy^dz: then L_X g = 0 and d(xi) = i_X H. The Ricci
        // blocks were computed by hand for this data.
        let c = 2.0;
        let a = compatible_pair(c);
        let p = [0.4, -0.3, 0.8];
        let sj = a.jets_at(&p).unwrap();
        let chr = christoffels(&sj);

        let lie = crate::classical::lie_derivative_metric(&sj, &sj.x_vec);
        assert!(lie.max_abs() < 1e-13);
        // d(xi)_{ij} = (i_X H)_{ij}.
        for i in 0..3 {
            for j in 0..3 {
                let dxi = sj.xi[j].partial(i) - sj.xi[i].partial(j);
                let mut ixh = 0.0;
                for k in 0..3 {
                    ixh += sj.x_vec[k].value() * sj.h[k][i][j].value();
                }
                assert!((dxi - ixh).abs() < 1e-13);
            }
        }

        let rc = gen_ricci(&sj, &chr);
        let r2 = p[0] * p[0] + p[1] * p[1];
        let want = [
            [-2.0, 1.0 + c * c / 4.0 * r2, -c * p[0] / 2.0],
            [-(1.0 + c * c / 4.0 * r2), -2.0, -c * p[1] / 2.0],
            [-c * p[0] / 2.0, -c * p[1] / 2.0, -2.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (rc.plus.get(&[i, j]) - want[i][j]).abs() < 1e-12,
                    "plus[{i}][{j}] = {} want {}",
                    rc.plus.get(&[i, j]),
                    want[i][j]
                );
                assert!((rc.minus.get(&[i, j]) - want[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_symmetries_and_first_bianchi() {
        let a = curved_full();
        let sj = a.jets_at(&[0.25, -0.35, 0.45]).unwrap();
        let chr = christoffels(&sj);
        let gr = gen_riemann(&sj, &chr, canonical_chi_scale(3));
        let scale = gr.max_abs().max(1.0);
        for (pure, mixed) in [(&gr.pure_plus, &gr.mixed_plus), (&gr.pure_minus, &gr.mixed_minus)] {
            for a_ in 0..3 {
                for b in 0..3 {
                    for v in 0..3 {
                        for w in 0..3 {
                            let x = pure.get(&[a_, b, v, w]);
                            assert!((x + pure.get(&[b, a_, v, w])).abs() < 1e-10 * scale);
                            assert!((x + pure.get(&[a_, b, w, v])).abs() < 1e-10 * scale);
                            assert!((x - pure.get(&[v, w, a_, b])).abs() < 1e-10 * scale);
                            let m = mixed.get(&[a_, b, v, w]);
                            assert!((m + mixed.get(&[a_, b, w, v])).abs() < 1e-10 * scale);
                            // First Bianchi: cyclic sum over the same-band
                            // slots of a mixed block vanishes.
                            let cyc = m + mixed.get(&[v, b, w, a_]) + mixed.get(&[w, b, a_, v]);
                            assert!(cyc.abs() < 1e-10 * scale);
                        }
                    }
                }
            }
        }
    }

    // ------------------------------------------------------------------
    // From-definition oracle: evaluate the curvature of the band
    // connection directly from two covariant derivatives and compare with
    // the closed-form blocks.
    // ------------------------------------------------------------------

    struct Oracle<'a> {
        sj: &'a StructureJets,
        chr: &'a Christoffels,
        s: f64,
    }

    impl<'a> Oracle<'a> {
        fn basis(&self, i: usize) -> Vec<Jet3> {
            let n = self.sj.dim;
            (0..n)
                .map(|k| Jet3::constant(n, if k == i { 1.0 } else { 0.0 }))
                .collect()
        }

        /// D along a band-`dir_band` direction `c` of a band-`arg_band`
        /// field `b`, at the vector level.
        fn dvec(&self, dir_band: f64, arg_band: f64, c: &[Jet3], b: &[Jet3]) -> Vec<Jet3> {
            let n = self.sj.dim;
            let scale = if dir_band == arg_band { 1.0 / 6.0 } else { 0.5 };
            let gamma = self.chr.with_h_scale(arg_band, scale);
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                let mut s = Jet3::zero(n);
                for (cc, c_jet) in c.iter().enumerate() {
                    let mut inner = b[k].partial_jet(cc);
                    for m in 0..n {
                        inner = inner + &gamma[k][cc][m] * &b[m];
                    }
                    s = s + c_jet * &inner;
                }
                out.push(s);
            }
            if dir_band == arg_band {
                // Same-band corrector term: band * s * (g(C,B) e - g(e,B) C).
                let e = e_band(self.sj, arg_band);
                let mut gcb = Jet3::zero(n);
                let mut geb = Jet3::zero(n);
                for i in 0..n {
                    for j in 0..n {
                        gcb = gcb + &self.sj.g[i][j] * &(&c[i] * &b[j]);
                        geb = geb + &self.sj.g[i][j] * &(&e[i] * &b[j]);
                    }
                }
                let f = arg_band * self.s;
                for k in 0..n {
                    out[k] = &out[k] + &(&gcb * &e[k]).scale(f) - &(&geb * &c[k]).scale(f);
                }
            }
            out
        }

        /// Second derivative `D^2_{c1,c2} b = D_{c1}(D_{c2} b) - D_{D_{c1} c2} b`.
        fn d2(
            &self,
            (d1, c1): (f64, &[Jet3]),
            (d2_, c2): (f64, &[Jet3]),
            arg_band: f64,
            b: &[Jet3],
        ) -> Vec<Jet3> {
            let inner = self.dvec(d2_, arg_band, c2, b);
            let outer = self.dvec(d1, arg_band, c1, &inner);
            let turned = self.dvec(d1, d2_, c1, c2);
            let correction = self.dvec(d2_, arg_band, &turned, b);
            outer.iter().zip(&correction).map(|(a, b)| a - b).collect()
        }

        fn g_pair(&self, p: &[Jet3], q: &[Jet3]) -> f64 {
            let n = self.sj.dim;
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.sj.g[i][j].value() * p[i].value() * q[j].value();
                }
            }
            s
        }

        /// Curvature from the definition, legs given as (band, chart index).
        fn rm_def(
            &self,
            a: (f64, usize),
            b: (f64, usize),
            v: (f64, usize),
            w: (f64, usize),
        ) -> f64 {
            let n = self.sj.dim;
            let ab = self.basis(a.1);
            let bb = self.basis(b.1);
            let vb = self.basis(v.1);
            let wb = self.basis(w.1);

            // <(D^2_{v,w} - D^2_{w,v}) b, a>
            let term1 = if a.0 == b.0 {
                let x1 = self.d2((v.0, &vb), (w.0, &wb), b.0, &bb);
                let x2 = self.d2((w.0, &wb), (v.0, &vb), b.0, &bb);
                let diff: Vec<Jet3> = x1.iter().zip(&x2).map(|(p, q)| p - q).collect();
                a.0 * self.g_pair(&diff, &ab)
            } else {
                0.0
            };

            // <(D^2_{b,a} - D^2_{a,b}) v, w>
            let term2 = if v.0 == w.0 {
                let y1 = self.d2((b.0, &bb), (a.0, &ab), v.0, &vb);
                let y2 = self.d2((a.0, &ab), (b.0, &bb), v.0, &vb);
                let diff: Vec<Jet3> = y1.iter().zip(&y2).map(|(p, q)| p - q).collect();
                v.0 * self.g_pair(&diff, &wb)
            } else {
                0.0
            };

            // tr_E(<D v, w> <D b, a>): band-signed metric trace over the
            // differentiation direction.
            let mut term3 = 0.0;
            if v.0 == w.0 && a.0 == b.0 {
                for tau in [1.0f64, -1.0] {
                    for i in 0..n {
                        for j in 0..n {
                            let dv = self.dvec(tau, v.0, &self.basis(i), &vb);
                            let db = self.dvec(tau, b.0, &self.basis(j), &bb);
                            term3 += tau
                                * self.sj.g_inv[i][j].value()
                                * (v.0 * self.g_pair(&dv, &wb))
                                * (b.0 * self.g_pair(&db, &ab));
                        }
                    }
                }
            }

            0.5 * (term1 + term2 - term3)
        }
    }

    #[test]
    fn definition_oracle_matches_block_formulas() {
        let a = curved_full();
        let sj = a.jets_at(&[0.3, -0.2, 0.4]).unwrap();
        let chr = christoffels(&sj);
        let s = canonical_chi_scale(3);
        let oracle = Oracle { sj: &sj, chr: &chr, s };
        let gr = gen_riemann(&sj, &chr, s);

        for band in [1.0f64, -1.0] {
            let (pure, mixed) = if band > 0.0 {
                (&gr.pure_plus, &gr.mixed_plus)
            } else {
                (&gr.pure_minus, &gr.mixed_minus)
            };
            for ai in 0..3 {
                for bi in 0..3 {
                    for vi in 0..3 {
                        for wi in 0..3 {
                            let want_pure =
                                oracle.rm_def((band, ai), (band, bi), (band, vi), (band, wi));
                            assert!(
                                (pure.get(&[ai, bi, vi, wi]) - want_pure).abs() < 1e-9,
                                "pure band {band} at ({ai},{bi},{vi},{wi}): block {} vs def {}",
                                pure.get(&[ai, bi, vi, wi]),
                                want_pure
                            );
                            let want_mixed =
                                oracle.rm_def((band, ai), (-band, bi), (band, vi), (band, wi));
                            assert!(
                                (mixed.get(&[ai, bi, vi, wi]) - want_mixed).abs() < 1e-9,
                                "mixed band {band} at ({ai},{bi},{vi},{wi}): block {} vs def {}",
                                mixed.get(&[ai, bi, vi, wi]),
                                want_mixed
                            );
                        }
                    }
                }
            }
        }
    }

    /// The closed-form blocks must stay exact when the divergence-term scale
    /// is not the canonical `1/(d-1)`: an induced connection on a
    /// hypersurface inherits the scale of the ambient space, so the scale and
    /// the dimension decouple there.
    #[test]
    fn definition_oracle_matches_at_noncanonical_scale() {
        let a = curved_full();
        let sj = a.jets_at(&[0.3, -0.2, 0.4]).unwrap();
        let chr = christoffels(&sj);
        let s = 0.37;
        let oracle = Oracle { sj: &sj, chr: &chr, s };
        let gr = gen_riemann(&sj, &chr, s);

        for band in [1.0f64, -1.0] {
            let (pure, mixed) = if band > 0.0 {
                (&gr.pure_plus, &gr.mixed_plus)
            } else {
                (&gr.pure_minus, &gr.mixed_minus)
            };
            for ai in 0..3 {
                for bi in 0..3 {
                    for vi in 0..3 {
                        for wi in 0..3 {
                            let want_pure =
                                oracle.rm_def((band, ai), (band, bi), (band, vi), (band, wi));
                            assert!(
                                (pure.get(&[ai, bi, vi, wi]) - want_pure).abs() < 1e-9,
                                "pure band {band} scale {s} at ({ai},{bi},{vi},{wi}): {} vs {}",
                                pure.get(&[ai, bi, vi, wi]),
                                want_pure
                            );
                            let want_mixed =
                                oracle.rm_def((band, ai), (-band, bi), (band, vi), (band, wi));
                            assert!(
                                (mixed.get(&[ai, bi, vi, wi]) - want_mixed).abs() < 1e-9,
                                "mixed band {band} scale {s} at ({ai},{bi},{vi},{wi}): {} vs {}",
                                mixed.get(&[ai, bi, vi, wi]),
                                want_mixed
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn opposite_plane_block_vanishes_without_flux() {
        // For vanishing flux and divergence pair the (+,+,-,-) band pattern
        // carries no curvature.
        let chart = Chart::new("s2", &["th", "ph"]).unwrap();
        let metric =
            MetricField::from_rows(&chart, &[vec!["1", "0"], vec!["0", "sin(th)^2"]], (2, 0)).unwrap();
        let a = AmbientStructure::new(chart, metric, ThreeFormField::zero(2), DilatonField::zero(2)).unwrap();
        let sj = a.jets_at(&[0.9, 0.2]).unwrap();
        let chr = christoffels(&sj);
        let oracle = Oracle { sj: &sj, chr: &chr, s: canonical_chi_scale(2) };
        for ai in 0..2 {
            for bi in 0..2 {
                for vi in 0..2 {
                    for wi in 0..2 {
                        let v = oracle.rm_def((1.0, ai), (1.0, bi), (-1.0, vi), (-1.0, wi));
                        assert!(v.abs() < 1e-11);
                    }
                }
            }
        }
    }
}
