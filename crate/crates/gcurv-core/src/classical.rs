//! Classical semi-Riemannian geometry of one chart: Levi-Civita and
//! flux-twisted connection coefficients, curvature with its trace
//! decomposition (scalar part, traceless Ricci part, Weyl part), covariant
//! derivatives of jet tensors, codifferential and metric Lie derivative.
//!
//! All coefficients are computed over jets, so first derivatives of
//! connection data (hence curvature) are exact to rounding.

use crate::fields::StructureJets;
use crate::jet::Jet3;
use crate::tensor::{MultiIndexIter, Tensor, Variance};

/// A tensor of jets: square slots of size `n`, jets in `jet_dim` variables.
/// The slot size and jet dimension coincide for chart tensors but differ
/// for ambient tensors pulled back to a hypersurface.
#[derive(Debug, Clone)]
pub struct JetTensor {
    pub n: usize,
    pub jet_dim: usize,
    pub variance: Vec<Variance>,
    data: Vec<Jet3>,
}

impl JetTensor {
    pub fn zeros(n: usize, jet_dim: usize, variance: Vec<Variance>) -> Self {
        let len = n.pow(variance.len() as u32).max(1);
        JetTensor { n, jet_dim, variance, data: vec![Jet3::zero(jet_dim); len] }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank(), "index rank mismatch");
        idx.iter().fold(0, |off, &i| {
            assert!(i < self.n);
            off * self.n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &Jet3 {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Jet3) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    /// Pointwise values as a plain tensor.
    pub fn values(&self) -> Tensor<f64> {
        let mut t = Tensor::new(vec![self.n; self.rank()], self.variance.clone());
        for idx in MultiIndexIter::new(vec![self.n; self.rank()]) {
            t.set(&idx, self.get(&idx).value());
        }
        t
    }
}

/// Connection coefficients `G^k_{ij}` as jets, stored `[k][i][j]` with `i`
/// the differentiation direction and `j` the argument. `lc` is Levi-Civita;
/// the other four add `s * g^{kl} H_{ijl}` with `s = +-1/2, +-1/6`.
#[derive(Debug, Clone)]
pub struct Christoffels {
    pub n: usize,
    pub lc: Vec<Vec<Vec<Jet3>>>,
    pub plus: Vec<Vec<Vec<Jet3>>>,
    pub minus: Vec<Vec<Vec<Jet3>>>,
    pub plus_third: Vec<Vec<Vec<Jet3>>>,
    pub minus_third: Vec<Vec<Vec<Jet3>>>,
}

impl Christoffels {
    /// Pick the variant with torsion scale `s` in `G + s g^{-1}H`:
    /// `+-1/2` for the metric pair, `+-1/6` for the thirds.
    pub fn with_h_scale(&self, band: f64, scale: f64) -> &Vec<Vec<Vec<Jet3>>> {
        let s = band * scale;
        if s == 0.5 {
            &self.plus
        } else if s == -0.5 {
            &self.minus
        } else if (s - 1.0 / 6.0).abs() < 1e-15 {
            &self.plus_third
        } else if (s + 1.0 / 6.0).abs() < 1e-15 {
            &self.minus_third
        } else if s == 0.0 {
            &self.lc
        } else {
            panic!("unsupported torsion scale {s}");
        }
    }
}

/// Levi-Civita and flux-twisted connection coefficients from structure jets.
pub fn christoffels(sj: &StructureJets) -> Christoffels {
    let n = sj.dim;
    let mut lc = vec![vec![vec![Jet3::zero(n); n]; n]; n];
    let mut torsion_half = vec![vec![vec![Jet3::zero(n); n]; n]; n];

    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = Jet3::zero(n);
                for l in 0..n {
                    let bracket = sj.g[l][j].partial_jet(i) + sj.g[l][i].partial_jet(j)
                        - sj.g[i][j].partial_jet(l);
                    s = s + &sj.g_inv[k][l] * &bracket;
                }
                let s = s.scale(0.5);
                lc[k][j][i] = s.clone();
                lc[k][i][j] = s;
            }
        }
        // Torsion part g^{kl} H_{ijl} / 2, antisymmetric in (i, j).
        for i in 0..n {
            for j in 0..n {
                let mut t = Jet3::zero(n);
                for l in 0..n {
                    t = t + &sj.g_inv[k][l] * &sj.h[i][j][l];
                }
                torsion_half[k][i][j] = t.scale(0.5);
            }
        }
    }

    let add = |base: &Vec<Vec<Vec<Jet3>>>, tor: &Vec<Vec<Vec<Jet3>>>, f: f64| -> Vec<Vec<Vec<Jet3>>> {
        let mut out = base.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[k][i][j] = &out[k][i][j] + &tor[k][i][j].scale(f);
                }
            }
        }
        out
    };

    let plus = add(&lc, &torsion_half, 1.0);
    let minus = add(&lc, &torsion_half, -1.0);
    let plus_third = add(&lc, &torsion_half, 1.0 / 3.0);
    let minus_third = add(&lc, &torsion_half, -1.0 / 3.0);
    Christoffels { n, lc, plus, minus, plus_third, minus_third }
}

/// Covariant derivative of a jet tensor with respect to the coefficients
/// `gamma[k][c][a]` (direction `c` first). The new lower derivative slot is
/// prepended, so `out[c, I] = (nabla_c T)_I`.
pub fn covariant_derivative(gamma: &[Vec<Vec<Jet3>>], t: &JetTensor) -> JetTensor {
    let n = t.n;
    assert_eq!(t.jet_dim, n, "can only differentiate chart tensors");
    assert_eq!(gamma.len(), n);
    let mut variance = vec![Variance::Down];
    variance.extend_from_slice(&t.variance);
    let mut out = JetTensor::zeros(n, n, variance);

    for idx in MultiIndexIter::new(vec![n; t.rank()]) {
        for c in 0..n {
            let mut jet = t.get(&idx).partial_jet(c);
            for (s, var) in t.variance.iter().enumerate() {
                let mut swapped = idx.clone();
                for k in 0..n {
                    swapped[s] = k;
                    match var {
                        Variance::Down => {
                            jet = jet - &gamma[k][c][idx[s]] * t.get(&swapped);
                        }
                        Variance::Up => {
                            jet = jet + &gamma[idx[s]][c][k] * t.get(&swapped);
                        }
                    }
                }
            }
            let mut out_idx = vec![c];
            out_idx.extend_from_slice(&idx);
            out.set(&out_idx, jet);
        }
    }
    out
}

/// Divergence of a vector field: `sum_c (nabla_c v)^c` as a jet.
pub fn divergence(gamma: &[Vec<Vec<Jet3>>], v: &[Jet3]) -> Jet3 {
    let n = v.len();
    let jet_dim = v[0].dim();
    let mut s = Jet3::zero(jet_dim);
    for c in 0..n {
        s = s + v[c].partial_jet(c);
        for k in 0..n {
            s = s + &gamma[c][c][k] * &v[k];
        }
    }
    s
}

/// Codifferential of an all-covariant tensor: minus the metric trace of the
/// covariant derivative over the derivative slot and the first slot.
pub fn codifferential(sj: &StructureJets, gamma: &[Vec<Vec<Jet3>>], t: &JetTensor) -> JetTensor {
    assert!(t.rank() >= 1);
    assert!(t.variance.iter().all(|v| *v == Variance::Down));
    let n = t.n;
    let grad = covariant_derivative(gamma, t);
    let mut out = JetTensor::zeros(n, t.jet_dim, t.variance[1..].to_vec());
    for idx in MultiIndexIter::new(vec![n; t.rank() - 1]) {
        let mut s = Jet3::zero(t.jet_dim);
        for i in 0..n {
            for j in 0..n {
                let mut full = vec![i, j];
                full.extend_from_slice(&idx);
                s = s - &sj.g_inv[i][j] * grad.get(&full);
            }
        }
        out.set(&idx, s);
    }
    out
}

/// Lie derivative of the metric along a vector field, as pointwise values:
/// `(L_X g)_{ij} = X^k d_k g_{ij} + g_{kj} d_i X^k + g_{ik} d_j X^k`.
pub fn lie_derivative_metric(sj: &StructureJets, x: &[Jet3]) -> Tensor<f64> {
    let n = sj.dim;
    let mut out = Tensor::square(n, 2, Variance::Down);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += x[k].value() * sj.g[i][j].partial(k)
                    + sj.g[k][j].value() * x[k].partial(i)
                    + sj.g[i][k].value() * x[k].partial(j);
            }
            out.set(&[i, j], s);
        }
    }
    out
}

/// Curvature of the Levi-Civita connection with its trace decomposition.
///
/// Storage convention: `rm[a][b][v][w] = g(R(v,w) b, a)` with
/// `R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_{[X,Y]} Z`,
/// so an orthonormal plane on the round sphere has positive `rm[a][b][a][b]`.
/// `rc[b][w] = g^{av} rm[a][b][v][w]`, `sc = g^{bw} rc[b][w]`.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub rm: Tensor<f64>,
    pub rc: Tensor<f64>,
    pub sc: f64,
    /// Traceless Ricci part `rc - (sc/d) g`.
    pub z_traceless: Tensor<f64>,
    /// Totally trace-free part of `rm`; identically zero for d <= 3.
    pub weyl: Tensor<f64>,
}

pub fn curvature(sj: &StructureJets, chr: &Christoffels) -> CurvatureBundle {
    let n = sj.dim;
    let gamma = &chr.lc;
    let gv = sj.g_vals();
    let gi = sj.g_inv_vals();

    // R^k_{zxy} = d_x G^k_{yz} - d_y G^k_{xz} + G^k_{xm} G^m_{yz} - G^k_{ym} G^m_{xz}
    let mut rm = Tensor::square(n, 4, Variance::Down);
    for a in 0..n {
        for z in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let mut up = vec![0.0; n];
                    for (k, slot) in up.iter_mut().enumerate() {
                        let mut v = gamma[k][y][z].partial(x) - gamma[k][x][z].partial(y);
                        for m in 0..n {
                            v += gamma[k][x][m].value() * gamma[m][y][z].value()
                                - gamma[k][y][m].value() * gamma[m][x][z].value();
                        }
                        *slot = v;
                    }
                    let mut lowered = 0.0;
                    for (k, v) in up.iter().enumerate() {
                        lowered += gv.get(&[a, k]) * v;
                    }
                    rm.set(&[a, z, x, y], lowered);
                }
            }
        }
    }

    let mut rc = Tensor::square(n, 2, Variance::Down);
    for b in 0..n {
        for w in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                for v in 0..n {
                    s += gi.get(&[a, v]) * rm.get(&[a, b, v, w]);
                }
            }
            rc.set(&[b, w], s);
        }
    }

    let mut sc = 0.0;
    for b in 0..n {
        for w in 0..n {
            sc += gi.get(&[b, w]) * rc.get(&[b, w]);
        }
    }

    let mut z_traceless = Tensor::square(n, 2, Variance::Down);
    for i in 0..n {
        for j in 0..n {
            z_traceless.set(&[i, j], rc.get(&[i, j]) - sc / n as f64 * gv.get(&[i, j]));
        }
    }

    // rm = scalar part + traceless-Ricci part + weyl.
    let d = n as f64;
    let mut weyl = Tensor::square(n, 4, Variance::Down);
    for a in 0..n {
        for b in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let s_part = sc / (d * (d - 1.0))
                        * (gv.get(&[a, v]) * gv.get(&[b, w]) - gv.get(&[a, w]) * gv.get(&[b, v]));
                    let e_part = if n == 2 {
                        0.0
                    } else {
                        (z_traceless.get(&[a, v]) * gv.get(&[b, w])
                            - z_traceless.get(&[a, w]) * gv.get(&[b, v])
                            + gv.get(&[a, v]) * z_traceless.get(&[b, w])
                            - gv.get(&[a, w]) * z_traceless.get(&[b, v]))
                            / (d - 2.0)
                    };
                    weyl.set(&[a, b, v, w], rm.get(&[a, b, v, w]) - s_part - e_part);
                }
            }
        }
    }

    CurvatureBundle { rm, rc, sc, z_traceless, weyl }
}
