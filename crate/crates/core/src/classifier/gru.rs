use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, matvec_acc, matvec_t_acc, outer_acc, sigmoid, Real, Tensor};
use crate::error::{Result, SpotError};

/// One direction of a GRU. Input weights are `[hidden, input]`, recurrent
/// weights `[hidden, hidden]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams<F> {
    pub wz: Tensor<F>,
    pub wr: Tensor<F>,
    pub wh: Tensor<F>,
    pub uz: Tensor<F>,
    pub ur: Tensor<F>,
    pub uh: Tensor<F>,
    pub bz: Tensor<F>,
    pub br: Tensor<F>,
    pub bh: Tensor<F>,
}

pub(crate) const GRU_TENSORS: [&str; 9] = ["wz", "wr", "wh", "uz", "ur", "uh", "bz", "br", "bh"];

impl<F: Real> GruParams<F> {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        GruParams {
            wz: Tensor::zeros(&[hidden, input]),
            wr: Tensor::zeros(&[hidden, input]),
            wh: Tensor::zeros(&[hidden, input]),
            uz: Tensor::zeros(&[hidden, hidden]),
            ur: Tensor::zeros(&[hidden, hidden]),
            uh: Tensor::zeros(&[hidden, hidden]),
            bz: Tensor::zeros(&[hidden]),
            br: Tensor::zeros(&[hidden]),
            bh: Tensor::zeros(&[hidden]),
        }
    }

    pub fn glorot<R: Rng>(hidden: usize, input: usize, rng: &mut R) -> Self {
        GruParams {
            wz: Tensor::glorot(hidden, input, rng),
            wr: Tensor::glorot(hidden, input, rng),
            wh: Tensor::glorot(hidden, input, rng),
            uz: Tensor::glorot(hidden, hidden, rng),
            ur: Tensor::glorot(hidden, hidden, rng),
            uh: Tensor::glorot(hidden, hidden, rng),
            bz: Tensor::zeros(&[hidden]),
            br: Tensor::zeros(&[hidden]),
            bh: Tensor::zeros(&[hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.bz.len()
    }

    pub fn input(&self) -> usize {
        self.wz.shape[1]
    }

    pub fn tensors(&self) -> [&Tensor<F>; 9] {
        [&self.wz, &self.wr, &self.wh, &self.uz, &self.ur, &self.uh, &self.bz, &self.br, &self.bh]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<F>; 9] {
        [
            &mut self.wz,
            &mut self.wr,
            &mut self.wh,
            &mut self.uz,
            &mut self.ur,
            &mut self.uh,
            &mut self.bz,
            &mut self.br,
            &mut self.bh,
        ]
    }
}

/// Gate activations and output of one step, kept for backprop.
#[derive(Debug, Clone)]
pub(crate) struct StepCache<F> {
    pub z: Vec<F>,
    pub r: Vec<F>,
    pub c: Vec<F>,
    pub h: Vec<F>,
}

pub(crate) fn step_forward<F: Real>(x: &[F], h_prev: &[F], p: &GruParams<F>) -> StepCache<F> {
    let n = p.hidden();
    let mut z = p.bz.data.clone();
    matvec_acc(&mut z, &p.wz.data, x);
    matvec_acc(&mut z, &p.uz.data, h_prev);
    z.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut r = p.br.data.clone();
    matvec_acc(&mut r, &p.wr.data, x);
    matvec_acc(&mut r, &p.ur.data, h_prev);
    r.iter_mut().for_each(|v| *v = sigmoid(*v));

    let rh: Vec<F> = r.iter().zip(h_prev).map(|(a, b)| *a * *b).collect();
    let mut c = p.bh.data.clone();
    matvec_acc(&mut c, &p.wh.data, x);
    matvec_acc(&mut c, &p.uh.data, &rh);
    c.iter_mut().for_each(|v| *v = v.tanh());

    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        h.push((F::one() - z[i]) * h_prev[i] + z[i] * c[i]);
    }
    StepCache { z, r, c, h }
}

/// Backprop through one step. Accumulates parameter gradients into `g`,
/// the input gradient into `dx`, and returns the gradient w.r.t. `h_prev`.
pub(crate) fn step_backward<F: Real>(
    x: &[F],
    h_prev: &[F],
    cache: &StepCache<F>,
    dh: &[F],
    p: &GruParams<F>,
    g: &mut GruParams<F>,
    dx: &mut [F],
) -> Vec<F> {
    let n = p.hidden();
    let one = F::one();
    let mut dh_prev = vec![F::zero(); n];
    let mut da_z = vec![F::zero(); n];
    let mut da_c = vec![F::zero(); n];
    for i in 0..n {
        let (z, c) = (cache.z[i], cache.c[i]);
        let dz = dh[i] * (c - h_prev[i]);
        dh_prev[i] = dh[i] * (one - z);
        da_z[i] = dz * z * (one - z);
        da_c[i] = dh[i] * z * (one - c * c);
    }

    let rh: Vec<F> = cache.r.iter().zip(h_prev).map(|(a, b)| *a * *b).collect();
    outer_acc(&mut g.wh.data, &da_c, x);
    outer_acc(&mut g.uh.data, &da_c, &rh);
    axpy(&mut g.bh.data, one, &da_c);
    matvec_t_acc(dx, &p.wh.data, &da_c);
    let mut d_rh = vec![F::zero(); n];
    matvec_t_acc(&mut d_rh, &p.uh.data, &da_c);

    let mut da_r = vec![F::zero(); n];
    for i in 0..n {
        let r = cache.r[i];
        da_r[i] = d_rh[i] * h_prev[i] * r * (one - r);
        dh_prev[i] += d_rh[i] * r;
    }

    outer_acc(&mut g.wz.data, &da_z, x);
    outer_acc(&mut g.uz.data, &da_z, h_prev);
    axpy(&mut g.bz.data, one, &da_z);
    matvec_t_acc(dx, &p.wz.data, &da_z);
    matvec_t_acc(&mut dh_prev, &p.uz.data, &da_z);

    outer_acc(&mut g.wr.data, &da_r, x);
    outer_acc(&mut g.ur.data, &da_r, h_prev);
    axpy(&mut g.br.data, one, &da_r);
    matvec_t_acc(dx, &p.wr.data, &da_r);
    matvec_t_acc(&mut dh_prev, &p.ur.data, &da_r);

    dh_prev
}

/// One GRU step: `h = (1 - z) * h_prev + z * tanh(W_h x + U_h (r * h_prev) + b_h)`.
pub fn gru_step<F: Real>(x: &[F], h_prev: &[F], p: &GruParams<F>) -> Result<Vec<F>> {
    if x.len() != p.input() || h_prev.len() != p.hidden() {
        return Err(SpotError::Shape(format!(
            "gru_step expects x[{}], h[{}]; got x[{}], h[{}]",
            p.input(),
            p.hidden(),
            x.len(),
            h_prev.len()
        )));
    }
    Ok(step_forward(x, h_prev, p).h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_state() {
        let p = GruParams::<f64>::zeros(50, 300);
        let x: Vec<f64> = (0..300).map(|i| i as f64 / 7.0).collect();
        let h = gru_step(&x, &[0.0; 50], &p).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_unit_candidate_bias() {
        let mut p = GruParams::<f64>::zeros(1, 1);
        p.bh.data[0] = 20.0;
        let h = gru_step(&[3.0], &[0.0], &p).unwrap();
        assert!((h[0] - 0.5 * 20f64.tanh()).abs() < 1e-15);
        assert!((h[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let p = GruParams::<f64>::zeros(4, 3);
        assert!(matches!(gru_step(&[0.0; 2], &[0.0; 4], &p), Err(SpotError::Shape(_))));
        assert!(gru_step(&[0.0; 3], &[0.0; 5], &p).is_err());
    }

    fn flat(p: &GruParams<f64>) -> Vec<f64> {
        p.tensors().iter().flat_map(|t| t.data.clone()).collect()
    }

    #[test]
    fn step_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = GruParams::<f64>::glorot(3, 4, &mut rng);
        for t in p.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v += rng.gen_range(-0.2..0.2));
        }
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hp: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wts = [0.3, -1.2, 0.7];
        let loss = |p: &GruParams<f64>, x: &[f64], hp: &[f64]| -> f64 {
            step_forward(x, hp, p).h.iter().zip(wts).map(|(h, w)| h * w).sum()
        };
        let cache = step_forward(&x, &hp, &p);
        let mut g = GruParams::zeros(3, 4);
        let mut dx = vec![0.0; 4];
        let dhp = step_backward(&x, &hp, &cache, &wts, &p, &mut g, &mut dx);

        let eps = 1e-5;
        let analytic = flat(&g);
        let mut k = 0;
        for ti in 0..9 {
            for j in 0..p.tensors()[ti].len() {
                let mut plus = p.clone();
                plus.tensors_mut()[ti].data[j] += eps;
                let mut minus = p.clone();
                minus.tensors_mut()[ti].data[j] -= eps;
                let num = (loss(&plus, &x, &hp) - loss(&minus, &x, &hp)) / (2.0 * eps);
                assert!((num - analytic[k]).abs() < 1e-8, "{} {j}", GRU_TENSORS[ti]);
                k += 1;
            }
        }
        for j in 0..4 {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[j] += eps;
            b[j] -= eps;
            assert!(((loss(&p, &a, &hp) - loss(&p, &b, &hp)) / (2.0 * eps) - dx[j]).abs() < 1e-8);
        }
        for j in 0..3 {
            let (mut a, mut b) = (hp.clone(), hp.clone());
            a[j] += eps;
            b[j] -= eps;
            assert!(((loss(&p, &x, &a) - loss(&p, &x, &b)) / (2.0 * eps) - dhp[j]).abs() < 1e-8);
        }
    }
}
