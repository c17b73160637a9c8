use crate::nn::params::{flatten, Params};

/// Adam with bias correction. Moment buffers follow the visitation order of
/// the parameter tree they were created for.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<P: Params>(params: &P, beta1: f64, beta2: f64, eps: f64) -> Self {
        let mut m = Vec::new();
        params.visit("", &mut |_, _, v| m.push(vec![0.0; v.len()]));
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn update<P: Params>(&mut self, params: &mut P, grads: &P, lr: f64) {
        let g = flatten(grads);
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powf(self.step as f64);
        let bc2 = 1.0 - self.beta2.powf(self.step as f64);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let mut off = 0;
        let mut idx = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        params.visit_mut("", &mut |_, _, p| {
            let m = &mut ms[idx];
            let v = &mut vs[idx];
            assert_eq!(m.len(), p.len(), "optimizer state does not match parameters");
            for i in 0..p.len() {
                let gi = g[off + i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
            off += p.len();
            idx += 1;
        });
    }
}
