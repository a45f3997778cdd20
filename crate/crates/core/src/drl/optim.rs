//! First-order optimizers over [`Mlp`] parameters. Both minimize.

use super::mlp::{Grads, Mlp};

#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn step(&self, net: &mut Mlp, g: &Grads) {
        net.apply(g, -self.lr);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let n = net.param_count();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, net: &mut Mlp, g: &Grads) {
        self.t = self.t.saturating_add(1);
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let mut i = 0;
        for (l, d) in net.layers_mut().iter_mut().zip(&g.layers) {
            let params = l.w.iter_mut().zip(d.w.iter()).chain(l.b.iter_mut().zip(d.b.iter()));
            for (p, &gr) in params {
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * gr;
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * gr * gr;
                *p -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
                i += 1;
            }
        }
    }
}
