//! Accelerated proximal gradient for the quadratic-plus-prox subproblems
//! that appear inside the semi-strong scheme and ADMM:
//!
//! ```text
//! min_w  h(w) + <c, w> + (ρ/2)‖Bw - d‖² + (ν/2)‖w - center‖²
//! ```

use crate::error::{Error, Result};
use crate::linop::LinearMap;
use crate::prox::ProxFunction;
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSettings {
    /// Tolerance on the gradient-mapping norm.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerReport {
    pub iterations: usize,
    pub residual: f64,
}

pub struct QuadSubproblem<'a> {
    pub h: &'a dyn ProxFunction,
    pub linear: Option<&'a [f64]>,
    pub rho: f64,
    pub op: &'a LinearMap,
    pub d: &'a [f64],
    pub nu: f64,
    pub center: Option<&'a [f64]>,
}

impl QuadSubproblem<'_> {
    fn gradient(&self, w: &[f64], bw: &mut [f64], out: &mut [f64]) {
        self.op.forward(w, bw);
        for (v, di) in bw.iter_mut().zip(self.d) {
            *v = self.rho * (*v - di);
        }
        self.op.adjoint(bw, out);
        if let Some(c) = self.linear {
            vector::axpy(1.0, c, out);
        }
        if self.nu > 0.0 {
            match self.center {
                Some(z) => {
                    for ((o, wi), zi) in out.iter_mut().zip(w).zip(z) {
                        *o += self.nu * (wi - zi);
                    }
                }
                None => vector::axpy(self.nu, w, out),
            }
        }
    }

    fn lipschitz(&self) -> f64 {
        let nb = self.op.norm();
        self.rho * nb * nb + self.nu
    }

    /// FISTA with gradient-based adaptive restart, warm-started at `w`.
    pub fn solve(&self, w: &mut [f64], settings: InnerSettings) -> Result<InnerReport> {
        let l = self.lipschitz();
        if !(l > 0.0) {
            return Err(Error::InvalidConfig(
                "inner subproblem has no curvature; add a proximal weight".into(),
            ));
        }
        let step = 1.0 / l;
        let q = w.len();
        let mut bw = vec![0.0; self.d.len()];
        let mut grad = vec![0.0; q];
        let mut z = w.to_vec();
        let mut u = vec![0.0; q];
        let mut w_new = vec![0.0; q];
        let mut t = 1.0_f64;
        let mut residual = f64::INFINITY;
        for it in 0..settings.max_iters {
            self.gradient(&z, &mut bw, &mut grad);
            for j in 0..q {
                u[j] = z[j] - step * grad[j];
            }
            self.h.prox_into(&u, step, &mut w_new);
            // gradient mapping at z
            residual = l * vector::dist(&z, &w_new);
            if !residual.is_finite() {
                return Err(Error::InnerSolver {
                    iterations: it,
                    residual,
                });
            }
            if residual <= settings.tol {
                w.copy_from_slice(&w_new);
                return Ok(InnerReport {
                    iterations: it + 1,
                    residual,
                });
            }
            let restart = (0..q).map(|j| (z[j] - w_new[j]) * (w_new[j] - w[j])).sum::<f64>() > 0.0;
            let t_next = if restart {
                1.0
            } else {
                0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
            };
            let mom = if restart { 0.0 } else { (t - 1.0) / t_next };
            for j in 0..q {
                z[j] = w_new[j] + mom * (w_new[j] - w[j]);
            }
            w.copy_from_slice(&w_new);
            t = t_next;
        }
        Err(Error::InnerSolver {
            iterations: settings.max_iters,
            residual,
        })
    }
}
