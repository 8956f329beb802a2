//! Exact backpropagation through time for the MemNet cell, derived by hand
//! from the step equations.
//!
//! The subtle part is the external memory. The read at step t touches
//! events produced by *earlier* steps, so its gradient cannot be confined
//! to step t: it must flow into the key and value projections of each
//! producing step u < t, and from there into u's input weights and into
//! h_{u−1}. Concretely, with `g_i = sims_t[i]` against slot i produced by
//! step u:
//!
//! ```text
//! r_t = Σ_i g_i · v_u(i)                      g_i = exp(−‖q_t − k_u(i)‖²/(2σ))
//!
//! ∂J/∂q_t   += −(a_i · g_i / σ)(q_t − k_u(i))        a_i = ⟨∂J/∂r_t, v_u(i)⟩
//! ∂J/∂k_u   += +(a_i · g_i / σ)(q_t − k_u(i))
//! ∂J/∂v_u   += g_i · ∂J/∂r_t
//! ```
//!
//! Never-written slots hold zero constants, so they contribute exactly
//! nothing (`a_i = 0`) and are skipped.
//!
//! Scheduling: the loop runs t = T−1 … 0. A step's key/value gradients
//! only receive contributions from *later* steps' reads, all of which have
//! already been processed when the loop reaches the producing step, so
//! per-step accumulators `dk_acc[u]`, `dv_acc[u]` are complete exactly when
//! needed. The hidden-state chain needs only a single carried vector,
//! because h_{t−1} is consumed by step t alone (through q, k, v, h and o).
//! A write-gated step never appears as a producer, so its `dk_acc`/`dv_acc`
//! stay zero and its key/value projections correctly receive no gradient.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::ModelParams;
use crate::train::tape::ComputationTape;

/// Loss gradients, one entry per weight; same shapes, canonical order and
/// helpers as [`ModelParams`].
pub type Gradients = ModelParams;

/// Per-step adjoints kept around for inspection and invariant tests.
#[derive(Debug, Clone)]
pub struct BackwardDetail {
    /// ∂J/∂r_t
    pub dr: Vec<Vec<f64>>,
    /// ∂J/∂q_t
    pub dq: Vec<Vec<f64>>,
    /// ∂J/∂k_t — nonzero only if step t's event was read later.
    pub dk: Vec<Vec<f64>>,
    /// ∂J/∂v_t — likewise.
    pub dv: Vec<Vec<f64>>,
    /// ∂J/∂h_t as received from steps after t (zero for the last step).
    pub dh: Vec<Vec<f64>>,
}

/// Gradient of the recorded sequence's masked loss with respect to every
/// weight. `params` and `sigma` must be the ones the tape was recorded with.
pub fn backward(tape: &ComputationTape, params: &ModelParams, sigma: f64) -> Result<Gradients> {
    backward_with_detail(tape, params, sigma).map(|(g, _)| g)
}

pub fn backward_with_detail(
    tape: &ComputationTape,
    params: &ModelParams,
    sigma: f64,
) -> Result<(Gradients, BackwardDetail)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParam(format!("sigma must be positive and finite, got {sigma}")));
    }
    let t_total = tape.len();
    if t_total == 0 {
        return Err(Error::InvalidParam("cannot run backward on an empty tape".into()));
    }
    let n_h = params.wq_x.rows;
    let dims = params.dims_with_mem(tape.n_mem);
    let mut grads = Gradients::zeros(&dims);

    // Key/value adjoints per producing step, filled by later steps' reads.
    let mut dk_acc = vec![vec![0.0; n_h]; t_total];
    let mut dv_acc = vec![vec![0.0; n_h]; t_total];

    let mut detail = BackwardDetail {
        dr: vec![Vec::new(); t_total],
        dq: vec![Vec::new(); t_total],
        dk: vec![Vec::new(); t_total],
        dv: vec![Vec::new(); t_total],
        dh: vec![Vec::new(); t_total],
    };

    // ∂J/∂h_t carried backwards; starts at zero for the final step.
    let mut dh_next = vec![0.0; n_h];

    for t in (0..t_total).rev() {
        let tr = &tape.steps[t];
        detail.dh[t] = dh_next.clone();

        // Output: o_t = Wo_r·r_t + Wo_h·h_{t−1};  ∂J/∂o_t = mask·(o_t − d_t).
        let do_t: Vec<f64> = if tape.mask[t] {
            tr.o.iter().zip(&tape.targets[t]).map(|(o, d)| o - d).collect()
        } else {
            vec![0.0; tr.o.len()]
        };
        grads.wo_r.add_outer(&do_t, &tr.r);
        grads.wo_h.add_outer(&do_t, &tr.h_prev);
        let mut dr = vec![0.0; n_h];
        params.wo_r.tr_matvec_add(&do_t, &mut dr);
        let mut dh_prev = vec![0.0; n_h];
        params.wo_h.tr_matvec_add(&do_t, &mut dh_prev);

        // Hidden: h_t = Wh_r·r_t + Wh_x·x_t + Wh_h·h_{t−1}.
        let dh = &dh_next;
        grads.wh_r.add_outer(dh, &tr.r);
        grads.wh_x.add_outer(dh, &tr.x);
        grads.wh_h.add_outer(dh, &tr.h_prev);
        params.wh_r.tr_matvec_add(dh, &mut dr);
        params.wh_h.tr_matvec_add(dh, &mut dh_prev);

        // Read: route ∂J/∂r_t into q_t and into each producing step's (k, v).
        let mut dq = vec![0.0; n_h];
        let fill = tape.pushes_before[t].min(tape.n_mem);
        for slot in 0..fill {
            let u = tape.push_steps[tape.pushes_before[t] - 1 - slot];
            let k_u = &tape.steps[u].k;
            let v_u = &tape.steps[u].v;
            let g = tr.sims[slot];
            let a = dot(&dr, v_u);
            let coeff = a * g / sigma;
            let dku = &mut dk_acc[u];
            for j in 0..n_h {
                let diff = tr.q[j] - k_u[j];
                dq[j] -= coeff * diff;
                dku[j] += coeff * diff;
            }
            let dvu = &mut dv_acc[u];
            for j in 0..n_h {
                dvu[j] += g * dr[j];
            }
        }

        // Projections: q/k/v_t = W•_x·x_t + W•_h·h_{t−1}. dk_acc[t] and
        // dv_acc[t] are complete — every step that read this event lies
        // after t and has been processed.
        let dk = std::mem::take(&mut dk_acc[t]);
        let dv = std::mem::take(&mut dv_acc[t]);
        grads.wq_x.add_outer(&dq, &tr.x);
        grads.wq_h.add_outer(&dq, &tr.h_prev);
        grads.wk_x.add_outer(&dk, &tr.x);
        grads.wk_h.add_outer(&dk, &tr.h_prev);
        grads.wv_x.add_outer(&dv, &tr.x);
        grads.wv_h.add_outer(&dv, &tr.h_prev);
        params.wq_h.tr_matvec_add(&dq, &mut dh_prev);
        params.wk_h.tr_matvec_add(&dk, &mut dh_prev);
        params.wv_h.tr_matvec_add(&dv, &mut dh_prev);

        detail.dr[t] = dr;
        detail.dq[t] = dq;
        detail.dk[t] = dk;
        detail.dv[t] = dv;

        dh_next = dh_prev;
    }
    // dh_next now holds ∂J/∂h_{−1}; the initial state is a constant, so it
    // is simply dropped.

    Ok((grads, detail))
}
