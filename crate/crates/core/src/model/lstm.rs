//! LSTM layer with zero initial state and backpropagation through time.
//!
//! Gate pre-activations are stacked as `[input, forget, cell, output]`, each
//! block `hidden` rows tall.

use super::tensor::{sigmoid, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    /// `4h x input`
    pub w_input: Tensor<T>,
    /// `4h x h`
    pub w_hidden: Tensor<T>,
    /// `4h`
    pub bias: Tensor<T>,
}

/// Per-step activations needed by the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmTrace<T> {
    pub inputs: Vec<Vec<T>>,
    pub hidden: Vec<Vec<T>>,
    pub cells: Vec<Vec<T>>,
    /// Post-activation gates `[i, f, g, o]` per step.
    pub gates: Vec<Vec<T>>,
}

impl<T: Scalar> LstmTrace<T> {
    pub fn last_hidden(&self) -> &[T] {
        self.hidden.last().expect("trace has at least one step")
    }
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Tensor::zeros(&[4 * hidden, input]),
            w_hidden: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_hidden.cols()
    }

    pub fn input_size(&self) -> usize {
        self.w_input.cols()
    }

    /// Run the recurrence from `h_0 = c_0 = 0`.
    pub fn forward(&self, inputs: &[Vec<T>]) -> LstmTrace<T> {
        let h = self.hidden_size();
        let mut prev_h = vec![T::zero(); h];
        let mut prev_c = vec![T::zero(); h];
        let mut trace = LstmTrace {
            inputs: inputs.to_vec(),
            hidden: Vec::with_capacity(inputs.len()),
            cells: Vec::with_capacity(inputs.len()),
            gates: Vec::with_capacity(inputs.len()),
        };
        for x in inputs {
            let mut z = self.w_input.matvec(x);
            for ((zi, hz), &b) in z.iter_mut().zip(self.w_hidden.matvec(&prev_h)).zip(self.bias.data()) {
                *zi += hz + b;
            }
            let mut gates = z;
            for (j, g) in gates.iter_mut().enumerate() {
                *g = if (2 * h..3 * h).contains(&j) { g.tanh() } else { sigmoid(*g) };
            }
            let (i, rest) = gates.split_at(h);
            let (f, rest) = rest.split_at(h);
            let (g, o) = rest.split_at(h);
            let c: Vec<T> = (0..h).map(|j| f[j] * prev_c[j] + i[j] * g[j]).collect();
            let hid: Vec<T> = (0..h).map(|j| o[j] * c[j].tanh()).collect();
            trace.gates.push(gates.clone());
            trace.cells.push(c.clone());
            trace.hidden.push(hid.clone());
            prev_h = hid;
            prev_c = c;
        }
        trace
    }

    /// Gradients of the parameters and inputs given `d_hidden[t]`, the loss
    /// gradient flowing into each hidden state from outside the recurrence.
    pub fn backward(&self, trace: &LstmTrace<T>, d_hidden: &[Vec<T>]) -> (LstmParams<T>, Vec<Vec<T>>) {
        let h = self.hidden_size();
        let k = trace.hidden.len();
        let mut grads = Self::zeros(self.input_size(), h);
        let mut d_inputs = vec![vec![T::zero(); self.input_size()]; k];
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        let zeros = vec![T::zero(); h];
        for t in (0..k).rev() {
            let gates = &trace.gates[t];
            let c = &trace.cells[t];
            let c_prev = if t > 0 { &trace.cells[t - 1] } else { &zeros };
            let h_prev = if t > 0 { &trace.hidden[t - 1] } else { &zeros };
            let mut dz = vec![T::zero(); 4 * h];
            for j in 0..h {
                let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let dh = d_hidden[t][j] + dh_next[j];
                let tc = c[j].tanh();
                let dc = dh * o * (T::one() - tc * tc) + dc_next[j];
                dz[j] = dc * g * i * (T::one() - i);
                dz[h + j] = dc * c_prev[j] * f * (T::one() - f);
                dz[2 * h + j] = dc * i * (T::one() - g * g);
                dz[3 * h + j] = dh * tc * o * (T::one() - o);
                dc_next[j] = dc * f;
            }
            grads.w_input.outer_acc(&dz, &trace.inputs[t]);
            grads.w_hidden.outer_acc(&dz, h_prev);
            grads.bias.add_slice(&dz);
            self.w_input.matvec_t_acc(&dz, &mut d_inputs[t]);
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            self.w_hidden.matvec_t_acc(&dz, &mut dh_next);
        }
        (grads, d_inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_and_inputs_give_zero_states() {
        let p = LstmParams::<f64>::zeros(3, 2);
        let tr = p.forward(&[vec![0.0; 3], vec![0.0; 3]]);
        assert!(tr.hidden.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_step_matches_hand_trace() {
        // d = 1: gates i, f, g, o with input weights (0.5, -0.3, 0.8, 0.2),
        // recurrent weights (0.1, 0.2, -0.4, 0.3), biases (0.0, 1.0, 0.1, -0.2).
        let p = LstmParams {
            w_input: Tensor::from_vec(&[4, 1], vec![0.5, -0.3, 0.8, 0.2]),
            w_hidden: Tensor::from_vec(&[4, 1], vec![0.1, 0.2, -0.4, 0.3]),
            bias: Tensor::from_vec(&[4], vec![0.0, 1.0, 0.1, -0.2]),
        };
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let x1 = 1.5;
        let i1 = sig(0.5 * x1);
        let g1 = (0.8 * x1 + 0.1).tanh();
        let o1 = sig(0.2 * x1 - 0.2);
        let c1 = i1 * g1;
        let h1 = o1 * c1.tanh();
        let x2 = -0.7;
        let i2 = sig(0.5 * x2 + 0.1 * h1);
        let f2 = sig(-0.3 * x2 + 0.2 * h1 + 1.0);
        let g2 = (0.8 * x2 - 0.4 * h1 + 0.1).tanh();
        let o2 = sig(0.2 * x2 + 0.3 * h1 - 0.2);
        let c2 = f2 * c1 + i2 * g2;
        let h2 = o2 * c2.tanh();
        let tr = p.forward(&[vec![x1], vec![x2]]);
        assert!((tr.hidden[0][0] - h1).abs() < 1e-15);
        assert!((tr.hidden[1][0] - h2).abs() < 1e-15);
    }

    #[test]
    fn causality() {
        let mut p = LstmParams::<f64>::zeros(2, 2);
        for (i, w) in p.w_input.data_mut().iter_mut().enumerate() {
            *w = (i as f64 * 0.37).sin();
        }
        for (i, w) in p.w_hidden.data_mut().iter_mut().enumerate() {
            *w = (i as f64 * 0.11).cos() * 0.5;
        }
        let a = p.forward(&[vec![0.1, 0.2], vec![0.3, -0.4], vec![0.5, 0.6]]);
        let b = p.forward(&[vec![0.1, 0.2], vec![0.3, -0.4], vec![-9.0, 9.0]]);
        let c = p.forward(&[vec![0.1, 0.2]]);
        assert_eq!(a.hidden[..2], b.hidden[..2]);
        assert_eq!(a.hidden[0], c.hidden[0]);
        assert_ne!(a.hidden[2], b.hidden[2]);
    }
}
