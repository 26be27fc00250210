//! L2-regularized hinge-loss linear SVM trained by dual coordinate descent.
//!
//! Solves `min ½‖w‖² + Σ Cᵢ·max(0, 1 − yᵢ w·xᵢ)` through its dual
//! `max Σαᵢ − ½‖Σ αᵢyᵢxᵢ‖²` subject to `0 ≤ αᵢ ≤ Cᵢ`. The bias is learned as the weight
//! of an extra constant feature (so it is regularized too).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Stop once the largest projected-gradient magnitude falls below this.
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Value of the constant feature appended for the bias; `None` trains without bias.
    pub bias: Option<f64>,
    /// Record the dual objective after every epoch.
    pub track_objective: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: 1e-3,
            max_epochs: 1000,
            seed: 0,
            bias: Some(1.0),
            track_objective: false,
        }
    }
}

/// Per-example dual variables and their box caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub alphas: Vec<f64>,
    pub caps: Vec<f64>,
}

impl DualState {
    pub fn within_bounds(&self) -> bool {
        self.alphas
            .iter()
            .zip(&self.caps)
            .all(|(&a, &c)| (0.0..=c).contains(&a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub positive_class: String,
    pub negative_class: String,
}

impl LinearModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVector) -> &str {
        if self.decision(x) > 0.0 {
            &self.positive_class
        } else {
            &self.negative_class
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainInfo {
    pub epochs: usize,
    pub converged: bool,
    /// Largest projected-gradient magnitude at termination.
    pub kkt_residual: f64,
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// Dual objective after each epoch, when tracking was requested.
    pub dual_history: Vec<f64>,
    pub state: DualState,
}

/// Cost multipliers applied to C for the positive and negative class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCosts {
    pub positive: f64,
    pub negative: f64,
}

impl ClassCosts {
    pub const UNIT: ClassCosts = ClassCosts { positive: 1.0, negative: 1.0 };
}

fn augmented_dot(w: &[f64], x: &SparseVector, bias: Option<f64>) -> f64 {
    let mut s = x.dot_dense(w);
    if let Some(b) = bias {
        s += w[w.len() - 1] * b;
    }
    s
}

fn augmented_axpy(w: &mut [f64], scale: f64, x: &SparseVector, bias: Option<f64>) {
    for &(i, v) in &x.pairs {
        w[i] += scale * v;
    }
    if let Some(b) = bias {
        let last = w.len() - 1;
        w[last] += scale * b;
    }
}

fn projected_gradient(g: f64, alpha: f64, cap: f64) -> f64 {
    if alpha <= 0.0 {
        g.min(0.0)
    } else if alpha >= cap {
        g.max(0.0)
    } else {
        g
    }
}

/// Primal objective of a weight vector (bias included as an ordinary weight).
pub fn primal_objective(model: &LinearModel, x: &[SparseVector], y: &[i8], caps: &[f64], bias: Option<f64>) -> f64 {
    let bias_weight = match bias {
        Some(b) if b != 0.0 => model.bias / b,
        _ => 0.0,
    };
    let reg = 0.5 * (model.weights.iter().map(|w| w * w).sum::<f64>() + bias_weight * bias_weight);
    let loss: f64 = x
        .iter()
        .zip(y)
        .zip(caps)
        .map(|((xi, &yi), &c)| c * (1.0 - f64::from(yi) * model.decision(xi)).max(0.0))
        .sum();
    reg + loss
}

/// Trains one binary classifier. `y` holds +1 for `positive_class`, −1 otherwise.
pub fn train_binary_svm(
    x: &[SparseVector],
    y: &[i8],
    dim: usize,
    c: f64,
    costs: ClassCosts,
    classes: (&str, &str),
    params: &SolverParams,
) -> Result<(LinearModel, TrainInfo)> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} vectors but {} labels", x.len(), y.len())));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("C must be positive, got {c}")));
    }
    if y.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::InvalidInput("binary labels must be +1 or -1".into()));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::Degenerate("binary SVM needs examples of both classes".into()));
    }
    if let Some(bad) = x.iter().filter_map(SparseVector::max_index).find(|&m| m >= dim) {
        return Err(Error::InvalidInput(format!("feature index {bad} out of range for dimension {dim}")));
    }
    let bias = params.bias;
    let n = x.len();
    let caps: Vec<f64> = y
        .iter()
        .map(|&yi| c * if yi > 0 { costs.positive } else { costs.negative })
        .collect();
    let qii: Vec<f64> = x
        .iter()
        .map(|xi| xi.squared_norm() + bias.map_or(0.0, |b| b * b))
        .collect();

    let mut w = vec![0.0; dim + usize::from(bias.is_some())];
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut history = Vec::new();
    let mut epochs = 0;
    let mut converged = false;

    let dual = |w: &[f64], alpha: &[f64]| alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>();

    while epochs < params.max_epochs {
        order.shuffle(&mut rng);
        let mut sweep_max = 0.0f64;
        for &i in &order {
            if qii[i] <= 0.0 {
                continue;
            }
            let yi = f64::from(y[i]);
            let g = yi * augmented_dot(&w, &x[i], bias) - 1.0;
            let pg = projected_gradient(g, alpha[i], caps[i]);
            sweep_max = sweep_max.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, caps[i]);
                let delta = alpha[i] - old;
                if delta != 0.0 {
                    augmented_axpy(&mut w, delta * yi, &x[i], bias);
                }
            }
        }
        epochs += 1;
        if params.track_objective {
            history.push(dual(&w, &alpha));
        }
        if sweep_max <= params.tolerance && kkt_residual(&w, &alpha, &caps, &qii, x, y, bias) <= params.tolerance {
            converged = true;
            break;
        }
    }

    let residual = kkt_residual(&w, &alpha, &caps, &qii, x, y, bias);
    let dual_objective = dual(&w, &alpha);
    let bias_value = match bias {
        Some(b) => w.pop().unwrap_or(0.0) * b,
        None => 0.0,
    };
    let model = LinearModel {
        weights: w,
        bias: bias_value,
        positive_class: classes.0.to_string(),
        negative_class: classes.1.to_string(),
    };
    let primal = primal_objective(&model, x, y, &caps, bias);
    let info = TrainInfo {
        epochs,
        converged,
        kkt_residual: residual,
        dual_objective,
        primal_objective: primal,
        dual_history: history,
        state: DualState { alphas: alpha, caps },
    };
    if !converged {
        log::debug!("svm stopped after {epochs} epochs, residual {residual:.2e}");
    }
    Ok((model, info))
}

fn kkt_residual(
    w: &[f64],
    alpha: &[f64],
    caps: &[f64],
    qii: &[f64],
    x: &[SparseVector],
    y: &[i8],
    bias: Option<f64>,
) -> f64 {
    (0..x.len())
        .filter(|&i| qii[i] > 0.0)
        .map(|i| {
            let g = f64::from(y[i]) * augmented_dot(w, &x[i], bias) - 1.0;
            projected_gradient(g, alpha[i], caps[i]).abs()
        })
        .fold(0.0, f64::max)
}
