//! Discrete soft actor-critic losses. Each batch loss returns its value and
//! the gradient with respect to the network outputs it consumes.

use ndarray::{Array2, ArrayView1, Axis};

use super::net::Mlp;

pub fn logsumexp(row: ArrayView1<'_, f64>) -> f64 {
    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + row.iter().map(|&z| (z - m).exp()).sum::<f64>().ln()
}

pub fn policy_probs(logits: &[f64]) -> Vec<f64> {
    let lse = logsumexp(ArrayView1::from(logits));
    logits.iter().map(|&z| (z - lse).exp()).collect()
}

pub fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let lse = logsumexp(row.view());
        row.mapv_inplace(|z| z - lse);
    }
    out
}

/// Shannon entropy in nats, with 0·log 0 = 0.
pub fn policy_entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// `y = r + γ(1−done) Σ_a' π(a'|s')[min_i Q̂_i(s',a') − α log π(a'|s')]`.
pub fn critic_target(
    rewards: &[f64],
    dones: &[bool],
    next_log_probs: &Array2<f64>,
    q1_next: &Array2<f64>,
    q2_next: &Array2<f64>,
    alpha: f64,
    gamma: f64,
) -> Vec<f64> {
    (0..rewards.len())
        .map(|b| {
            if dones[b] || gamma == 0.0 {
                return rewards[b];
            }
            let v: f64 = (0..next_log_probs.ncols())
                .map(|a| {
                    let lp = next_log_probs[[b, a]];
                    lp.exp() * (q1_next[[b, a]].min(q2_next[[b, a]]) - alpha * lp)
                })
                .sum();
            rewards[b] + gamma * v
        })
        .collect()
}

/// Mean squared Bellman residual of the taken actions.
pub fn critic_loss(q: &Array2<f64>, actions: &[usize], y: &[f64]) -> (f64, Array2<f64>) {
    let n = actions.len() as f64;
    let mut grad = Array2::zeros(q.raw_dim());
    let mut loss = 0.0;
    for (b, (&a, &yb)) in actions.iter().zip(y).enumerate() {
        let r = q[[b, a]] - yb;
        loss += r * r;
        grad[[b, a]] = 2.0 * r / n;
    }
    (loss / n, grad)
}

/// `logΣ_a exp Q(s,a) − Q(s,a_expert)` for one state.
pub fn cql_penalty(q_row: &[f64], expert_action: usize) -> f64 {
    logsumexp(ArrayView1::from(q_row)) - q_row[expert_action]
}

/// Batch mean of [`cql_penalty`].
pub fn cql_penalty_batch(q: &Array2<f64>, actions: &[usize]) -> (f64, Array2<f64>) {
    let n = actions.len() as f64;
    let mut grad = Array2::zeros(q.raw_dim());
    let mut loss = 0.0;
    for (b, &a) in actions.iter().enumerate() {
        let row = q.row(b);
        let lse = logsumexp(row);
        loss += lse - row[a];
        for j in 0..row.len() {
            grad[[b, j]] = (row[j] - lse).exp() / n;
        }
        grad[[b, a]] -= 1.0 / n;
    }
    (loss / n, grad)
}

/// `E_s Σ_a π(a|s)[α log π(a|s) − Q_min(s,a)]`, differentiated w.r.t. logits.
pub fn actor_loss(logits: &Array2<f64>, q_min: &Array2<f64>, alpha: f64) -> (f64, Array2<f64>) {
    let n = logits.nrows() as f64;
    let logp = log_softmax_rows(logits);
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for b in 0..logits.nrows() {
        let f: Vec<f64> = (0..logits.ncols()).map(|a| alpha * logp[[b, a]] - q_min[[b, a]]).collect();
        let mean: f64 = f.iter().enumerate().map(|(a, fa)| logp[[b, a]].exp() * fa).sum();
        loss += mean;
        for a in 0..f.len() {
            grad[[b, a]] = logp[[b, a]].exp() * (f[a] - mean) / n;
        }
    }
    (loss / n, grad)
}

/// `E_s[α(H(π) − H̄)]` with α = exp(log α); returns (loss, dL/d log α).
/// Descending it raises α when the policy is less random than H̄.
pub fn temperature_loss(log_alpha: f64, probs: &Array2<f64>, target_entropy: f64) -> (f64, f64) {
    let alpha = log_alpha.exp();
    let gap = probs
        .axis_iter(Axis(0))
        .map(|p| policy_entropy(p.as_slice().expect("contiguous row")) - target_entropy)
        .sum::<f64>()
        / probs.nrows().max(1) as f64;
    (alpha * gap, alpha * gap)
}

/// Largest `|analytic − numeric| / (|analytic| + 1e−8)` over all parameters,
/// with central differences of step 1e−5.
pub fn gradient_check(net: &Mlp, x: &Array2<f64>, loss: impl Fn(&Array2<f64>) -> (f64, Array2<f64>)) -> f64 {
    let (_, analytic) = net.gradient(x, &loss);
    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for j in 0..net.n_params() {
        let orig = probe.params[j];
        probe.params[j] = orig + h;
        let up = loss(&probe.forward(x)).0;
        probe.params[j] = orig - h;
        let down = loss(&probe.forward(x)).0;
        probe.params[j] = orig;
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((analytic[j] - numeric).abs() / (analytic[j].abs() + 1e-8));
    }
    worst
}
