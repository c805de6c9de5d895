//! Continuous-time Markov chain equivalent of the model when every law is
//! exponential, built directly from the host behaviour rather than from the
//! semi-Markov event lists. Used as an independent oracle.
//!
//! The two checking states (aging primary with idle backup, and the mirror
//! case) are split by which of the three check outcomes is armed on entry,
//! since each one is armed independently with its own probability.

use nalgebra::DMatrix;

use crate::distributions::Distribution;
use crate::model::{ModelParams, N_STATES};
use crate::numerics::Vector;

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Plain(usize),
    /// Checking state with the set of armed outcomes as a 3-bit mask.
    Check(usize, u8),
}

impl Node {
    fn state(self) -> usize {
        match self {
            Node::Plain(s) | Node::Check(s, _) => s,
        }
    }
}

fn rate(d: &Distribution) -> Result<f64, AnalysisError> {
    match d {
        Distribution::Exponential { rate } => Ok(*rate),
        other => Err(AnalysisError::Workload(vec![format!(
            "CTMC oracle needs exponential laws, got {}",
            other.family()
        )])),
    }
}

pub struct Ctmc {
    nodes: Vec<Node>,
    q: DMatrix<f64>,
}

impl Ctmc {
    pub fn build(p: &ModelParams) -> Result<Self, AnalysisError> {
        let mut nodes = Vec::new();
        for s in 0..N_STATES {
            if s == 1 || s == 8 {
                for mask in 0..8u8 {
                    nodes.push(Node::Check(s, mask));
                }
            } else {
                nodes.push(Node::Plain(s));
            }
        }
        let n = nodes.len();
        let idx = |node: Node| nodes.iter().position(|&m| m == node).expect("node exists");
        let c = [p.branch.c1, p.branch.c2, p.branch.c3];
        let mask_prob = |mask: u8| -> f64 {
            (0..3).map(|i| if mask & (1 << i) != 0 { c[i] } else { 1.0 - c[i] }).product()
        };

        let (pr, bk) = (&p.primary, &p.backup);
        let trig = |i: usize| rate(&p.triggers[i - 1]);
        let mut q = DMatrix::zeros(n, n);
        let mut add = |from: Node, to: usize, r: f64| {
            let i = idx(from);
            if to == 1 || to == 8 {
                for mask in 0..8u8 {
                    q[(i, idx(Node::Check(to, mask)))] += r * mask_prob(mask);
                }
            } else {
                q[(i, idx(Node::Plain(to)))] += r;
            }
        };

        // Healthy primary ages; idle-backup checking begins.
        add(Node::Plain(0), 8, rate(&pr.aging)?);
        // Healthy backup (after a switch-over) ages.
        add(Node::Plain(7), 1, rate(&bk.aging)?);
        for mask in 0..8u8 {
            let primary_check = Node::Check(8, mask);
            add(primary_check, 10, rate(&pr.failure_idle)?);
            let backup_check = Node::Check(1, mask);
            add(backup_check, 11, rate(&bk.failure_idle)?);
            if mask & 1 != 0 {
                add(primary_check, 2, trig(1)?);
                add(backup_check, 9, trig(4)?);
            }
            if mask & 2 != 0 {
                add(primary_check, 6, rate(&bk.reboot)?);
                add(backup_check, 4, rate(&pr.reboot)?);
            }
            if mask & 4 != 0 {
                add(primary_check, 3, rate(&bk.fixing)?);
                add(backup_check, 5, rate(&pr.fixing)?);
            }
        }
        // Migration from the primary to the backup.
        add(Node::Plain(2), 7, rate(&p.migration)?);
        add(Node::Plain(2), 10, rate(&pr.failure_migration)?);
        // Migration back to the primary.
        add(Node::Plain(9), 0, rate(&p.migration)?);
        add(Node::Plain(9), 11, rate(&bk.failure_migration)?);
        // Aging primary waiting for the backup to reboot or be fixed.
        add(Node::Plain(3), 2, trig(3)?);
        add(Node::Plain(3), 10, rate(&pr.failure_reboot)?);
        add(Node::Plain(6), 2, trig(2)?);
        add(Node::Plain(6), 10, rate(&pr.failure_fixing)?);
        // Aging backup waiting for the primary.
        add(Node::Plain(4), 9, trig(5)?);
        add(Node::Plain(4), 11, rate(&bk.failure_fixing)?);
        add(Node::Plain(5), 9, trig(6)?);
        add(Node::Plain(5), 11, rate(&bk.failure_reboot)?);
        // Repairs.
        add(Node::Plain(10), 0, rate(&pr.fixing)?);
        add(Node::Plain(11), 7, rate(&bk.fixing)?);

        for i in 0..n {
            let out: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -out;
        }
        Ok(Self { nodes, q })
    }

    /// Long-run probability of each of the twelve model states.
    pub fn stationary(&self) -> Result<Vec<f64>, AnalysisError> {
        let n = self.nodes.len();
        let mut a = self.q.transpose();
        a.row_mut(n - 1).fill(1.0);
        let mut rhs = Vector::zeros(n);
        rhs[n - 1] = 1.0;
        let x = a.lu().solve(&rhs).ok_or(crate::numerics::NumericsError::Singular)?;
        let mut out = vec![0.0; N_STATES];
        for (node, v) in self.nodes.iter().zip(x.iter()) {
            out[node.state()] += v;
        }
        Ok(out)
    }

    pub fn availability(&self) -> Result<f64, AnalysisError> {
        let pi = self.stationary()?;
        Ok(1.0 - pi[10] - pi[11])
    }

    /// Mean first-passage time from the fresh state into either failed state.
    pub fn mttf(&self) -> Result<f64, AnalysisError> {
        let up: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.nodes[i].state() < 10).collect();
        let k = up.len();
        let a = DMatrix::from_fn(k, k, |i, j| -self.q[(up[i], up[j])]);
        let tau = a.lu().solve(&Vector::from_element(k, 1.0)).ok_or(crate::numerics::NumericsError::Singular)?;
        let start = up.iter().position(|&i| self.nodes[i] == Node::Plain(0)).expect("L0 is up");
        Ok(tau[start])
    }
}

/// Replaces every deterministic trigger by an exponential law of equal mean.
pub fn exponential_triggers(p: &ModelParams) -> ModelParams {
    let mut out = *p;
    for t in &mut out.triggers {
        *t = Distribution::Exponential { rate: 1.0 / t.mean() };
    }
    out
}
