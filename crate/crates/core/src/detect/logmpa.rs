//! Log-domain message passing (sum-product) over the SCMA factor graph.
//!
//! Resource (function) nodes combine the Gaussian metric of every joint symbol
//! of their colliding users with the incoming user messages using an exact
//! log-sum-exp; user (variable) nodes add the messages from their other
//! resources. Messages start uniform (all zero in the log domain).
//!
//! # Operation accounting
//!
//! Every frame is charged with the same cost model the closed forms in
//! [`super::count_logmpa_ops`] describe, so an instrumented run reproduces
//! them on regular graphs. Per edge `(k, j)` and per hypothesis of user `j`,
//! with `d` users on resource `k` and `G = M^(d-1)` joint hypotheses of the
//! others:
//!
//! * metric set-up (once per frame): `4dG + 5` multiplications and `(4d-2)G + 5`
//!   additions. The metric table is actually evaluated once per joint symbol
//!   and shared by all edges of the resource; the charge follows the per-edge
//!   reference accounting.
//! * function-node update (per iteration): `(d-1)G` additions to combine the
//!   metric with the other users' messages, `G` exponentials and one logarithm.
//!   Accumulating the exponentials is charged `G` additions per edge (one per
//!   `M` terms). The max-shift that keeps the log-sum-exp finite is not charged.
//! * variable-node update (per iteration, counted as executed): `N_j - 1`
//!   additions for the total of user `j`'s incoming messages and one
//!   subtraction per outgoing message; the optional normalisation and offset
//!   hooks add their subtractions on top.
//! * decision: one log/exp operation per frame.

use crate::model::{ChannelGain, Codebook, ReceivedSignal};

use super::{argmax, DetectError, OperationCount, SymbolDecision};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMpaOptions {
    pub iterations: usize,
    /// Subtract the per-message maximum from every user-to-resource message.
    pub normalize: bool,
    /// Constant added to every user-to-resource message. Only useful for
    /// checking that decisions are shift invariant.
    pub offset: f64,
}

impl LogMpaOptions {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            normalize: false,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
struct ResourceNode {
    users: Vec<usize>,
    /// `combos × 2` clean superposition (re, im) of the colliding users.
    points: Vec<f64>,
    /// `slot * M + symbol` for every (combination, slot), combination-major.
    buckets: Vec<usize>,
}

impl ResourceNode {
    fn degree(&self) -> usize {
        self.users.len()
    }

    fn combos(&self) -> usize {
        self.points.len() / 2
    }
}

/// Reusable Log-MPA detector for one codebook and gain vector.
#[derive(Debug, Clone)]
pub struct LogMpaDetector {
    users: usize,
    codebook_size: usize,
    nodes: Vec<ResourceNode>,
    /// For each user, the (resource, slot) pairs it is connected to.
    user_edges: Vec<Vec<(usize, usize)>>,
    options: LogMpaOptions,
}

impl LogMpaDetector {
    pub fn new(codebook: &Codebook, gains: &ChannelGain, options: LogMpaOptions) -> Result<Self, DetectError> {
        if options.iterations == 0 {
            return Err(DetectError::Parameter("Log-MPA needs at least one iteration".into()));
        }
        if !options.offset.is_finite() {
            return Err(DetectError::Parameter("message offset must be finite".into()));
        }
        let k_total = codebook.resources();
        if gains.len() != 2 * k_total {
            return Err(DetectError::Width {
                got: gains.len(),
                expected: 2 * k_total,
            });
        }
        let m = codebook.codebook_size();
        let graph = codebook.factor_graph();
        let mut user_edges = vec![Vec::new(); codebook.users()];
        let mut nodes = Vec::with_capacity(k_total);
        for k in 0..k_total {
            let users = graph.users_on(k);
            let d = users.len();
            let combos = m.checked_pow(d as u32).filter(|&c| c <= 1 << 24).ok_or_else(|| {
                DetectError::Parameter(format!("resource {k} with {d} users is too dense for Log-MPA"))
            })?;
            let mut points = Vec::with_capacity(2 * combos);
            let mut combo_symbols = Vec::with_capacity(combos * d);
            for c in 0..combos {
                let (mut re, mut im) = (0.0, 0.0);
                let mut rest = c;
                let mut syms = vec![0usize; d];
                for slot in (0..d).rev() {
                    syms[slot] = rest % m;
                    rest /= m;
                }
                for (slot, &j) in users.iter().enumerate() {
                    let v = codebook.user(j).codeword(syms[slot])[k];
                    re += gains.get(2 * k) * v.re;
                    im += gains.get(2 * k + 1) * v.im;
                }
                points.push(re);
                points.push(im);
                combo_symbols.extend_from_slice(&syms);
            }
            for (slot, &j) in users.iter().enumerate() {
                user_edges[j].push((k, slot));
            }
            let buckets = combo_symbols.iter().enumerate().map(|(i, &x)| (i % d) * m + x).collect();
            nodes.push(ResourceNode {
                users,
                points,
                buckets,
            });
        }
        Ok(Self {
            users: codebook.users(),
            codebook_size: m,
            nodes,
            user_edges,
            options,
        })
    }

    pub fn options(&self) -> LogMpaOptions {
        self.options
    }

    /// Runs the configured number of iterations on one frame.
    pub fn detect(&self, received: &[f64], noise_var: f64) -> Result<(SymbolDecision, OperationCount), DetectError> {
        if received.len() != 2 * self.nodes.len() {
            return Err(DetectError::Width {
                got: received.len(),
                expected: 2 * self.nodes.len(),
            });
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(DetectError::InvalidNoise(noise_var));
        }
        let m = self.codebook_size;
        let mut ops = OperationCount::default();
        let scale = -0.5 / noise_var;

        // Gaussian metric of every joint symbol, per resource.
        let metrics: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(k, node)| {
                let (yr, yi) = (received[2 * k], received[2 * k + 1]);
                let d = node.degree() as u64;
                let g = (m as u64).pow((node.degree() - 1) as u32);
                let edge_hyps = d * m as u64;
                ops.multiplications += edge_hyps * (4 * d * g + 5);
                ops.additions += edge_hyps * ((4 * d - 2) * g + 5);
                node.points
                    .chunks_exact(2)
                    .map(|p| {
                        let (dr, di) = (yr - p[0], yi - p[1]);
                        scale * (dr * dr + di * di)
                    })
                    .collect()
            })
            .collect();

        // Messages indexed [resource][slot * M + symbol].
        let mut to_user: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.degree() * m]).collect();
        let mut to_resource: Vec<Vec<f64>> = to_user.clone();
        let mut totals = vec![vec![0.0; m]; self.users];
        let mut terms = Vec::new();
        let mut peaks = Vec::new();

        for iteration in 0..self.options.iterations {
            for (k, node) in self.nodes.iter().enumerate() {
                let d = node.degree();
                let combos = node.combos();
                let g = (combos / m) as u64;
                ops.additions += (d as u64) * (m as u64) * (d as u64 - 1) * g + d as u64 * g;
                ops.log_exp += (d as u64) * (m as u64) * (g + 1);

                let incoming = &to_resource[k];
                terms.clear();
                terms.resize(combos * d, 0.0);
                peaks.clear();
                peaks.resize(d * m, f64::NEG_INFINITY);
                let metric = &metrics[k];
                for (c, (bk, t_out)) in node.buckets.chunks_exact(d).zip(terms.chunks_exact_mut(d)).enumerate() {
                    let total: f64 = metric[c] + bk.iter().map(|&b| incoming[b]).sum::<f64>();
                    for (&b, t) in bk.iter().zip(t_out.iter_mut()) {
                        *t = total - incoming[b];
                        if *t > peaks[b] {
                            peaks[b] = *t;
                        }
                    }
                }
                let out = &mut to_user[k];
                out.iter_mut().for_each(|v| *v = 0.0);
                for (&b, &t) in node.buckets.iter().zip(terms.iter()) {
                    out[b] += (t - peaks[b]).exp();
                }
                for (v, &peak) in out.iter_mut().zip(peaks.iter()) {
                    *v = peak + v.ln();
                }
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(DetectError::NonFiniteMessage { resource: k, iteration });
                }
            }

            for (j, edges) in self.user_edges.iter().enumerate() {
                let n_j = edges.len() as u64;
                let total = &mut totals[j];
                total.iter_mut().for_each(|v| *v = 0.0);
                for &(k, slot) in edges {
                    for (t, &u) in total.iter_mut().zip(&to_user[k][slot * m..(slot + 1) * m]) {
                        *t += u;
                    }
                }
                ops.additions += (n_j.saturating_sub(1) + n_j) * m as u64;
                for &(k, slot) in edges {
                    let msg = &mut to_resource[k][slot * m..(slot + 1) * m];
                    for ((v, &t), &u) in msg.iter_mut().zip(total.iter()).zip(&to_user[k][slot * m..(slot + 1) * m]) {
                        *v = t - u + self.options.offset;
                    }
                    if self.options.offset != 0.0 {
                        ops.additions += m as u64;
                    }
                    if self.options.normalize {
                        let peak = msg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        msg.iter_mut().for_each(|v| *v -= peak);
                        ops.additions += m as u64;
                    }
                }
            }
        }

        ops.log_exp += 1;
        let symbols = totals.iter().map(|t| argmax(t)).collect();
        let marginals = totals
            .into_iter()
            .map(|t| {
                let peak = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                t.into_iter().map(|v| v - peak).collect()
            })
            .collect();
        Ok((
            SymbolDecision {
                symbols,
                log_marginals: Some(marginals),
            },
            ops,
        ))
    }
}

/// One-shot Log-MPA detection with `iterations` rounds.
pub fn logmpa_detect(
    received: &ReceivedSignal,
    codebook: &Codebook,
    gains: &ChannelGain,
    noise_var: f64,
    iterations: usize,
) -> Result<(SymbolDecision, OperationCount), DetectError> {
    LogMpaDetector::new(codebook, gains, LogMpaOptions::new(iterations))?.detect(&received.samples, noise_var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{count_logmpa_ops, MapDetector, DEFAULT_MAP_GUARD};
    use crate::model::{add_awgn, ebn0_db_to_linear, ensemble_power, SystemConfig};
    use crate::rng::seeded;
    use num_complex::Complex64;
    use rand::Rng;

    fn noisy_frames(cb: &Codebook, gains: &ChannelGain, ebn0_db: f64, n: usize, seed: u64) -> Vec<(Vec<usize>, ReceivedSignal)> {
        let cfg = cb.system_config().unwrap();
        let power = ensemble_power(cb, gains);
        let table = cb.signal_table(gains);
        let mut rng = seeded(seed);
        let mut y = vec![0.0; table.width()];
        (0..n)
            .map(|_| {
                let s: Vec<usize> = (0..cb.users()).map(|_| rng.random_range(0..cb.codebook_size())).collect();
                table.superpose_into(&s, &mut y);
                let rx = add_awgn(&y, ebn0_db_to_linear(ebn0_db), &cfg, power, &mut rng).unwrap();
                (s, rx)
            })
            .collect()
    }

    #[test]
    fn instrumented_counts_match_closed_forms() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let (_, rx) = noisy_frames(&cb, &gains, 6.0, 1, 1).pop().unwrap();
        for it in [1, 3, 5, 7] {
            let det = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(it)).unwrap();
            let (_, ops) = det.detect(&rx.samples, rx.noise_var).unwrap();
            assert_eq!(ops, count_logmpa_ops(&SystemConfig::canonical(), it).unwrap(), "I_t = {it}");
        }
    }

    #[test]
    fn disjoint_users_match_map() {
        let z = Complex64::new(0.0, 0.0);
        let cb = Codebook::new(
            3,
            vec![
                (vec![0], (0..4).map(|s| vec![Complex64::from_polar(1.0, 0.4 + s as f64 * std::f64::consts::FRAC_PI_2), z, z]).collect()),
                (vec![1], (0..4).map(|s| vec![z, Complex64::new([-1.5, -0.5, 0.5, 1.5][s], 0.1), z]).collect()),
                (vec![2], (0..4).map(|s| vec![z, z, Complex64::new(0.0, [-0.9, -0.3, 0.3, 0.9][s])]).collect()),
            ],
        )
        .unwrap();
        let gains = ChannelGain::ones(3);
        let map = MapDetector::new(&cb, &gains, DEFAULT_MAP_GUARD).unwrap();
        for it in [1, 2, 4] {
            let det = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(it)).unwrap();
            for (_, rx) in noisy_frames(&cb, &gains, 2.0, 300, 5) {
                let (dec, _) = det.detect(&rx.samples, rx.noise_var).unwrap();
                assert_eq!(dec.symbols, map.detect_symbols(&rx.samples).unwrap());
            }
        }
    }

    #[test]
    fn high_snr_agrees_with_map() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let map = MapDetector::new(&cb, &gains, DEFAULT_MAP_GUARD).unwrap();
        let det = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(5)).unwrap();
        let frames = noisy_frames(&cb, &gains, 12.0, 2000, 11);
        let agree = frames
            .iter()
            .filter(|(_, rx)| det.detect(&rx.samples, rx.noise_var).unwrap().0.symbols == map.detect_symbols(&rx.samples).unwrap())
            .count();
        assert!(agree as f64 >= 0.99 * frames.len() as f64, "{agree}/{}", frames.len());
    }

    #[test]
    fn normalization_and_offsets_do_not_change_decisions() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let base = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(4)).unwrap();
        let normed = LogMpaDetector::new(&cb, &gains, LogMpaOptions { normalize: true, ..LogMpaOptions::new(4) }).unwrap();
        let shifted = LogMpaDetector::new(&cb, &gains, LogMpaOptions { offset: 37.5, ..LogMpaOptions::new(4) }).unwrap();
        for (_, rx) in noisy_frames(&cb, &gains, 4.0, 300, 2) {
            let a = base.detect(&rx.samples, rx.noise_var).unwrap().0;
            let b = normed.detect(&rx.samples, rx.noise_var).unwrap().0;
            let c = shifted.detect(&rx.samples, rx.noise_var).unwrap().0;
            assert_eq!(a.symbols, b.symbols);
            assert_eq!(a.symbols, c.symbols);
            let (ma, mb) = (a.log_marginals.unwrap(), b.log_marginals.unwrap());
            for (x, y) in ma.iter().flatten().zip(mb.iter().flatten()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn marginals_are_max_normalized() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let (_, rx) = noisy_frames(&cb, &gains, 3.0, 1, 4).pop().unwrap();
        let (dec, _) = logmpa_detect(&rx, &cb, &gains, rx.noise_var, 3).unwrap();
        for (user, marg) in dec.log_marginals.unwrap().iter().enumerate() {
            assert!(marg.iter().all(|v| v.is_finite() && *v <= 0.0));
            assert_eq!(marg[dec.symbols[user]], 0.0);
        }
    }

    #[test]
    fn tree_graph_results_stable_after_convergence() {
        // Two resources, three users: users 0 and 1 collide on resource 0, user 2 bridges both.
        let z = Complex64::new(0.0, 0.0);
        let pts = [Complex64::new(0.8, 0.3), Complex64::new(-0.8, -0.3)];
        let cb = Codebook::new(
            2,
            vec![
                (vec![0], (0..2).map(|s| vec![pts[s], z]).collect()),
                (vec![0, 1], (0..2).map(|s| vec![pts[s] * Complex64::new(0.0, 1.0), pts[s]]).collect()),
                (vec![1], (0..2).map(|s| vec![z, pts[s] * Complex64::new(0.3, 0.7)]).collect()),
            ],
        )
        .unwrap();
        let gains = ChannelGain::ones(2);
        let reference = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(4)).unwrap();
        for it in [5, 8, 12] {
            let det = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(it)).unwrap();
            for (_, rx) in noisy_frames(&cb, &gains, 1.0, 200, 8) {
                let a = reference.detect(&rx.samples, rx.noise_var).unwrap().0;
                let b = det.detect(&rx.samples, rx.noise_var).unwrap().0;
                assert_eq!(a.symbols, b.symbols);
                for (x, y) in a.log_marginals.unwrap().iter().flatten().zip(b.log_marginals.unwrap().iter().flatten()) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tree_graph_marginals_are_exact() {
        // On a cycle-free graph converged messages give the exact posterior marginals.
        let z = Complex64::new(0.0, 0.0);
        let pts = [Complex64::new(0.8, 0.3), Complex64::new(-0.5, 0.6), Complex64::new(0.1, -0.9), Complex64::new(-0.4, -0.2)];
        let cb = Codebook::new(
            2,
            vec![
                (vec![0], (0..4).map(|s| vec![pts[s], z]).collect()),
                (vec![0, 1], (0..4).map(|s| vec![pts[s] * Complex64::new(0.0, 1.0), pts[(s + 1) % 4]]).collect()),
                (vec![1], (0..4).map(|s| vec![z, pts[s] * Complex64::new(0.3, 0.7)]).collect()),
            ],
        )
        .unwrap();
        let gains = ChannelGain::ones(2);
        let table = cb.signal_table(&gains);
        let det = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(6)).unwrap();
        let mut point = vec![0.0; 4];
        for (_, rx) in noisy_frames(&cb, &gains, 3.0, 50, 21) {
            let mut exact = vec![vec![0.0f64; 4]; 3];
            for h in 0..64 {
                let syms = [h >> 4, (h >> 2) & 3, h & 3];
                table.superpose_into(&syms, &mut point);
                let d2: f64 = point.iter().zip(&rx.samples).map(|(a, b)| (a - b) * (a - b)).sum();
                let w = (-d2 / (2.0 * rx.noise_var)).exp();
                for (j, &s) in syms.iter().enumerate() {
                    exact[j][s] += w;
                }
            }
            let got = det.detect(&rx.samples, rx.noise_var).unwrap().0.log_marginals.unwrap();
            for (e, g) in exact.iter().zip(&got) {
                let peak = e.iter().cloned().fold(0.0, f64::max);
                for (x, y) in e.iter().zip(g) {
                    assert!(((x / peak).ln() - y).abs() < 1e-9, "{e:?} vs {g:?}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        assert!(LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(0)).is_err());
        let det = LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(1)).unwrap();
        assert!(matches!(det.detect(&[0.0; 8], 0.0), Err(DetectError::InvalidNoise(_))));
        assert!(matches!(det.detect(&[0.0; 6], 1.0), Err(DetectError::Width { .. })));
    }
}
