//! Discrete-time stochastic spiking network dynamics.
//!
//! Each step is a synchronous two-phase update. First every neuron `i`, in
//! index order, draws `U` and spikes iff `U <= phi(V_t(i))`. Then
//! `V_{t+1}(i) = (1 - X_{t+1}(i)) * (V_t(i) + w * #{presynaptic spikes})`.
//! A step consumes exactly `n` uniforms, so a run of `T` steps consumes `n T`.

use crate::error::{Error, Result};
use crate::graph::{generate_er, remove_reciprocal, DirectedGraph, GraphParams, PostAdjacency};
use crate::rng::Xoshiro256PlusPlus;
use crate::stats::SpikeSummary;

/// Spiking probability `max(0, min(v, 1))`.
pub fn phi(v: f64) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::NotANumber("phi"));
    }
    Ok(clamp_unit(v))
}

#[inline(always)]
fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub v: Vec<f64>,
    pub t: u64,
}

impl NetworkState {
    pub fn uniform(n: usize, v0: f64) -> Self {
        Self { v: vec![v0; n], t: 0 }
    }
}

/// Advances `state` by one step, summing over presynaptic lists directly.
/// Returns the spike indicators `X_{t+1}`.
///
/// This is the literal form of the update; [`Simulator`] computes the same
/// trajectory from postsynaptic fan-out and is what the campaigns use.
pub fn step(state: &mut NetworkState, g: &DirectedGraph, rng: &mut Xoshiro256PlusPlus) -> Vec<bool> {
    let n = g.n();
    assert_eq!(state.v.len(), n, "state size does not match graph");
    let spikes: Vec<bool> = state.v.iter().map(|&v| rng.next_f64() <= clamp_unit(v)).collect();
    for i in 0..n {
        if spikes[i] {
            state.v[i] = 0.0;
        } else {
            for &j in g.presyn(i) {
                if spikes[j as usize] {
                    state.v[i] += g.weight();
                }
            }
        }
    }
    state.t += 1;
    spikes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordSet {
    All,
    Neurons(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of time steps `T`.
    pub horizon: u64,
    /// Initial potential of every neuron.
    pub v0: f64,
    pub record: RecordSet,
}

impl SimConfig {
    pub fn new(horizon: u64, v0: f64, record: RecordSet) -> Result<Self> {
        let cfg = Self { horizon, v0, record };
        cfg.validate(None)?;
        Ok(cfg)
    }

    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if self.horizon == 0 || self.horizon > u64::from(u32::MAX) {
            return Err(Error::InvalidParameter(format!("horizon must be in [1, 2^32), got {}", self.horizon)));
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::InvalidParameter(format!("v0 must be a non-negative real, got {}", self.v0)));
        }
        if let RecordSet::Neurons(list) = &self.record {
            if list.is_empty() {
                return Err(Error::InvalidParameter("record set must not be empty".into()));
            }
            if let Some(n) = n {
                if let Some(&bad) = list.iter().find(|&&i| i >= n) {
                    return Err(Error::IndexOutOfRange { index: bad, n });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrain {
    pub neuron: usize,
    /// Strictly increasing spike times in `[1, T]`.
    pub times: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrainRecord {
    pub horizon: u64,
    pub trains: Vec<SpikeTrain>,
}

impl SpikeTrainRecord {
    /// `neuron_id: t1 t2 ...`, one line per recorded neuron.
    pub fn write_dump<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for train in &self.trains {
            write!(out, "{}:", train.neuron)?;
            for t in &train.times {
                write!(out, " {t}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub record: SpikeTrainRecord,
    /// Streaming summary for every neuron in the network.
    pub summaries: Vec<SpikeSummary>,
}

/// Fast stepper: propagates spikes along postsynaptic lists, so the cost of a
/// step is `n` draws plus the fan-out of the neurons that actually spiked.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    graph: &'g DirectedGraph,
    post: PostAdjacency,
    state: NetworkState,
    spikers: Vec<u32>,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g DirectedGraph, v0: f64) -> Self {
        Self::from_state(graph, NetworkState::uniform(graph.n(), v0))
    }

    pub fn from_state(graph: &'g DirectedGraph, state: NetworkState) -> Self {
        assert_eq!(state.v.len(), graph.n(), "state size does not match graph");
        Self {
            graph,
            post: graph.postsynaptic(),
            state,
            spikers: Vec::new(),
        }
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    /// Advances one step and returns the neurons that spiked at the new time,
    /// in increasing order.
    #[inline]
    pub fn step(&mut self, rng: &mut Xoshiro256PlusPlus) -> &[u32] {
        self.spikers.clear();
        for (i, &v) in self.state.v.iter().enumerate() {
            if rng.next_f64() <= clamp_unit(v) {
                self.spikers.push(i as u32);
            }
        }
        // spikers are visited in increasing order, so each potential receives
        // its inputs in the same order as a sum over its presynaptic list
        let w = self.graph.weight();
        for &j in &self.spikers {
            for &i in self.post.post(j as usize) {
                self.state.v[i as usize] += w;
            }
        }
        for &j in &self.spikers {
            self.state.v[j as usize] = 0.0;
        }
        self.state.t += 1;
        &self.spikers
    }
}

/// Runs `T` steps from `V_0 = v0`, recording spike times of the configured
/// neurons and streaming summaries of all neurons.
pub fn simulate(g: &DirectedGraph, cfg: &SimConfig, rng: &mut Xoshiro256PlusPlus) -> Result<SimOutput> {
    cfg.validate(Some(g.n()))?;
    let n = g.n();
    let recorded: Vec<usize> = match &cfg.record {
        RecordSet::All => (0..n).collect(),
        RecordSet::Neurons(list) => {
            let mut list = list.clone();
            list.sort_unstable();
            list.dedup();
            list
        }
    };
    // slot in `trains` for each neuron, or usize::MAX when not recorded
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in recorded.iter().enumerate() {
        slot[i] = k;
    }
    let mut trains: Vec<SpikeTrain> = recorded.iter().map(|&i| SpikeTrain { neuron: i, times: Vec::new() }).collect();
    let mut summaries = vec![SpikeSummary::default(); n];
    let mut sim = Simulator::new(g, cfg.v0);
    for t in 1..=cfg.horizon {
        for &i in sim.step(rng) {
            let i = i as usize;
            summaries[i].record(t);
            if slot[i] != usize::MAX {
                trains[slot[i]].times.push(t as u32);
            }
        }
    }
    Ok(SimOutput { record: SpikeTrainRecord { horizon: cfg.horizon, trains }, summaries })
}

/// Runs `T` steps keeping only the per-neuron streaming summaries.
pub fn simulate_summaries(
    g: &DirectedGraph,
    v0: f64,
    horizon: u64,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<Vec<SpikeSummary>> {
    SimConfig { horizon, v0, record: RecordSet::All }.validate(Some(g.n()))?;
    let mut summaries = vec![SpikeSummary::default(); g.n()];
    let mut sim = Simulator::new(g, v0);
    for t in 1..=horizon {
        for &i in sim.step(rng) {
            summaries[i as usize].record(t);
        }
    }
    Ok(summaries)
}

/// Generates a graph, optionally removes reciprocal pairs, and simulates it,
/// all on the one stream `rng`.
pub fn simulate_network(
    params: &GraphParams,
    reciprocal_removed: bool,
    v0: f64,
    horizon: u64,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<(DirectedGraph, Vec<SpikeSummary>)> {
    let mut g = generate_er(params, rng)?;
    if reciprocal_removed {
        g = remove_reciprocal(&g, rng);
    }
    let summaries = simulate_summaries(&g, v0, horizon, rng)?;
    Ok((g, summaries))
}

/// Uniform sample of `s` distinct indices from `0..n`, returned sorted
/// (Floyd's algorithm, `s` draws).
pub fn sample_neurons(n: usize, s: usize, rng: &mut Xoshiro256PlusPlus) -> Result<Vec<usize>> {
    if s == 0 || s > n {
        return Err(Error::InvalidParameter(format!("sample size {s} must lie in [1, {n}]")));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(s);
    for j in (n - s)..n {
        let t = rng.next_below(j as u64 + 1) as usize;
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.push(pick);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    #[test]
    fn phi_clamps() {
        assert_eq!(phi(-0.5).unwrap(), 0.0);
        assert_eq!(phi(0.03).unwrap(), 0.03);
        assert_eq!(phi(1.7).unwrap(), 1.0);
        assert!(phi(f64::NAN).is_err());
    }

    #[test]
    fn saturated_isolated_neuron_spikes_and_resets() {
        let g = DirectedGraph::empty(1, 0.01).unwrap();
        let mut state = NetworkState { v: vec![1.5], t: 0 };
        let x = step(&mut state, &g, &mut rng(1));
        assert_eq!(x, vec![true]);
        assert_eq!(state.v[0], 0.0);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn silent_isolated_neuron_stays_silent() {
        let g = DirectedGraph::empty(1, 0.01).unwrap();
        let mut state = NetworkState::uniform(1, 0.0);
        let mut r = rng(2);
        for _ in 0..10_000 {
            assert_eq!(step(&mut state, &g, &mut r), vec![false]);
            assert_eq!(state.v[0], 0.0);
        }
    }

    #[test]
    fn reset_dominates_input() {
        // both neurons saturated: both spike, both reset despite input
        let g = DirectedGraph::complete(2, 0.01).unwrap();
        let mut state = NetworkState { v: vec![1.0, 2.0], t: 0 };
        let x = step(&mut state, &g, &mut rng(3));
        assert_eq!(x, vec![true, true]);
        assert_eq!(state.v, vec![0.0, 0.0]);
    }

    #[test]
    fn input_accumulates_when_silent() {
        // neuron 1 at V=0 cannot spike; neuron 0 saturated spikes into it
        let g = DirectedGraph::from_presyn(vec![vec![], vec![0]], 0.25).unwrap();
        let mut state = NetworkState { v: vec![1.0, 0.0], t: 0 };
        let x = step(&mut state, &g, &mut rng(4));
        assert_eq!(x, vec![true, false]);
        assert_eq!(state.v, vec![0.0, 0.25]);
    }

    #[test]
    fn step_consumes_n_uniforms() {
        let g = DirectedGraph::complete(5, 0.01).unwrap();
        let mut a = rng(5);
        let mut b = a.clone();
        step(&mut NetworkState::uniform(5, 0.3), &g, &mut a);
        for _ in 0..5 {
            b.next_u64();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn fast_and_literal_steppers_agree() {
        let params = GraphParams::new(60, 0.1, 0.05).unwrap();
        let g = generate_er(&params, &mut rng(6)).unwrap();
        let mut literal = NetworkState::uniform(60, 0.01);
        let mut fast = Simulator::new(&g, 0.01);
        let mut ra = rng(7);
        let mut rb = rng(7);
        for _ in 0..2000 {
            let x = step(&mut literal, &g, &mut ra);
            let spikers: Vec<usize> = fast.step(&mut rb).iter().map(|&i| i as usize).collect();
            let expected: Vec<usize> = (0..60).filter(|&i| x[i]).collect();
            assert_eq!(spikers, expected);
            assert_eq!(fast.state(), &literal);
        }
    }

    #[test]
    fn isolated_neuron_spikes_at_most_once() {
        let g = DirectedGraph::empty(20, 0.01).unwrap();
        let cfg = SimConfig::new(10_000, 0.01, RecordSet::All).unwrap();
        let out = simulate(&g, &cfg, &mut rng(8)).unwrap();
        assert!(out.record.trains.iter().all(|t| t.times.len() <= 1));
    }

    #[test]
    fn zero_start_without_input_is_silent() {
        let g = DirectedGraph::complete(10, 0.01).unwrap();
        let cfg = SimConfig::new(5000, 0.0, RecordSet::All).unwrap();
        let out = simulate(&g, &cfg, &mut rng(9)).unwrap();
        assert!(out.summaries.iter().all(|s| s.count == 0));
    }

    #[test]
    fn records_match_summaries_and_consume_nt_draws() {
        let params = GraphParams::new(50, 0.1, 0.01).unwrap();
        let g = generate_er(&params, &mut rng(10)).unwrap();
        let cfg = SimConfig::new(3000, 0.01, RecordSet::Neurons(vec![4, 1, 30])).unwrap();
        let mut r = rng(11);
        let out = simulate(&g, &cfg, &mut r).unwrap();
        let neurons: Vec<usize> = out.record.trains.iter().map(|t| t.neuron).collect();
        assert_eq!(neurons, vec![1, 4, 30]);
        for train in &out.record.trains {
            assert!(train.times.windows(2).all(|w| w[0] < w[1]));
            assert!(train.times.iter().all(|&t| (1..=3000).contains(&t)));
            assert_eq!(SpikeSummary::from_times(&train.times), out.summaries[train.neuron]);
        }
        let mut fresh = rng(11);
        for _ in 0..50 * 3000 {
            fresh.next_u64();
        }
        assert_eq!(r, fresh);

        let mut r2 = rng(11);
        let only = simulate_summaries(&g, 0.01, 3000, &mut r2).unwrap();
        assert_eq!(only, out.summaries);
    }

    #[test]
    fn sim_config_validation() {
        assert!(SimConfig::new(0, 0.01, RecordSet::All).is_err());
        assert!(SimConfig::new(10, -1.0, RecordSet::All).is_err());
        assert!(SimConfig::new(10, 0.01, RecordSet::Neurons(vec![])).is_err());
        let g = DirectedGraph::empty(3, 0.01).unwrap();
        let cfg = SimConfig::new(10, 0.01, RecordSet::Neurons(vec![3])).unwrap();
        assert!(matches!(simulate(&g, &cfg, &mut rng(0)), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn spike_dump_format() {
        let rec = SpikeTrainRecord {
            horizon: 10,
            trains: vec![SpikeTrain { neuron: 3, times: vec![1, 5] }, SpikeTrain { neuron: 7, times: vec![] }],
        };
        let mut buf = Vec::new();
        rec.write_dump(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3: 1 5\n7:\n");
    }

    #[test]
    fn sample_neurons_edge_cases() {
        let mut r = rng(12);
        assert_eq!(sample_neurons(7, 7, &mut r).unwrap(), (0..7).collect::<Vec<_>>());
        assert_eq!(sample_neurons(1, 1, &mut r).unwrap(), vec![0]);
        assert!(sample_neurons(3, 4, &mut r).is_err());
        assert!(sample_neurons(3, 0, &mut r).is_err());
    }

    #[test]
    fn sample_neurons_marginals() {
        let mut r = rng(13);
        let draws = 100_000;
        let mut hits = [0usize; 10];
        for _ in 0..draws {
            let s = sample_neurons(10, 3, &mut r).unwrap();
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            for i in s {
                hits[i] += 1;
            }
        }
        let sigma = (draws as f64 * 0.3 * 0.7).sqrt();
        for h in hits {
            assert!((h as f64 - 0.3 * draws as f64).abs() < 4.0 * sigma, "{h}");
        }
    }
}
