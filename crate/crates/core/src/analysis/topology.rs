//! Exhaustive search for sub-cell wirings whose read-mode response equals
//! the closed-form readout.
//!
//! A candidate is a multigraph of `resistor_count` unit resistors and one
//! memristor over the terminals read (driven at `V_r`), ground and output,
//! plus internal nodes. Internal nodes need degree two or more, read and
//! output must be connected, and candidates that differ only by a relabeling
//! of internal nodes are evaluated once. In the resulting [`SubcellWiring`]
//! ground is expressed as [`Port::Write`], the port held at 0 V during reads.

use std::collections::HashSet;

use itertools::Itertools;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cell::{Port, SubcellWiring};
use crate::circuit::{dc, Netlist, NodeId, Waveform, GROUND};
use crate::exec::Exec;
use crate::readout;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub resistor_count: usize,
    pub max_internal: usize,
    /// Random `(M, R, R0)` draws per candidate.
    pub samples: usize,
    pub seed: u64,
    /// Largest relative deviation that counts as an exact match.
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            resistor_count: 4,
            max_internal: 6,
            samples: 200,
            seed: 1,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub wiring: SubcellWiring,
    /// Worst relative deviation from the closed form over the samples;
    /// infinite when the network is singular.
    pub max_rel_dev: f64,
    /// For exact matches: whether the `M → 0` and `M → ∞` limits also agree.
    pub limits_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyReport {
    pub options: SearchOptions,
    /// Every distinct candidate, best first.
    pub candidates: Vec<Candidate>,
    pub exact: Vec<Candidate>,
    /// Deviation buckets `(label, count)`.
    pub distribution: Vec<(&'static str, usize)>,
}

impl TopologyReport {
    pub fn best(&self) -> Option<&Candidate> {
        self.candidates.first()
    }
}

/// Random read-mode operating points `(M, R, R0)`, log-uniform.
pub fn sample_points(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Uniform::new(0.0, 7.0);
    let r = Uniform::new(1.0, 3.0);
    let r0 = Uniform::new(0.5, 3.0);
    (0..count)
        .map(|_| {
            let mv = 10f64.powf(m.sample(&mut rng));
            let rv = 10f64.powf(r.sample(&mut rng));
            let r0v = 10f64.powf(r0.sample(&mut rng));
            (mv, rv, r0v)
        })
        .collect()
}

/// Output of a single sub-cell in read mode: `V_r` on [`Port::Read`],
/// every other source port grounded, `r_load` from output to ground.
fn read_output(wiring: &SubcellWiring, m: f64, r: f64, r_load: f64, v_read: f64) -> Option<f64> {
    let mut net = Netlist::new();
    let out = net.add_node("out");
    let vr = net.add_node("vr");
    let w = net.add_waveform(Waveform::constant(v_read));
    net.add_source("V_r", vr, GROUND, w);
    net.add_resistor("R0", out, GROUND, r_load);
    let mut internal: Vec<NodeId> = Vec::new();
    let mut node = |net: &mut Netlist, p: Port| -> NodeId {
        match p {
            Port::Read => vr,
            Port::Out => out,
            Port::Write | Port::Reset => GROUND,
            Port::Internal(k) => {
                while internal.len() <= k as usize {
                    let id = net.add_node(format!("s{}", internal.len()));
                    internal.push(id);
                }
                internal[k as usize]
            }
        }
    };
    for (j, &(a, b)) in wiring.resistors.iter().enumerate() {
        let (na, nb) = (node(&mut net, a), node(&mut net, b));
        net.add_resistor(format!("R{j}"), na, nb, r);
    }
    let (p, n) = wiring.memristor;
    let (np, nn) = (node(&mut net, p), node(&mut net, n));
    net.add_memristor("M", np, nn, 0);
    net.validate().ok()?;
    let v = dc(&net, &[m], 0.0).ok()?.voltage(out);
    v.is_finite().then_some(v)
}

/// Worst relative deviation of the wiring's read output from the one-sub-cell
/// closed form over the given `(M, R, R0)` points.
pub fn evaluate_wiring(wiring: &SubcellWiring, points: &[(f64, f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for &(m, r, r0) in points {
        let Some(v) = read_output(wiring, m, r, r0, 0.1) else {
            return f64::INFINITY;
        };
        let reference =
            readout::generalized_vout(&[m], &[r], r0, 0.1).expect("sampled inputs are positive");
        let dev = (v - reference).abs() / reference;
        if !dev.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(dev);
    }
    worst
}

fn limits_agree(wiring: &SubcellWiring) -> bool {
    let (r, r0) = (50.0, 20.0);
    [(1e-9 * r, 0.0), (1e12 * r, f64::INFINITY)]
        .iter()
        .all(|&(m_sim, m_lim)| {
            let reference = readout::generalized_vout(&[m_lim], &[r], r0, 0.1).unwrap();
            read_output(wiring, m_sim, r, r0, 0.1)
                .is_some_and(|v| ((v - reference) / reference).abs() < 1e-6)
        })
}

const READ: usize = 0;
const GND: usize = 1;
const OUT: usize = 2;

fn to_port(node: usize) -> Port {
    match node {
        READ => Port::Read,
        GND => Port::Write,
        OUT => Port::Out,
        k => Port::Internal((k - 3) as u8),
    }
}

type Key = Vec<(usize, usize, bool)>;

fn admissible(edges: &[(usize, usize, bool)], n: usize) -> bool {
    let mut deg = vec![0usize; n];
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b, _) in edges {
        deg[a] += 1;
        deg[b] += 1;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    if deg[READ] == 0 || deg[OUT] == 0 || deg[3..].iter().any(|&d| d < 2) {
        return false;
    }
    let root = find(&mut parent, READ);
    (0..n).all(|v| deg[v] == 0 || find(&mut parent, v) == root)
}

fn canonical(edges: &[(usize, usize, bool)], n: usize) -> Key {
    (3..n)
        .permutations(n - 3)
        .map(|perm| {
            let map = |v: usize| if v < 3 { v } else { perm[v - 3] };
            let mut k: Key = edges
                .iter()
                .map(|&(a, b, mem)| {
                    let (x, y) = (map(a), map(b));
                    (x.min(y), x.max(y), mem)
                })
                .collect();
            k.sort_unstable();
            k
        })
        .min()
        .expect("at least one permutation")
}

fn enumerate(resistor_count: usize, max_internal: usize) -> Vec<Key> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    // Read and output each need an edge and internal nodes two, so at most
    // `resistor_count` internal nodes can be used.
    for k in 0..=max_internal.min(resistor_count) {
        let n = 3 + k;
        let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
        for rs in pairs.iter().combinations_with_replacement(resistor_count) {
            for &(ma, mb) in &pairs {
                let mut edges: Vec<(usize, usize, bool)> =
                    rs.iter().map(|&&(a, b)| (a, b, false)).collect();
                edges.push((ma, mb, true));
                if !admissible(&edges, n) {
                    continue;
                }
                let key = canonical(&edges, n);
                if seen.insert(key.clone()) {
                    out.push(key);
                }
            }
        }
    }
    out
}

fn wiring_of(key: &Key) -> SubcellWiring {
    let mut resistors = Vec::new();
    let mut memristor = (Port::Read, Port::Read);
    for &(a, b, mem) in key {
        if mem {
            memristor = (to_port(a), to_port(b));
        } else {
            resistors.push((to_port(a), to_port(b)));
        }
    }
    SubcellWiring {
        resistors,
        memristor,
    }
}

const BUCKETS: [(&str, f64); 6] = [
    ("<=1e-9", 1e-9),
    ("(1e-9,1e-6]", 1e-6),
    ("(1e-6,1e-3]", 1e-3),
    ("(1e-3,1e-1]", 1e-1),
    ("(1e-1,1]", 1.0),
    (">1", f64::MAX),
];

pub fn topology_search(opts: SearchOptions, exec: Exec) -> TopologyReport {
    let keys = enumerate(opts.resistor_count, opts.max_internal);
    let points = sample_points(opts.samples, opts.seed);
    let mut candidates: Vec<Candidate> = exec.map(&keys, |key| {
        let wiring = wiring_of(key);
        let max_rel_dev = evaluate_wiring(&wiring, &points);
        let limits_ok = (max_rel_dev <= opts.tolerance).then(|| limits_agree(&wiring));
        Candidate {
            wiring,
            max_rel_dev,
            limits_ok,
        }
    });
    // Stable sort keeps enumeration order among equal deviations.
    candidates.sort_by(|a, b| a.max_rel_dev.total_cmp(&b.max_rel_dev));
    let mut distribution: Vec<(&'static str, usize)> =
        BUCKETS.iter().map(|&(label, _)| (label, 0)).collect();
    let mut singular = 0;
    for c in &candidates {
        match BUCKETS.iter().position(|&(_, hi)| c.max_rel_dev <= hi) {
            Some(i) => distribution[i].1 += 1,
            None => singular += 1,
        }
    }
    distribution.push(("singular", singular));
    let exact = candidates
        .iter()
        .filter(|c| c.max_rel_dev <= opts.tolerance)
        .cloned()
        .collect();
    TopologyReport {
        options: opts,
        candidates,
        exact,
        distribution,
    }
}
