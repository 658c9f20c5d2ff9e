//! Modified nodal analysis: one unknown per non-ground node plus one branch
//! current per voltage source, solved by dense LU with partial pivoting.

use super::netlist::{DeviceId, Element, Netlist, NodeId, GROUND};
use crate::error::{Error, Result};

/// A pivot smaller than this fraction of its row's largest entry is singular.
const PIVOT_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stamp {
    Conductance {
        a: NodeId,
        b: NodeId,
        g: f64,
    },
    Source {
        pos: NodeId,
        neg: NodeId,
        index: usize,
    },
}

/// Assembled `A x = b` for one memristance snapshot and time.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    dim: usize,
    node_unknowns: usize,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    labels: Vec<String>,
    stamps: Vec<Stamp>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Unknown name: a node name, or `I(<source>)` for a source current.
    pub fn label(&self, unknown: usize) -> &str {
        &self.labels[unknown]
    }
}

/// Voltage drop `v(a) - v(b)` and current flowing a → b through an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub voltage: f64,
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Indexed by node id; entry 0 is ground.
    pub node_voltages: Vec<f64>,
    /// Current through each source from `pos` to `neg`, in element order.
    pub source_currents: Vec<f64>,
    /// One entry per netlist element, in element order.
    pub branches: Vec<Branch>,
    /// `‖A x − b‖∞` of the solve.
    pub residual_inf: f64,
    pub rhs_inf: f64,
}

impl Solution {
    pub fn voltage(&self, node: NodeId) -> f64 {
        self.node_voltages[node]
    }

    /// Largest `|Σ i| / (Σ |i| + 1e-12)` over non-ground nodes, with currents
    /// taken from the branch map.
    pub fn kcl_ratio(&self, netlist: &Netlist) -> f64 {
        let n = netlist.node_count();
        let mut net = vec![0.0; n];
        let mut abs = vec![0.0; n];
        for (e, br) in netlist.elements().iter().zip(&self.branches) {
            let (a, b) = e.terminals();
            net[a] += br.current;
            net[b] -= br.current;
            abs[a] += br.current.abs();
            abs[b] += br.current.abs();
        }
        (1..n)
            .map(|k| net[k].abs() / (abs[k] + 1e-12))
            .fold(0.0, f64::max)
    }
}

/// Netlist compiled for repeated solves: the resistor and source stamps are
/// fixed, only memristor conductances and source values change.
#[derive(Debug, Clone)]
pub struct Mna<'a> {
    netlist: &'a Netlist,
    node_unknowns: usize,
    dim: usize,
    base: Vec<f64>,
    memristors: Vec<(usize, NodeId, NodeId, DeviceId)>,
    sources: Vec<(usize, usize)>,
    labels: Vec<String>,
}

impl<'a> Mna<'a> {
    pub fn new(netlist: &'a Netlist) -> Self {
        let node_unknowns = netlist.node_count() - 1;
        let dim = node_unknowns + netlist.source_count();
        let mut base = vec![0.0; dim * dim];
        let mut memristors = Vec::new();
        let mut sources = Vec::new();
        let mut labels: Vec<String> = (1..netlist.node_count())
            .map(|k| netlist.node_name(k).to_string())
            .collect();
        for (idx, e) in netlist.elements().iter().enumerate() {
            match *e {
                Element::Resistor { a, b, ohms, .. } => {
                    stamp_conductance(&mut base, dim, a, b, 1.0 / ohms)
                }
                Element::Memristor {
                    pos, neg, device, ..
                } => memristors.push((idx, pos, neg, device)),
                Element::VoltageSource {
                    pos,
                    neg,
                    waveform,
                    ref name,
                } => {
                    let row = node_unknowns + sources.len();
                    if pos != GROUND {
                        base[(pos - 1) * dim + row] += 1.0;
                        base[row * dim + pos - 1] += 1.0;
                    }
                    if neg != GROUND {
                        base[(neg - 1) * dim + row] -= 1.0;
                        base[row * dim + neg - 1] -= 1.0;
                    }
                    sources.push((idx, waveform));
                    labels.push(format!("I({name})"));
                }
            }
        }
        Self {
            netlist,
            node_unknowns,
            dim,
            base,
            memristors,
            sources,
            labels,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    fn memristance_of(&self, elem: usize, device: DeviceId, snapshot: &[f64]) -> Result<f64> {
        match snapshot.get(device) {
            Some(&m) if m > 0.0 && m.is_finite() => Ok(m),
            _ => Err(Error::Assembly {
                element: self.netlist.elements()[elem].name().to_string(),
            }),
        }
    }

    /// Fills `matrix` and `rhs` (resized as needed).
    fn fill(
        &self,
        snapshot: &[f64],
        t: f64,
        matrix: &mut Vec<f64>,
        rhs: &mut Vec<f64>,
    ) -> Result<()> {
        matrix.clear();
        matrix.extend_from_slice(&self.base);
        rhs.clear();
        rhs.resize(self.dim, 0.0);
        for &(elem, pos, neg, device) in &self.memristors {
            let m = self.memristance_of(elem, device, snapshot)?;
            stamp_conductance(matrix, self.dim, pos, neg, 1.0 / m);
        }
        for (k, &(_, waveform)) in self.sources.iter().enumerate() {
            rhs[self.node_unknowns + k] = self.netlist.waveform(waveform).value_at(t);
        }
        Ok(())
    }

    pub fn assemble(&self, snapshot: &[f64], t: f64) -> Result<LinearSystem> {
        let mut matrix = Vec::new();
        let mut rhs = Vec::new();
        self.fill(snapshot, t, &mut matrix, &mut rhs)?;
        let mut stamps = Vec::with_capacity(self.netlist.elements().len());
        let mut src = 0;
        for (idx, e) in self.netlist.elements().iter().enumerate() {
            stamps.push(match *e {
                Element::Resistor { a, b, ohms, .. } => Stamp::Conductance {
                    a,
                    b,
                    g: 1.0 / ohms,
                },
                Element::Memristor {
                    pos, neg, device, ..
                } => Stamp::Conductance {
                    a: pos,
                    b: neg,
                    g: 1.0 / self.memristance_of(idx, device, snapshot)?,
                },
                Element::VoltageSource { pos, neg, .. } => {
                    src += 1;
                    Stamp::Source {
                        pos,
                        neg,
                        index: src - 1,
                    }
                }
            });
        }
        Ok(LinearSystem {
            dim: self.dim,
            node_unknowns: self.node_unknowns,
            matrix,
            rhs,
            labels: self.labels.clone(),
            stamps,
        })
    }

    /// Solves for the raw unknown vector, reusing caller scratch space.
    pub(crate) fn solve_into(&self, snapshot: &[f64], t: f64, scratch: &mut Scratch) -> Result<()> {
        let (mut matrix, mut rhs) = (
            std::mem::take(&mut scratch.matrix),
            std::mem::take(&mut scratch.rhs),
        );
        self.fill(snapshot, t, &mut matrix, &mut rhs)?;
        let solved = solve_refined(&matrix, &rhs, self.dim, scratch);
        scratch.matrix = matrix;
        scratch.rhs = rhs;
        solved.map_err(|pivot| Error::Singular {
            pivot: self.labels[pivot].clone(),
            at: Some(t),
        })
    }

    /// Voltage across each memristor element (`v(pos) - v(neg)`), indexed by
    /// position in [`Mna::memristor_devices`].
    pub(crate) fn memristor_voltages(&self, x: &[f64], out: &mut [f64]) {
        for (slot, &(_, pos, neg, _)) in out.iter_mut().zip(&self.memristors) {
            *slot = node_v(x, pos) - node_v(x, neg);
        }
    }

    pub fn memristor_devices(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.memristors.iter().map(|m| m.3)
    }

    /// Expands a raw unknown vector into a full [`Solution`].
    pub(crate) fn solution_from(&self, x: &[f64], snapshot: &[f64], t: f64) -> Result<Solution> {
        let sys = self.assemble(snapshot, t)?;
        Ok(expand(&sys, x))
    }
}

#[derive(Debug, Default, Clone)]
pub(crate) struct Scratch {
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    pub x: Vec<f64>,
    lu: Vec<f64>,
    swaps: Vec<usize>,
    scale: Vec<f64>,
    r: Vec<f64>,
}

#[inline]
fn node_v(x: &[f64], node: NodeId) -> f64 {
    if node == GROUND {
        0.0
    } else {
        x[node - 1]
    }
}

fn stamp_conductance(m: &mut [f64], dim: usize, a: NodeId, b: NodeId, g: f64) {
    if a != GROUND {
        m[(a - 1) * dim + a - 1] += g;
    }
    if b != GROUND {
        m[(b - 1) * dim + b - 1] += g;
    }
    if a != GROUND && b != GROUND {
        m[(a - 1) * dim + b - 1] -= g;
        m[(b - 1) * dim + a - 1] -= g;
    }
}

/// LU factorization with partial pivoting in place. `swaps[k]` records the
/// row exchanged with row `k`. On failure returns the unknown (column) whose
/// pivot vanished.
fn lu_factor(
    a: &mut [f64],
    n: usize,
    swaps: &mut Vec<usize>,
    scale: &mut Vec<f64>,
) -> Result<(), usize> {
    scale.clear();
    scale.extend((0..n).map(|i| {
        a[i * n..(i + 1) * n]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }));
    swaps.clear();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            scale.swap(k, p);
        }
        swaps.push(p);
        if !(pmax > PIVOT_REL_TOL * scale[k]) || pmax == 0.0 {
            return Err(k);
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            a[i * n + k] = f;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    Ok(())
}

fn lu_substitute(lu: &[f64], n: usize, swaps: &[usize], b: &mut [f64]) {
    for (k, &p) in swaps.iter().enumerate() {
        b.swap(k, p);
    }
    for i in 1..n {
        let mut s = b[i];
        for j in 0..i {
            s -= lu[i * n + j] * b[j];
        }
        b[i] = s;
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= lu[k * n + j] * b[j];
        }
        b[k] = s / lu[k * n + k];
    }
}

/// Solves `a x = rhs` into `ws.x` with one step of iterative refinement,
/// which settles the last-bit disagreements that otherwise show up as
/// spurious current through dead-end branches.
fn solve_refined(a: &[f64], rhs: &[f64], n: usize, ws: &mut Scratch) -> Result<(), usize> {
    ws.lu.clear();
    ws.lu.extend_from_slice(a);
    lu_factor(&mut ws.lu, n, &mut ws.swaps, &mut ws.scale)?;
    ws.x.clear();
    ws.x.extend_from_slice(rhs);
    lu_substitute(&ws.lu, n, &ws.swaps, &mut ws.x);
    ws.r.clear();
    ws.r.extend((0..n).map(|i| {
        let row = &a[i * n..(i + 1) * n];
        rhs[i] - row.iter().zip(&ws.x).map(|(a, v)| a * v).sum::<f64>()
    }));
    lu_substitute(&ws.lu, n, &ws.swaps, &mut ws.r);
    for (x, d) in ws.x.iter_mut().zip(&ws.r) {
        *x += d;
    }
    Ok(())
}

fn expand(sys: &LinearSystem, x: &[f64]) -> Solution {
    let n = sys.dim;
    let residual_inf = (0..n)
        .map(|i| {
            let row = &sys.matrix[i * n..(i + 1) * n];
            (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - sys.rhs[i]).abs()
        })
        .fold(0.0, f64::max);
    let rhs_inf = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut node_voltages = vec![0.0];
    node_voltages.extend_from_slice(&x[..sys.node_unknowns]);
    let source_currents = x[sys.node_unknowns..].to_vec();
    let branches = sys
        .stamps
        .iter()
        .map(|s| match *s {
            Stamp::Conductance { a, b, g } => {
                let v = node_v(x, a) - node_v(x, b);
                Branch {
                    voltage: v,
                    current: v * g,
                }
            }
            Stamp::Source { pos, neg, index } => Branch {
                voltage: node_v(x, pos) - node_v(x, neg),
                current: source_currents[index],
            },
        })
        .collect();
    Solution {
        node_voltages,
        source_currents,
        branches,
        residual_inf,
        rhs_inf,
    }
}

/// Stamps the netlist at the given memristances (indexed by device id) and
/// time.
pub fn assemble(netlist: &Netlist, memristance: &[f64], t: f64) -> Result<LinearSystem> {
    Mna::new(netlist).assemble(memristance, t)
}

pub fn solve(system: &LinearSystem) -> Result<Solution> {
    let mut ws = Scratch::default();
    solve_refined(&system.matrix, &system.rhs, system.dim, &mut ws).map_err(|pivot| {
        Error::Singular {
            pivot: system.labels[pivot].clone(),
            at: None,
        }
    })?;
    Ok(expand(system, &ws.x))
}

/// Assemble and solve in one call.
pub fn dc(netlist: &Netlist, memristance: &[f64], t: f64) -> Result<Solution> {
    solve(&assemble(netlist, memristance, t)?)
}
