//! Fixed-step transient simulation of a resistive network whose memristive
//! branches drift under their own terminal voltages.
//!
//! The default [`Coupling::Staged`] integrates the whole device-state vector
//! with RK4 and re-solves the network at every stage, so the coupling between
//! device states and node voltages is fourth order. Threshold-gate changes
//! inside a step are located by bisection and the step is split there.
//! [`Coupling::Explicit`] freezes the network for a whole step and advances
//! each device with [`device::step`](crate::device::step).

use std::io::{self, Write};

use super::mna::{Mna, Scratch, Solution};
use super::netlist::Netlist;
use crate::device::{self, MemristorParams, MemristorState};
use crate::error::{Error, Result};
use crate::fmt::sig12;

/// Gate events allowed inside one step before the remainder is taken whole.
const MAX_EVENTS_PER_STEP: usize = 64;
const EVENT_BISECTIONS: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    #[default]
    Staged,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOptions {
    pub dt: f64,
    pub coupling: Coupling,
}

impl Default for TransientOptions {
    fn default() -> Self {
        Self {
            dt: device::DEFAULT_DT,
            coupling: Coupling::Staged,
        }
    }
}

/// What an observer sees at the start of every step.
pub struct StepView<'s> {
    pub t: f64,
    pub solution: &'s Solution,
    /// Indexed by device id.
    pub states: &'s [MemristorState],
    pub memristance: &'s [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientSummary {
    pub final_states: Vec<MemristorState>,
    pub steps: usize,
    /// Worst KCL ratio over every recorded solve.
    pub max_kcl_ratio: f64,
    pub gate_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Non-ground nodes, in node id order starting at 1.
    pub node_voltages: Vec<f64>,
    pub states: Vec<MemristorState>,
    pub memristance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub summary: TransientSummary,
}

impl Trace {
    /// CSV with header `t_s,node_<k>_V...,device_<id>_x,device_<id>_ohms...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let Some(first) = self.rows.first() else {
            return writeln!(w, "t_s");
        };
        let mut header = vec!["t_s".to_string()];
        header.extend((1..=first.node_voltages.len()).map(|k| format!("node_{k}_V")));
        for id in 0..first.states.len() {
            header.push(format!("device_{id}_x"));
            header.push(format!("device_{id}_ohms"));
        }
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut fields = Vec::with_capacity(header.len());
            fields.push(sig12(row.t));
            fields.extend(row.node_voltages.iter().map(|&v| sig12(v)));
            for (s, m) in row.states.iter().zip(&row.memristance) {
                fields.push(sig12(s.x));
                fields.push(sig12(*m));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Step start times: a uniform grid of at most `dt` between consecutive
/// waveform breakpoints, so no step straddles a source change.
fn step_grid(netlist: &Netlist, t_end: f64, dt: f64) -> Vec<(f64, f64)> {
    let mut marks: Vec<f64> = netlist
        .waveforms()
        .iter()
        .flat_map(|w| w.breakpoints())
        .filter(|&b| b > 0.0 && b < t_end)
        .collect();
    marks.push(0.0);
    marks.push(t_end);
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * dt);
    let mut grid = Vec::new();
    for pair in marks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let n = ((b - a) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        grid.extend((0..n).map(|i| (a + i as f64 * h, h)));
    }
    grid
}

struct Engine<'a> {
    mna: Mna<'a>,
    params: Vec<MemristorParams>,
    /// Device id of each memristor element, in MNA order.
    slots: Vec<usize>,
    scratch: Scratch,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn memristance_into(&mut self, x: &[f64]) {
        for (m, (xi, p)) in self.m.iter_mut().zip(x.iter().zip(&self.params)) {
            *m = p.memristance_at(xi.clamp(0.0, 1.0));
        }
    }

    /// Solves the network at states `x` and returns per-device voltages in
    /// `self.v` (indexed by device id).
    fn voltages(&mut self, x: &[f64], t: f64) -> Result<()> {
        self.memristance_into(x);
        self.mna.solve_into(&self.m, t, &mut self.scratch)?;
        let mut per_slot = vec![0.0; self.slots.len()];
        self.mna.memristor_voltages(&self.scratch.x, &mut per_slot);
        for (&dev, v) in self.slots.iter().zip(per_slot) {
            self.v[dev] = v;
        }
        Ok(())
    }

    fn rates(&mut self, x: &[f64], t: f64, active: &[bool]) -> Result<Vec<f64>> {
        self.voltages(x, t)?;
        Ok(x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                if active[i] {
                    self.params[i].ungated_rate(xi.clamp(0.0, 1.0), self.v[i])
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// One RK4 step of the coupled system with the gate pattern held fixed.
    fn rk4(&mut self, x: &[f64], t: f64, h: f64, active: &[bool]) -> Result<Vec<f64>> {
        let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            a.iter().zip(k).map(|(a, k)| a + s * k).collect()
        };
        let k1 = self.rates(x, t, active)?;
        let k2 = self.rates(&axpy(x, &k1, 0.5 * h), t, active)?;
        let k3 = self.rates(&axpy(x, &k2, 0.5 * h), t, active)?;
        let k4 = self.rates(&axpy(x, &k3, h), t, active)?;
        Ok(x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                (xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).clamp(0.0, 1.0)
            })
            .collect())
    }

    fn gate(&mut self, x: &[f64], t: f64) -> Result<Vec<bool>> {
        self.voltages(x, t)?;
        Ok(self
            .params
            .iter()
            .zip(&self.v)
            .map(|(p, &v)| p.is_active(v))
            .collect())
    }

    /// Advances `x` over `[t, t + h)`, splitting at gate transitions.
    fn staged_step(&mut self, x: &mut Vec<f64>, t: f64, h: f64) -> Result<usize> {
        let mut active = self.gate(x, t)?;
        let mut remaining = h;
        let mut events = 0;
        while remaining > 1e-12 * h {
            let trial = self.rk4(x, t, remaining, &active)?;
            if events >= MAX_EVENTS_PER_STEP || self.gate(&trial, t)? == active {
                *x = trial;
                break;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..EVENT_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                let probe = self.rk4(x, t, mid * remaining, &active)?;
                if self.gate(&probe, t)? == active {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            *x = self.rk4(x, t, hi * remaining, &active)?;
            active = self.gate(x, t)?;
            remaining -= hi * remaining;
            events += 1;
        }
        Ok(events)
    }

    fn explicit_step(&mut self, x: &mut [f64], t: f64, h: f64) -> Result<()> {
        self.voltages(x, t)?;
        for (i, xi) in x.iter_mut().enumerate() {
            let s = MemristorState { x: *xi, t_last: t };
            *xi = device::step(&s, self.v[i], h, &self.params[i]).x;
        }
        Ok(())
    }
}

/// Runs the transient and hands every step-start solution to `observer`.
///
/// `devices` is indexed by device id and must cover every memristor in the
/// netlist. Errors carry the timestamp of the failing solve.
pub fn transient_with<F>(
    netlist: &Netlist,
    devices: &[(MemristorState, MemristorParams)],
    t_end: f64,
    opts: TransientOptions,
    mut observer: F,
) -> Result<TransientSummary>
where
    F: FnMut(&StepView<'_>),
{
    if !(opts.dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Netlist(format!(
            "transient needs dt > 0 and t_end > 0 (got dt = {}, t_end = {})",
            opts.dt, t_end
        )));
    }
    netlist.validate()?;
    let mna = Mna::new(netlist);
    let slots: Vec<usize> = mna.memristor_devices().collect();
    if let Some(&missing) = slots.iter().find(|&&d| d >= devices.len()) {
        let name = netlist
            .elements()
            .iter()
            .find(|e| matches!(e, super::Element::Memristor { device, .. } if *device == missing))
            .map(|e| e.name().to_string())
            .unwrap_or_default();
        return Err(Error::Assembly { element: name });
    }
    let n_dev = devices.len();
    let mut engine = Engine {
        mna,
        params: devices.iter().map(|d| d.1).collect(),
        slots,
        scratch: Scratch::default(),
        m: vec![0.0; n_dev],
        v: vec![0.0; n_dev],
    };
    let mut x: Vec<f64> = devices.iter().map(|d| d.0.x).collect();
    let grid = step_grid(netlist, t_end, opts.dt);
    let mut max_kcl = 0.0f64;
    let mut gate_events = 0;
    let mut states: Vec<MemristorState> = Vec::with_capacity(n_dev);
    for &(t, h) in &grid {
        engine.memristance_into(&x);
        let memristance = engine.m.clone();
        engine
            .mna
            .solve_into(&memristance, t, &mut engine.scratch)?;
        let solution = engine
            .mna
            .solution_from(&engine.scratch.x, &memristance, t)?;
        max_kcl = max_kcl.max(solution.kcl_ratio(netlist));
        states.clear();
        states.extend(x.iter().map(|&xi| MemristorState { x: xi, t_last: t }));
        observer(&StepView {
            t,
            solution: &solution,
            states: &states,
            memristance: &memristance,
        });
        match opts.coupling {
            Coupling::Staged => gate_events += engine.staged_step(&mut x, t, h)?,
            Coupling::Explicit => engine.explicit_step(&mut x, t, h)?,
        }
    }
    Ok(TransientSummary {
        final_states: x
            .iter()
            .map(|&xi| MemristorState {
                x: xi,
                t_last: t_end,
            })
            .collect(),
        steps: grid.len(),
        max_kcl_ratio: max_kcl,
        gate_events,
    })
}

/// Runs the transient and records every step.
pub fn transient(
    netlist: &Netlist,
    devices: &[(MemristorState, MemristorParams)],
    t_end: f64,
    opts: TransientOptions,
) -> Result<Trace> {
    let mut rows = Vec::new();
    let summary = transient_with(netlist, devices, t_end, opts, |view| {
        rows.push(TraceRow {
            t: view.t,
            node_voltages: view.solution.node_voltages[1..].to_vec(),
            states: view.states.to_vec(),
            memristance: view.memristance.to_vec(),
        })
    })?;
    Ok(Trace { rows, summary })
}
