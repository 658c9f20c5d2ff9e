use std::collections::VecDeque;

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type DeviceId = usize;
pub type WaveformId = usize;

pub const GROUND: NodeId = 0;

/// Piecewise-constant voltage of time. Each segment `(start, value)` holds
/// until the next segment's start; before the first start the value is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    segments: Vec<(f64, f64)>,
}

impl Waveform {
    pub fn constant(value: f64) -> Self {
        Self {
            segments: vec![(0.0, value)],
        }
    }

    /// Segments must have strictly increasing start times.
    pub fn from_segments(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Netlist(
                "waveform segment starts must be strictly increasing".into(),
            ));
        }
        if segments
            .iter()
            .any(|s| !s.0.is_finite() || !s.1.is_finite())
        {
            return Err(Error::Netlist("non-finite waveform segment".into()));
        }
        Ok(Self { segments })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.segments.partition_point(|s| s.0 <= t) {
            0 => 0.0,
            i => self.segments[i - 1].1,
        }
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// Times at which the value may change.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().map(|s| s.0)
    }

    /// Multiplies every segment value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|&(t, v)| (t, v * factor))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Resistor {
        name: String,
        a: NodeId,
        b: NodeId,
        ohms: f64,
    },
    /// Positive voltage is `v(pos) - v(neg)`.
    Memristor {
        name: String,
        pos: NodeId,
        neg: NodeId,
        device: DeviceId,
    },
    VoltageSource {
        name: String,
        pos: NodeId,
        neg: NodeId,
        waveform: WaveformId,
    },
}

impl Element {
    pub fn name(&self) -> &str {
        match self {
            Element::Resistor { name, .. }
            | Element::Memristor { name, .. }
            | Element::VoltageSource { name, .. } => name,
        }
    }

    pub fn terminals(&self) -> (NodeId, NodeId) {
        match *self {
            Element::Resistor { a, b, .. } => (a, b),
            Element::Memristor { pos, neg, .. } => (pos, neg),
            Element::VoltageSource { pos, neg, .. } => (pos, neg),
        }
    }
}

/// Resistive network with memristive branches and voltage sources.
/// Node 0 is ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    node_names: Vec<String>,
    elements: Vec<Element>,
    waveforms: Vec<Waveform>,
}

impl Default for Netlist {
    fn default() -> Self {
        Self::new()
    }
}

impl Netlist {
    pub fn new() -> Self {
        Self {
            node_names: vec!["gnd".to_string()],
            elements: Vec::new(),
            waveforms: Vec::new(),
        }
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> NodeId {
        self.node_names.push(name.into());
        self.node_names.len() - 1
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name)
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.node_names[id]
    }

    /// Including ground.
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn add_waveform(&mut self, w: Waveform) -> WaveformId {
        self.waveforms.push(w);
        self.waveforms.len() - 1
    }

    pub fn waveform(&self, id: WaveformId) -> &Waveform {
        &self.waveforms[id]
    }

    pub fn waveforms(&self) -> &[Waveform] {
        &self.waveforms
    }

    pub fn waveforms_mut(&mut self) -> &mut [Waveform] {
        &mut self.waveforms
    }

    pub fn add_resistor(&mut self, name: impl Into<String>, a: NodeId, b: NodeId, ohms: f64) {
        self.elements.push(Element::Resistor {
            name: name.into(),
            a,
            b,
            ohms,
        });
    }

    pub fn add_memristor(
        &mut self,
        name: impl Into<String>,
        pos: NodeId,
        neg: NodeId,
        device: DeviceId,
    ) {
        self.elements.push(Element::Memristor {
            name: name.into(),
            pos,
            neg,
            device,
        });
    }

    pub fn add_source(
        &mut self,
        name: impl Into<String>,
        pos: NodeId,
        neg: NodeId,
        waveform: WaveformId,
    ) {
        self.elements.push(Element::VoltageSource {
            name: name.into(),
            pos,
            neg,
            waveform,
        });
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn source_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::VoltageSource { .. }))
            .count()
    }

    /// Device ids in element order.
    pub fn devices(&self) -> Vec<DeviceId> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Memristor { device, .. } => Some(*device),
                _ => None,
            })
            .collect()
    }

    pub fn count_resistors(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::Resistor { .. }))
            .count()
    }

    /// Checks structural invariants: valid node and waveform references,
    /// positive resistances, one element per device, and no node that is
    /// unreachable from ground.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        let mut seen_devices = Vec::new();
        for e in &self.elements {
            let (a, b) = e.terminals();
            if a >= n || b >= n {
                return Err(Error::Netlist(format!(
                    "element `{}` references an unknown node",
                    e.name()
                )));
            }
            match e {
                Element::Resistor { ohms, name, .. } if !(*ohms > 0.0 && ohms.is_finite()) => {
                    return Err(Error::Netlist(format!(
                        "resistor `{name}` has non-positive resistance {ohms}"
                    )));
                }
                Element::Memristor { device, name, .. } => {
                    if seen_devices.contains(device) {
                        return Err(Error::Netlist(format!(
                            "device {device} is bound twice (at `{name}`)"
                        )));
                    }
                    seen_devices.push(*device);
                }
                Element::VoltageSource { waveform, name, .. }
                    if *waveform >= self.waveforms.len() =>
                {
                    return Err(Error::Netlist(format!(
                        "source `{name}` references unknown waveform {waveform}"
                    )));
                }
                _ => {}
            }
        }
        let mut adj = vec![Vec::new(); n];
        for e in &self.elements {
            let (a, b) = e.terminals();
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut reached = vec![false; n];
        reached[GROUND] = true;
        let mut queue = VecDeque::from([GROUND]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !reached[v] {
                    reached[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(floating) = reached.iter().position(|r| !r) {
            return Err(Error::Netlist(format!(
                "node `{}` is not connected to ground",
                self.node_names[floating]
            )));
        }
        Ok(())
    }
}
