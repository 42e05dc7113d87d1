//! Netlist parsing, spanning-tree decomposition and loop bookkeeping.
//!
//! Text grammar, one element per line:
//!
//! ```text
//! KIND id node+ node- value[unit] [flux=tag]    # KIND in C L J V I R
//! MUT  id branch_a branch_b value_nH
//! GYR  id n1+ n1- n2+ n2- value_S
//! FLUX tag value_phi0
//! ```
//!
//! Node `0` is ground. The branch flux is Phi(node+) - Phi(node-), so the
//! branch arrow runs from `node-` to `node+`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::units::ej_from_ic;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchKind {
    Capacitor,
    Inductor,
    Josephson,
    VoltageSource,
    CurrentSource,
    Resistor,
}

impl BranchKind {
    pub fn keyword(self) -> &'static str {
        match self {
            BranchKind::Capacitor => "C",
            BranchKind::Inductor => "L",
            BranchKind::Josephson => "J",
            BranchKind::VoltageSource => "V",
            BranchKind::CurrentSource => "I",
            BranchKind::Resistor => "R",
        }
    }

    /// Canonical unit suffix of the stored value.
    pub fn unit(self) -> &'static str {
        match self {
            BranchKind::Capacitor => "fF",
            BranchKind::Inductor => "nH",
            BranchKind::Josephson => "GHz",
            BranchKind::VoltageSource => "V",
            BranchKind::CurrentSource => "A",
            BranchKind::Resistor => "Ohm",
        }
    }

    fn from_keyword(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "C" => BranchKind::Capacitor,
            "L" => BranchKind::Inductor,
            "J" | "JJ" => BranchKind::Josephson,
            "V" => BranchKind::VoltageSource,
            "I" => BranchKind::CurrentSource,
            "R" => BranchKind::Resistor,
            _ => return None,
        })
    }

    pub fn is_inductive(self) -> bool {
        matches!(self, BranchKind::Inductor | BranchKind::Josephson)
    }

    fn must_be_positive(self) -> bool {
        !matches!(self, BranchKind::VoltageSource | BranchKind::CurrentSource)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub kind: BranchKind,
    /// Node indices into [`CircuitGraph::nodes`].
    pub plus: usize,
    pub minus: usize,
    /// Value in the canonical unit of `kind`.
    pub value: f64,
    pub flux: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    Mutual { id: String, a: String, b: String, m_nh: f64 },
    Gyrator { id: String, port1: (usize, usize), port2: (usize, usize), g_siemens: f64 },
}

impl Coupling {
    pub fn id(&self) -> &str {
        match self {
            Coupling::Mutual { id, .. } | Coupling::Gyrator { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitGraph {
    /// Node names; index 0 is always ground ("0").
    pub nodes: Vec<String>,
    pub branches: Vec<Branch>,
    pub couplings: Vec<Coupling>,
    /// Loop tag to external flux in units of Phi0.
    pub external_fluxes: BTreeMap<String, f64>,
}

impl CircuitGraph {
    pub fn branch(&self, id: &str) -> Option<(usize, &Branch)> {
        self.branches.iter().enumerate().find(|(_, b)| b.id == id)
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Number of non-ground nodes.
    pub fn live_nodes(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn set_flux(&mut self, tag: &str, phi0: f64) {
        self.external_fluxes.insert(tag.to_string(), phi0);
    }
}

// ---------------------------------------------------------------- parsing

fn split_number(tok: &str) -> Option<(f64, &str)> {
    let bytes = tok.as_bytes();
    let mut end = 0;
    let mut best: Option<(f64, usize)> = None;
    while end < bytes.len() {
        end += 1;
        if !tok.is_char_boundary(end) {
            continue;
        }
        if let Ok(v) = tok[..end].parse::<f64>() {
            if tok[..end].chars().all(|c| c.is_ascii_digit() || "+-.eE".contains(c)) {
                best = Some((v, end));
            }
        }
    }
    best.map(|(v, e)| (v, &tok[e..]))
}

fn prefix_exp(p: &str) -> Option<i32> {
    Some(match p {
        "" => 0,
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" | "µ" | "μ" => -6,
        "m" => -3,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        "T" => 12,
        _ => return None,
    })
}

/// `x * 10^e`, dividing for negative exponents so that `80fF` stays exactly 80.
fn pow10(x: f64, e: i32) -> f64 {
    if e >= 0 {
        x * 10f64.powi(e)
    } else {
        x / 10f64.powi(-e)
    }
}

/// Split a unit like `nH` into (decimal exponent, base unit).
fn parse_unit(u: &str) -> Option<(i32, &'static str)> {
    const BASES: [(&str, &str); 9] = [
        ("Hz", "Hz"),
        ("Ohm", "Ohm"),
        ("ohm", "Ohm"),
        ("Ω", "Ohm"),
        ("F", "F"),
        ("H", "H"),
        ("V", "V"),
        ("A", "A"),
        ("S", "S"),
    ];
    for (suffix, base) in BASES {
        if let Some(p) = u.strip_suffix(suffix) {
            if let Some(e) = prefix_exp(p) {
                return Some((e, base));
            }
        }
    }
    None
}

fn parse_branch_value(tok: &str, kind: BranchKind, line: usize) -> Result<f64> {
    let malformed = |msg: String| Error::Malformed { line, msg };
    let (num, unit) = split_number(tok).ok_or_else(|| malformed(format!("bad value `{tok}`")))?;
    if unit.is_empty() {
        return Err(malformed(format!("value `{tok}` needs a unit suffix")));
    }
    let (e, base) = parse_unit(unit).ok_or_else(|| malformed(format!("unknown unit `{unit}`")))?;
    let v = match (kind, base) {
        (BranchKind::Capacitor, "F") => pow10(num, e + 15),
        (BranchKind::Inductor, "H") => pow10(num, e + 9),
        (BranchKind::Josephson, "Hz") => pow10(num, e - 9),
        (BranchKind::Josephson, "A") => ej_from_ic(pow10(num, e)),
        (BranchKind::VoltageSource, "V") => pow10(num, e),
        (BranchKind::CurrentSource, "A") => pow10(num, e),
        (BranchKind::Resistor, "Ohm") => pow10(num, e),
        _ => return Err(malformed(format!("unit `{unit}` does not fit a {} branch", kind.keyword()))),
    };
    if kind.must_be_positive() && !(v > 0.0) {
        return Err(Error::NonPositiveValue { line, value: tok.to_string() });
    }
    if !v.is_finite() {
        return Err(malformed(format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Bare numbers are taken in canonical units; suffixed ones must use `base`,
/// which is converted with the canonical decimal exponent `canon_exp`.
fn parse_plain_value(tok: &str, base: &str, canon_exp: i32, line: usize) -> Result<f64> {
    let malformed = |msg: String| Error::Malformed { line, msg };
    let (num, unit) = split_number(tok).ok_or_else(|| malformed(format!("bad value `{tok}`")))?;
    if unit.is_empty() {
        return Ok(num);
    }
    let (e, b) = parse_unit(unit).ok_or_else(|| malformed(format!("unknown unit `{unit}`")))?;
    if b != base {
        return Err(malformed(format!("expected a value in {base}, got `{tok}`")));
    }
    Ok(pow10(num, e - canon_exp))
}

struct Pending {
    graph: CircuitGraph,
    ids: HashSet<String>,
    branch_nodes: HashSet<usize>,
    coupling_nodes: Vec<(usize, usize)>, // (node, line)
    mutual_refs: Vec<(String, usize)>,
    flux_refs: Vec<(String, usize)>,
    first_line: Option<usize>,
}

impl Pending {
    fn node(&mut self, name: &str) -> usize {
        if let Some(i) = self.graph.node_index(name) {
            return i;
        }
        self.graph.nodes.push(name.to_string());
        self.graph.nodes.len() - 1
    }

    fn claim_id(&mut self, id: &str, line: usize) -> Result<()> {
        if !self.ids.insert(id.to_string()) {
            return Err(Error::DuplicateId { line, id: id.to_string() });
        }
        Ok(())
    }
}

/// Parse the line-oriented netlist format.
pub fn parse_netlist(text: &str) -> Result<CircuitGraph> {
    let mut p = Pending {
        graph: CircuitGraph {
            nodes: vec!["0".to_string()],
            branches: vec![],
            couplings: vec![],
            external_fluxes: BTreeMap::new(),
        },
        ids: HashSet::new(),
        branch_nodes: HashSet::new(),
        coupling_nodes: vec![],
        mutual_refs: vec![],
        flux_refs: vec![],
        first_line: None,
    };
    for (ln0, raw) in text.lines().enumerate() {
        let line = ln0 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let head = toks[0];
        let malformed = |msg: &str| Error::Malformed { line, msg: msg.to_string() };
        match head.to_ascii_uppercase().as_str() {
            "FLUX" => {
                if toks.len() != 3 {
                    return Err(malformed("expected `FLUX tag value`"));
                }
                let v = parse_flux_value(toks[2], line)?;
                if p.graph.external_fluxes.insert(toks[1].to_string(), v).is_some() {
                    return Err(Error::DuplicateId { line, id: toks[1].to_string() });
                }
            }
            "MUT" => {
                if toks.len() != 5 {
                    return Err(malformed("expected `MUT id branch_a branch_b value`"));
                }
                p.claim_id(toks[1], line)?;
                let m = parse_plain_value(toks[4], "H", -9, line)?;
                if toks[2] == toks[3] {
                    return Err(malformed("mutual inductance needs two distinct branches"));
                }
                p.mutual_refs.push((toks[2].to_string(), line));
                p.mutual_refs.push((toks[3].to_string(), line));
                p.graph.couplings.push(Coupling::Mutual {
                    id: toks[1].to_string(),
                    a: toks[2].to_string(),
                    b: toks[3].to_string(),
                    m_nh: m,
                });
                p.first_line.get_or_insert(line);
            }
            "GYR" => {
                if toks.len() != 7 {
                    return Err(malformed("expected `GYR id n1+ n1- n2+ n2- value`"));
                }
                p.claim_id(toks[1], line)?;
                let g = parse_plain_value(toks[6], "S", 0, line)?;
                if !(g > 0.0) {
                    return Err(Error::NonPositiveValue { line, value: toks[6].to_string() });
                }
                let n: Vec<usize> = toks[2..6].iter().map(|t| p.node(t)).collect();
                if n[0] == n[1] || n[2] == n[3] {
                    return Err(malformed("gyrator port nodes must differ"));
                }
                let shared: Vec<usize> = [n[0], n[1]].into_iter().filter(|x| *x == n[2] || *x == n[3]).collect();
                if shared.iter().any(|&x| x != 0) {
                    return Err(malformed("gyrator ports may share only ground"));
                }
                for &k in &n {
                    p.coupling_nodes.push((k, line));
                }
                p.graph.couplings.push(Coupling::Gyrator {
                    id: toks[1].to_string(),
                    port1: (n[0], n[1]),
                    port2: (n[2], n[3]),
                    g_siemens: g,
                });
                p.first_line.get_or_insert(line);
            }
            _ => {
                let kind = BranchKind::from_keyword(head)
                    .ok_or_else(|| Error::UnknownElementKind { line, kind: head.to_string() })?;
                if toks.len() != 5 && toks.len() != 6 {
                    return Err(malformed("expected `KIND id node+ node- value [flux=tag]`"));
                }
                p.claim_id(toks[1], line)?;
                let value = parse_branch_value(toks[4], kind, line)?;
                let flux = match toks.get(5) {
                    Some(t) => {
                        let tag = t.strip_prefix("flux=").ok_or_else(|| malformed("trailing token must be flux=<tag>"))?;
                        if tag.is_empty() {
                            return Err(malformed("empty flux tag"));
                        }
                        p.flux_refs.push((tag.to_string(), line));
                        Some(tag.to_string())
                    }
                    None => None,
                };
                if toks[2] == toks[3] {
                    return Err(malformed("branch endpoints must differ"));
                }
                let plus = p.node(toks[2]);
                let minus = p.node(toks[3]);
                p.branch_nodes.insert(plus);
                p.branch_nodes.insert(minus);
                p.graph.branches.push(Branch { id: toks[1].to_string(), kind, plus, minus, value, flux });
                p.first_line.get_or_insert(line);
            }
        }
    }
    for (id, line) in &p.mutual_refs {
        if p.graph.branch(id).is_none() {
            return Err(Error::UnknownBranch { line: *line, id: id.clone() });
        }
    }
    for (tag, line) in &p.flux_refs {
        if !p.graph.external_fluxes.contains_key(tag) {
            return Err(Error::Malformed { line: *line, msg: format!("flux tag `{tag}` has no FLUX declaration") });
        }
    }
    for (node, line) in &p.coupling_nodes {
        if !p.branch_nodes.contains(node) {
            return Err(Error::DanglingNode { line: *line, node: p.graph.nodes[*node].clone() });
        }
    }
    if !p.branch_nodes.contains(&0) {
        return Err(Error::MissingGround { line: p.first_line.unwrap_or(0) });
    }
    Ok(p.graph)
}

fn parse_flux_value(tok: &str, line: usize) -> Result<f64> {
    let t = tok.strip_suffix("Phi0").unwrap_or(tok);
    t.parse::<f64>().map_err(|_| Error::Malformed { line, msg: format!("bad flux value `{tok}`") })
}

/// Canonical text form; `parse_netlist(to_text(g)) == g`.
pub fn to_text(g: &CircuitGraph) -> String {
    let mut out = String::new();
    for (tag, v) in &g.external_fluxes {
        out.push_str(&format!("FLUX {tag} {v:?}\n"));
    }
    for b in &g.branches {
        out.push_str(&format!(
            "{} {} {} {} {:?}{}",
            b.kind.keyword(),
            b.id,
            g.nodes[b.plus],
            g.nodes[b.minus],
            b.value,
            b.kind.unit()
        ));
        if let Some(t) = &b.flux {
            out.push_str(&format!(" flux={t}"));
        }
        out.push('\n');
    }
    for c in &g.couplings {
        match c {
            Coupling::Mutual { id, a, b, m_nh } => out.push_str(&format!("MUT {id} {a} {b} {m_nh:?}\n")),
            Coupling::Gyrator { id, port1, port2, g_siemens } => out.push_str(&format!(
                "GYR {id} {} {} {} {} {g_siemens:?}\n",
                g.nodes[port1.0], g.nodes[port1.1], g.nodes[port2.0], g.nodes[port2.1]
            )),
        }
    }
    out
}

// --------------------------------------------------------------- json mirror

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcjElement {
    pub kind: String,
    pub id: String,
    pub plus: String,
    pub minus: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum QcjCoupling {
    #[serde(rename = "MUT")]
    Mutual { id: String, a: String, b: String, value: f64 },
    #[serde(rename = "GYR")]
    Gyrator { id: String, ports: [String; 4], value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcjDocument {
    pub elements: Vec<QcjElement>,
    #[serde(default)]
    pub couplings: Vec<QcjCoupling>,
    #[serde(default)]
    pub fluxes: BTreeMap<String, f64>,
}

/// Parse the JSON mirror. Errors name the line of the equivalent text form:
/// fluxes first, then elements, then couplings.
pub fn parse_json(text: &str) -> Result<CircuitGraph> {
    let doc: QcjDocument =
        serde_json::from_str(text).map_err(|e| Error::Malformed { line: e.line(), msg: e.to_string() })?;
    let mut out = String::new();
    for (tag, v) in &doc.fluxes {
        out.push_str(&format!("FLUX {tag} {v:?}\n"));
    }
    for e in &doc.elements {
        out.push_str(&format!("{} {} {} {} {}", e.kind, e.id, e.plus, e.minus, e.value));
        if let Some(t) = &e.flux {
            out.push_str(&format!(" flux={t}"));
        }
        out.push('\n');
    }
    for c in &doc.couplings {
        match c {
            QcjCoupling::Mutual { id, a, b, value } => out.push_str(&format!("MUT {id} {a} {b} {value:?}\n")),
            QcjCoupling::Gyrator { id, ports, value } => out.push_str(&format!(
                "GYR {id} {} {} {} {} {value:?}\n",
                ports[0], ports[1], ports[2], ports[3]
            )),
        }
    }
    parse_netlist(&out)
}

pub fn to_json(g: &CircuitGraph) -> String {
    let doc = QcjDocument {
        elements: g
            .branches
            .iter()
            .map(|b| QcjElement {
                kind: b.kind.keyword().to_string(),
                id: b.id.clone(),
                plus: g.nodes[b.plus].clone(),
                minus: g.nodes[b.minus].clone(),
                value: format!("{:?}{}", b.value, b.kind.unit()),
                flux: b.flux.clone(),
            })
            .collect(),
        couplings: g
            .couplings
            .iter()
            .map(|c| match c {
                Coupling::Mutual { id, a, b, m_nh } => {
                    QcjCoupling::Mutual { id: id.clone(), a: a.clone(), b: b.clone(), value: *m_nh }
                }
                Coupling::Gyrator { id, port1, port2, g_siemens } => QcjCoupling::Gyrator {
                    id: id.clone(),
                    ports: [
                        g.nodes[port1.0].clone(),
                        g.nodes[port1.1].clone(),
                        g.nodes[port2.0].clone(),
                        g.nodes[port2.1].clone(),
                    ],
                    value: *g_siemens,
                },
            })
            .collect(),
        fluxes: g.external_fluxes.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("netlist json")
}

// ------------------------------------------------------------ decomposition

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    /// Branch indices in the spanning tree, in selection order.
    pub tree: Vec<usize>,
    /// Branch indices of the chords; loop row k belongs to `chords[k]`.
    pub chords: Vec<usize>,
    /// Rows are non-ground nodes 1..=N, columns branches. +1 where the
    /// branch leaves the node (node-), -1 where it enters (node+).
    pub incidence: Vec<Vec<i64>>,
    /// One row per chord; +1 on the chord, +-1 on tree branches traversed
    /// with/against their orientation while closing the loop.
    pub loop_matrix: Vec<Vec<i64>>,
    /// For each tree branch (same order as `tree`), true when its arrow
    /// points away from ground along the tree.
    pub away_from_ground: Vec<bool>,
    /// Chord id to external flux in Phi0; filled by [`assign_chord_fluxes`].
    pub chord_flux: BTreeMap<String, f64>,
    /// Whether a spanning tree made only of capacitors exists.
    pub capacitive_tree: bool,
}

/// Compare ids so that `C2 < C10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, String)> {
        let mut out: Vec<(bool, String)> = Vec::new();
        for ch in s.chars() {
            let d = ch.is_ascii_digit();
            match out.last_mut() {
                Some((kd, buf)) if *kd == d => buf.push(ch),
                _ => out.push((d, ch.to_string())),
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let o = match (x.0, y.0) {
            (true, true) => {
                let xs = x.1.trim_start_matches('0');
                let ys = y.1.trim_start_matches('0');
                xs.len().cmp(&ys.len()).then_with(|| xs.cmp(ys))
            }
            _ => x.1.cmp(&y.1),
        };
        if o != Ordering::Equal {
            return o;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let nx = self.0[y];
            self.0[y] = r;
            y = nx;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

fn connected_by(g: &CircuitGraph, keep: impl Fn(&Branch) -> bool) -> bool {
    let mut d = Dsu::new(g.nodes.len());
    for b in g.branches.iter().filter(|b| keep(b)) {
        d.union(b.plus, b.minus);
    }
    (0..g.nodes.len()).all(|n| d.find(n) == d.find(0))
}

/// Choose a spanning tree and build the incidence and fundamental-loop
/// matrices. Ties are broken by natural branch-id order.
pub fn decompose(g: &CircuitGraph, prefer_capacitive: bool) -> Result<TreeDecomposition> {
    let nn = g.nodes.len();
    let m = g.branches.len();
    if !connected_by(g, |_| true) {
        let mut d = Dsu::new(nn);
        for b in &g.branches {
            d.union(b.plus, b.minus);
        }
        let lost: Vec<&str> = (0..nn).filter(|&n| d.find(n) != d.find(0)).map(|n| g.nodes[n].as_str()).collect();
        return Err(Error::Disconnected(format!("nodes {} not connected to ground", lost.join(", "))));
    }
    let capacitive_tree = connected_by(g, |b| b.kind == BranchKind::Capacitor);

    let priority = |b: &Branch| -> u8 {
        let mut p = 1;
        if prefer_capacitive && b.kind == BranchKind::Capacitor {
            p = 0;
        }
        if b.flux.is_some() || b.kind == BranchKind::CurrentSource {
            p += 4;
        }
        p
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&g.branches[i], &g.branches[j]);
        priority(a).cmp(&priority(b)).then_with(|| natural_cmp(&a.id, &b.id))
    });
    let mut dsu = Dsu::new(nn);
    let mut tree = Vec::new();
    let mut in_tree = vec![false; m];
    for &bi in &order {
        let b = &g.branches[bi];
        if dsu.union(b.plus, b.minus) {
            tree.push(bi);
            in_tree[bi] = true;
        }
    }
    let chords: Vec<usize> = (0..m).filter(|&i| !in_tree[i]).collect();

    // BFS over the tree from ground for parents and depths
    let mut adj: Vec<Vec<(usize, usize)>> = vec![vec![]; nn];
    for &bi in &tree {
        let b = &g.branches[bi];
        adj[b.plus].push((b.minus, bi));
        adj[b.minus].push((b.plus, bi));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nn];
    let mut depth = vec![usize::MAX; nn];
    depth[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        let mut nbrs = adj[x].clone();
        nbrs.sort_by(|a, b| natural_cmp(&g.branches[a.1].id, &g.branches[b.1].id));
        for (y, bi) in nbrs {
            if depth[y] == usize::MAX {
                depth[y] = depth[x] + 1;
                parent[y] = Some((x, bi));
                queue.push_back(y);
            }
        }
    }
    let away_from_ground: Vec<bool> = tree
        .iter()
        .map(|&bi| {
            let b = &g.branches[bi];
            depth[b.plus] > depth[b.minus]
        })
        .collect();

    let mut incidence = vec![vec![0i64; m]; nn - 1];
    for (bi, b) in g.branches.iter().enumerate() {
        if b.minus != 0 {
            incidence[b.minus - 1][bi] += 1;
        }
        if b.plus != 0 {
            incidence[b.plus - 1][bi] -= 1;
        }
    }

    let mut loop_matrix = Vec::with_capacity(chords.len());
    for &ci in &chords {
        let c = &g.branches[ci];
        let mut row = vec![0i64; m];
        row[ci] = 1;
        // walk from node+ back to node- through the tree
        let path = tree_path(c.plus, c.minus, &parent, &depth);
        for (from, to, bi) in path {
            let b = &g.branches[bi];
            let forward = b.minus == from && b.plus == to;
            row[bi] += if forward { 1 } else { -1 };
        }
        loop_matrix.push(row);
    }

    Ok(TreeDecomposition {
        tree,
        chords,
        incidence,
        loop_matrix,
        away_from_ground,
        chord_flux: BTreeMap::new(),
        capacitive_tree,
    })
}

/// Directed steps (from, to, branch) along the tree from `a` to `b`.
fn tree_path(
    a: usize,
    b: usize,
    parent: &[Option<(usize, usize)>],
    depth: &[usize],
) -> Vec<(usize, usize, usize)> {
    let mut up_a = Vec::new();
    let mut up_b = Vec::new();
    let (mut x, mut y) = (a, b);
    while depth[x] > depth[y] {
        let (p, bi) = parent[x].unwrap();
        up_a.push((x, p, bi));
        x = p;
    }
    while depth[y] > depth[x] {
        let (p, bi) = parent[y].unwrap();
        up_b.push((p, y, bi));
        y = p;
    }
    while x != y {
        let (px, bx) = parent[x].unwrap();
        up_a.push((x, px, bx));
        x = px;
        let (py, by) = parent[y].unwrap();
        up_b.push((py, y, by));
        y = py;
    }
    up_b.reverse();
    up_a.extend(up_b);
    up_a
}

/// Attach external fluxes to chords. A tag must sit on exactly one branch,
/// and that branch must be a chord.
pub fn assign_chord_fluxes(t: &TreeDecomposition, g: &CircuitGraph) -> Result<TreeDecomposition> {
    let mut out = t.clone();
    out.chord_flux = t.chords.iter().map(|&c| (g.branches[c].id.clone(), 0.0)).collect();
    let mut owners: HashMap<&str, Vec<usize>> = HashMap::new();
    for (bi, b) in g.branches.iter().enumerate() {
        if let Some(tag) = &b.flux {
            owners.entry(tag.as_str()).or_default().push(bi);
        }
    }
    let mut tags: Vec<_> = owners.into_iter().collect();
    tags.sort_by(|a, b| a.0.cmp(b.0));
    for (tag, bs) in tags {
        if bs.len() != 1 || !t.chords.contains(&bs[0]) {
            return Err(Error::AmbiguousLoopTag(tag.to_string()));
        }
        let v = *g.external_fluxes.get(tag).ok_or_else(|| Error::AmbiguousLoopTag(tag.to_string()))?;
        out.chord_flux.insert(g.branches[bs[0]].id.clone(), v);
    }
    Ok(out)
}

/// Integer rank by fraction-free Gaussian elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..a.len()).find(|&r| a[r][col] != 0) else { continue };
        a.swap(rank, piv);
        for r in 0..a.len() {
            if r != rank && a[r][col] != 0 {
                let (p, q) = (a[rank][col], a[r][col]);
                for c in 0..ncols {
                    a[r][c] = a[r][c] * p - a[rank][c] * q;
                }
                let g = a[r].iter().fold(0i128, |g, &x| gcd(g, x.abs()));
                if g > 1 {
                    a[r].iter_mut().for_each(|x| *x /= g);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// --------------------------------------------------------------- validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
}

/// Non-fatal diagnostics; an empty list means nothing suspicious was found.
pub fn validate(g: &CircuitGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |code: &str, message: String| out.push(Diagnostic { code: code.into(), message });

    let nn = g.nodes.len();
    let mut d = Dsu::new(nn);
    for b in &g.branches {
        d.union(b.plus, b.minus);
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in 0..nn {
        comps.entry(d.find(n)).or_default().push(n);
    }
    for (root, members) in &comps {
        if *root != d.find(0) {
            let names: Vec<&str> = members.iter().map(|&n| g.nodes[n].as_str()).collect();
            push("floating-subgraph", format!("freely floating subgraph: nodes {}", names.join(", ")));
        }
    }
    for b in &g.branches {
        if b.value == 0.0 {
            push("zero-value", format!("branch {} has zero value", b.id));
        }
    }
    for c in &g.couplings {
        if let Coupling::Mutual { id, a, b, .. } = c {
            for br in [a, b] {
                if let Some((_, x)) = g.branch(br) {
                    if x.kind != BranchKind::Inductor {
                        push("mutual-non-inductive", format!("mutual {id} references non-inductive branch {br}"));
                    }
                }
            }
        }
    }
    let used: HashSet<&str> = g.branches.iter().filter_map(|b| b.flux.as_deref()).collect();
    for tag in g.external_fluxes.keys() {
        if !used.contains(tag.as_str()) {
            push("unused-flux", format!("flux tag {tag} is declared but not attached to a branch"));
        }
    }
    for n in 1..nn {
        let has_c = g.branches.iter().any(|b| b.kind == BranchKind::Capacitor && (b.plus == n || b.minus == n));
        if !has_c {
            push("no-capacitance", format!("node {} has no capacitance", g.nodes[n]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul_t(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        a.iter().map(|r| b.iter().map(|s| r.iter().zip(s).map(|(x, y)| x * y).sum()).collect()).collect()
    }

    #[test]
    fn minimal_lc() {
        let g = parse_netlist("C C1 1 0 80fF\nL L1 1 0 10nH\n").unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.branches.len(), 2);
        assert_eq!(g.branches[0].value, 80.0);
        let t = decompose(&g, true).unwrap();
        assert_eq!(t.tree, vec![0]);
        assert_eq!(t.chords, vec![1]);
        assert_eq!(t.loop_matrix, vec![vec![-1, 1]]);
        assert!(matmul_t(&t.incidence, &t.loop_matrix).iter().flatten().all(|&x| x == 0));
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn rejects_bad_values_and_kinds() {
        assert_eq!(
            parse_netlist("C C1 1 0 -1fF\n").unwrap_err(),
            Error::NonPositiveValue { line: 1, value: "-1fF".into() }
        );
        assert!(matches!(parse_netlist("# c\nX X1 1 0 1fF").unwrap_err(), Error::UnknownElementKind { line: 2, .. }));
        assert!(matches!(parse_netlist("C C1 1 2 1fF").unwrap_err(), Error::MissingGround { line: 1 }));
        assert!(matches!(
            parse_netlist("C C1 1 0 1fF\nC C2 2 0 1fF\nGYR G 1 0 3 0 0.02").unwrap_err(),
            Error::DanglingNode { line: 3, .. }
        ));
        assert!(matches!(parse_netlist("C C1 1 0 1nH").unwrap_err(), Error::Malformed { line: 1, .. }));
        assert!(matches!(parse_netlist("C C1 1 0 1fF\nC C1 1 0 2fF").unwrap_err(), Error::DuplicateId { line: 2, .. }));
    }

    #[test]
    fn squid_has_one_live_node_and_a_tag() {
        let g = parse_netlist("FLUX ext 0.5\nJ J1 1 0 10GHz\nJ J2 1 0 10GHz flux=ext\n").unwrap();
        assert_eq!(g.live_nodes(), 1);
        assert_eq!(g.branches.len(), 2);
        assert_eq!(g.external_fluxes.len(), 1);
        let t = assign_chord_fluxes(&decompose(&g, true).unwrap(), &g).unwrap();
        assert_eq!(t.chord_flux["J2"], 0.5);
    }

    #[test]
    fn tag_on_bridge_is_ambiguous() {
        let g = parse_netlist("FLUX a 0.1\nC C1 1 0 1fF flux=a\n").unwrap();
        let t = decompose(&g, true).unwrap();
        assert_eq!(assign_chord_fluxes(&t, &g).unwrap_err(), Error::AmbiguousLoopTag("a".into()));
    }

    #[test]
    fn five_node_eight_branch_graph_has_four_loops() {
        // ground plus four nodes, eight branches
        let src = "C C1 1 0 1fF\nC C2 2 1 1fF\nC C3 3 2 1fF\nC C4 4 3 1fF\nL L1 4 0 1nH\nL L2 2 0 1nH\nJ J1 3 1 1GHz\nJ J2 4 2 1GHz\n";
        let g = parse_netlist(src).unwrap();
        let t = decompose(&g, true).unwrap();
        assert_eq!(t.loop_matrix.len(), 4);
        assert!(t.capacitive_tree);
    }

    #[test]
    fn pathological_series_lc_has_no_capacitive_tree() {
        let g = parse_netlist("C C1 1 0 1fF\nL L1 2 1 1nH\nJ J1 2 0 1GHz\n").unwrap();
        let t = decompose(&g, true).unwrap();
        assert!(!t.capacitive_tree);
    }

    #[test]
    fn natural_order() {
        assert_eq!(natural_cmp("C2", "C10"), Ordering::Less);
        assert_eq!(natural_cmp("C10", "C10"), Ordering::Equal);
    }

    #[test]
    fn diagnostics() {
        let g = parse_netlist("C C1 1 0 1fF\nL L1 1 0 1nH\nMUT M C1 L1 0.1").unwrap();
        assert!(validate(&g).iter().any(|d| d.code == "mutual-non-inductive"));
        let g = parse_netlist("C C1 1 0 1fF\nC C2 2 3 1fF").unwrap();
        assert!(validate(&g).iter().any(|d| d.message.contains("freely floating")));
    }

    #[test]
    fn json_mirror_roundtrip() {
        let g = parse_netlist("FLUX e 0.25\nC C1 1 0 80fF\nL L1 1 0 10nH flux=e\nL L2 1 0 5nH\nMUT M L1 L2 1.0").unwrap();
        assert_eq!(parse_json(&to_json(&g)).unwrap(), g);
        assert_eq!(parse_netlist(&to_text(&g)).unwrap(), g);
    }

    #[test]
    fn josephson_from_critical_current() {
        let g = parse_netlist("J J1 1 0 32.7nA").unwrap();
        assert!((g.branches[0].value - 16.25).abs() < 0.05);
    }
}
