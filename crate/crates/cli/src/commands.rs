use std::f64::consts::PI;
use std::path::Path;

use qcirc::builder::{build, hamiltonian_frequencies, HamiltonianSpec, VarKind};
use qcirc::dynamics::{
    dpa_steady_state, driven_duffing, evolve, jrm_steady_state, thermal_rates, DriveParams, LinearIoModel,
};
use qcirc::linalg::CMat;
use qcirc::netlist::{parse_json, parse_netlist, validate, BranchKind, CircuitGraph, Diagnostic};
use qcirc::network::{
    blackbox_hamiltonian, foster_fit, kerr_parameters, netlist_ports, read_sampled_csv, CauerModel, Expansion,
    FosterOptions, KerrParams, NodalNetwork, PortMatrixFunction, DEFAULT_MIN_GAP_GHZ,
};
use qcirc::spectrum::{diagonalize, oscillator_ops, solve, sweep as run_sweep, BasisSpec, SolveOptions};
use qcirc::units::UnitMode;
use qcirc::C64;
use serde::Serialize;

use crate::checks::{self, Suite};
use crate::output::{OutDir, Table, SCHEMA_VERSION};
use crate::{AmpArgs, AmpKind, CliError, CliResult, Common, DynArgs, NetArgs, Order};

/// Largest accepted truncation override.
const MAX_DIM: usize = 8192;
const DEFAULT_LEVELS: usize = 5;
/// Per-mode Fock dimension for black-box Hamiltonians (ten excitations).
const DEFAULT_BLACKBOX_DIM: usize = 11;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn load_graph(path: &Path) -> CliResult<CircuitGraph> {
    let text = read(path)?;
    Ok(if extension(path) == "qcj" { parse_json(&text)? } else { parse_netlist(&text)? })
}

fn unit_mode(c: &Common) -> UnitMode {
    if c.paper_units {
        UnitMode::Paper
    } else {
        UnitMode::Exact
    }
}

fn solve_options(c: &Common) -> CliResult<SolveOptions> {
    let mut o = SolveOptions::default();
    if let Some(t) = c.tol {
        if !(t > 0.0) {
            return Err(CliError::input("--tol must be positive"));
        }
        o.tol = t;
    }
    Ok(o)
}

fn basis_for(spec: &HamiltonianSpec, c: &Common) -> CliResult<BasisSpec> {
    if c.dims.len() > spec.dim() {
        return Err(CliError::input(format!("--dims has {} entries for {} variables", c.dims.len(), spec.dim())));
    }
    if let Some(&d) = c.dims.iter().find(|&&d| d > MAX_DIM) {
        return Err(CliError::input(format!("--dims entry {d} exceeds {MAX_DIM}")));
    }
    let sizes: Vec<Option<usize>> = c.dims.iter().map(|&d| Some(d)).collect();
    Ok(BasisSpec::with_sizes(spec, &sizes))
}

fn finish_checks(suite: &Suite) -> CliResult<()> {
    suite.print();
    let bad = suite.failures();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::numerical(format!("invariant violated: {}", bad.join(", "))))
    }
}

#[derive(Serialize)]
struct QhsFile<'a> {
    schema_version: u32,
    diagnostics: &'a [Diagnostic],
    spec: &'a HamiltonianSpec,
}

pub fn quantize(input: &Path, c: &Common) -> CliResult<()> {
    let g = load_graph(input)?;
    let diagnostics = validate(&g);
    let spec = build(&g)?;
    let mut out = OutDir::create(&c.out, "quantize", c.paper_units)?;
    out.write_json("spec.qhs", &QhsFile { schema_version: SCHEMA_VERSION, diagnostics: &diagnostics, spec: &spec })?;
    if let Ok(freqs) = hamiltonian_frequencies(&spec) {
        let mut t = Table::new(&["mode".into(), "f_GHz".into()]);
        for (i, f) in freqs.iter().enumerate() {
            t.row(&[i as f64, *f]);
        }
        out.write("modes.csv", &t.into_string())?;
    }
    out.finish()?;
    for d in &diagnostics {
        eprintln!("warning [{}]: {}", d.code, d.message);
    }
    for (i, l) in spec.labels.iter().enumerate() {
        let kind = if spec.kinds[i] == VarKind::Compact { "compact" } else { "extended" };
        println!("{l}: {kind}, E_C = {} GHz", qcirc::spectrum::format_sig(spec.scales[i].ec));
    }
    if c.check {
        let mut s = Suite::default();
        checks::netlist(&mut s, &g);
        checks::builder(&mut s, &g, &spec);
        finish_checks(&s)?;
    }
    Ok(())
}

pub fn spectrum(input: &Path, c: &Common) -> CliResult<()> {
    let g = load_graph(input)?;
    let spec = build(&g)?;
    let basis = basis_for(&spec, c)?;
    let k = c.levels.unwrap_or(DEFAULT_LEVELS);
    let opts = solve_options(c)?;
    let r = solve(&spec, &basis, k, opts)?;
    let mut t = Table::new(&["level".into(), "E_GHz".into(), "E_minus_E0_GHz".into()]);
    for (i, e) in r.eigenvalues.iter().enumerate() {
        t.row(&[i as f64, *e, e - r.eigenvalues[0]]);
        println!("E{i} - E0 = {} GHz", qcirc::spectrum::format_sig(e - r.eigenvalues[0]));
    }
    let mut out = OutDir::create(&c.out, "spectrum", c.paper_units)?;
    out.write("spectrum.csv", &t.into_string())?;
    out.finish()?;
    if c.check {
        let mut s = Suite::default();
        checks::spectrum(&mut s, &spec, &BasisSpec { vars: basis_at(&basis, &r) }, &r, opts.tol);
        finish_checks(&s)?;
    }
    Ok(())
}

/// Basis actually used by a solve, after any escalation.
fn basis_at(basis: &BasisSpec, r: &qcirc::spectrum::SpectrumResult) -> Vec<qcirc::spectrum::VarBasis> {
    use qcirc::spectrum::VarBasis;
    basis
        .vars
        .iter()
        .zip(&r.dims)
        .map(|(v, &d)| match *v {
            VarBasis::Charge { n_g, .. } => VarBasis::Charge { n_max: (d - 1) / 2, n_g },
            VarBasis::Fock { phi_zpf, .. } => VarBasis::Fock { dim: d, phi_zpf },
        })
        .collect()
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::input(format!("grid `{s}` is not START:STOP:COUNT"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    })
}

enum SweepParam {
    Offset(usize),
    Flux(String),
}

pub fn sweep(input: &Path, name: &str, grid: &str, c: &Common) -> CliResult<()> {
    let g = load_graph(input)?;
    let base = build(&g)?;
    let grid = parse_grid(grid)?;
    let (param, header) = if let Some(tag) = name.strip_prefix("flux:") {
        if !g.branches.iter().any(|b| b.flux.as_deref() == Some(tag)) && !g.external_fluxes.contains_key(tag) {
            return Err(CliError::input(format!("unknown flux tag `{tag}`")));
        }
        (SweepParam::Flux(tag.to_string()), format!("flux_{tag}_Phi0"))
    } else if name == "ng" || name.starts_with("ng:") {
        let var = match name.strip_prefix("ng:") {
            Some(label) => base.labels.iter().position(|l| l == label),
            None => base.kinds.iter().position(|k| *k == VarKind::Compact),
        }
        .ok_or_else(|| CliError::input(format!("no variable for `{name}`")))?;
        (SweepParam::Offset(var), format!("ng_{}_2e", base.labels[var]))
    } else {
        return Err(CliError::input(format!("unknown sweep parameter `{name}`; use ng, ng:LABEL or flux:TAG")));
    };
    let k = c.levels.unwrap_or(DEFAULT_LEVELS);
    let opts = solve_options(c)?;
    // validate the truncation once up front
    basis_for(&base, c)?;
    let mut header_cells = vec![header.clone()];
    header_cells.extend((0..k).map(|i| format!("E{i}_GHz")));
    let mut t = Table::new(&header_cells);
    if !grid.is_empty() {
        let make = |p: f64| -> qcirc::Result<(HamiltonianSpec, BasisSpec)> {
            let spec = match &param {
                SweepParam::Offset(v) => {
                    let mut s = base.clone();
                    s.offset[*v] = p;
                    s
                }
                SweepParam::Flux(tag) => {
                    let mut gg = g.clone();
                    gg.set_flux(tag, p);
                    build(&gg)?
                }
            };
            let sizes: Vec<Option<usize>> = c.dims.iter().map(|&d| Some(d)).collect();
            let basis = BasisSpec::with_sizes(&spec, &sizes);
            Ok((spec, basis))
        };
        for row in run_sweep(make, &grid, k, opts)? {
            let mut cells = vec![row.param];
            cells.extend(&row.result.eigenvalues);
            t.row(&cells);
        }
    }
    let mut out = OutDir::create(&c.out, "sweep", c.paper_units)?;
    out.write("sweep.csv", &t.into_string())?;
    out.finish()?;
    println!("{} points", grid.len());
    Ok(())
}

fn parse_window(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::input(format!("window `{s}` is not LO:HI in GHz"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo) {
        return Err(bad());
    }
    Ok((2.0 * PI * lo * 1e9, 2.0 * PI * hi * 1e9))
}

/// Port impedance from sampled CSV or a netlist, plus its window in rad/s
/// and the junction energies found on netlist ports.
fn load_network(input: &Path, net: &NetArgs) -> CliResult<(PortMatrixFunction, (f64, f64), Vec<Option<f64>>)> {
    if extension(input) == "csv" {
        let f = read_sampled_csv(&read(input)?, net.z0)?;
        let window = match &net.window {
            Some(w) => parse_window(w)?,
            None => {
                let w = f.sample_omegas().unwrap_or(&[]);
                (w[0], w[w.len() - 1])
            }
        };
        let ej = vec![None; f.ports];
        return Ok((f, window, ej));
    }
    let g = load_graph(input)?;
    let ids: Vec<String> = if net.ports.is_empty() {
        g.branches.iter().filter(|b| b.kind == BranchKind::Josephson).map(|b| b.id.clone()).collect()
    } else {
        net.ports.clone()
    };
    if ids.is_empty() {
        return Err(CliError::input("no ports: pass --ports or add junctions"));
    }
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let nodal = NodalNetwork::new(&g, netlist_ports(&g, &refs)?)?;
    let window = parse_window(net.window.as_deref().ok_or_else(|| CliError::input("netlist input needs --window LO:HI"))?)?;
    let ej = ids
        .iter()
        .map(|id| g.branch(id).and_then(|(_, b)| (b.kind == BranchKind::Josephson).then_some(b.value)))
        .collect();
    Ok((nodal.impedance_function(net.z0), window, ej))
}

fn fit(input: &Path, net: &NetArgs) -> CliResult<(CauerModel, (f64, f64), Vec<Option<f64>>)> {
    if !(net.c0 > 0.0) {
        return Err(CliError::input("--c0 must be positive"));
    }
    let (f, window, ej) = load_network(input, net)?;
    let model = foster_fit(&f, window, &FosterOptions { c0_ff: net.c0, ..Default::default() })?;
    Ok((model, window, ej))
}

fn modes_table(model: &CauerModel) -> String {
    let mut h = vec!["mode".into(), "omega_rad_s".into(), "f_GHz".into(), "Z_ohm".into(), "kappa_rad_s".into()];
    h.extend((1..=model.num_ports()).map(|p| format!("t_port{p}")));
    let mut t = Table::new(&h);
    for (i, m) in model.modes.iter().enumerate() {
        let mut cells = vec![i as f64, m.omega, m.omega / (2.0 * PI * 1e9), m.z, m.kappa];
        cells.extend(&m.t);
        t.row(&cells);
    }
    t.into_string()
}

pub fn network(input: &Path, net: &NetArgs, c: &Common) -> CliResult<()> {
    let (model, window, _) = fit(input, net)?;
    let mut out = OutDir::create(&c.out, "network", c.paper_units)?;
    out.write("model.qcm", &(model.to_json() + "\n"))?;
    out.write("modes.csv", &modes_table(&model))?;
    out.finish()?;
    for m in &model.modes {
        println!(
            "mode {} GHz, kappa/2pi {} Hz",
            qcirc::spectrum::format_sig(m.omega / (2.0 * PI * 1e9)),
            qcirc::spectrum::format_sig(m.kappa / (2.0 * PI))
        );
    }
    if c.check {
        let mut s = Suite::default();
        checks::network(&mut s, &model, window);
        finish_checks(&s)?;
    }
    Ok(())
}

fn parse_ej(s: &str) -> CliResult<f64> {
    let t = s.trim();
    let num = t.strip_suffix("GHz").or_else(|| t.strip_suffix("ghz")).unwrap_or(t);
    match num.trim().parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(v),
        _ => Err(CliError::input(format!("bad --ej value `{s}`; expected e.g. 16.35GHz"))),
    }
}

#[derive(Serialize)]
struct KerrFile<'a> {
    schema_version: u32,
    expansion: &'a str,
    dims: &'a [usize],
    kerr: &'a KerrParams,
}

pub fn blackbox(input: &Path, ej: &[String], order: Order, net: &NetArgs, c: &Common) -> CliResult<()> {
    let (model, window, found) = if extension(input) == "qcm" {
        let m = CauerModel::from_json(&read(input)?)?;
        let found = m.ports.iter().map(|p| (p.ej_ghz > 0.0).then_some(p.ej_ghz)).collect();
        (m, (0.0, 0.0), found)
    } else {
        fit(input, net)?
    };
    let _ = window;
    let ej: Vec<Option<f64>> = if ej.is_empty() {
        found
    } else {
        ej.iter().map(|s| parse_ej(s).map(Some)).collect::<CliResult<_>>()?
    };
    if ej.len() != model.num_ports() || ej.iter().any(Option::is_none) {
        return Err(CliError::input(format!("need one --ej value per port ({} ports)", model.num_ports())));
    }
    let model = model.with_junctions(&ej);
    let nm = model.modes.len();
    let dims: Vec<usize> = if c.dims.is_empty() { vec![DEFAULT_BLACKBOX_DIM; nm] } else { c.dims.clone() };
    if dims.len() != nm || dims.iter().any(|&d| d > MAX_DIM) {
        return Err(CliError::input(format!("--dims needs {nm} entries, each at most {MAX_DIM}")));
    }
    let (expansion, label) = match order {
        Order::Spectral => (Expansion::Spectral, "spectral"),
        Order::Four => (Expansion::Taylor4, "taylor4"),
        Order::Six => (Expansion::Taylor6, "taylor6"),
    };
    let h = blackbox_hamiltonian(&model, expansion, &dims)?;
    let k = c.levels.unwrap_or(3).min(dims.iter().product());
    let r = diagonalize(&h, k)?;
    let kerr = kerr_parameters(&model, DEFAULT_MIN_GAP_GHZ)?;
    let mut t = Table::new(&["level".into(), "E_minus_E0_GHz".into(), "f_from_previous_GHz".into()]);
    for i in 0..r.eigenvalues.len() {
        let prev = if i == 0 { 0.0 } else { r.transition(i - 1, i) };
        t.row(&[i as f64, r.transition(0, i), prev]);
        if i > 0 {
            println!("f{}{} = {} GHz", i - 1, i, qcirc::spectrum::format_sig(prev));
        }
    }
    let mut out = OutDir::create(&c.out, "blackbox", c.paper_units)?;
    out.write("transitions.csv", &t.into_string())?;
    out.write_report("kerr.json", &KerrFile { schema_version: SCHEMA_VERSION, expansion: label, dims: &dims, kerr: &kerr })?;
    out.write("model.qcm", &(model.to_json() + "\n"))?;
    out.finish()?;
    if c.check {
        let mut s = Suite::default();
        if window.1 > window.0 {
            checks::network(&mut s, &model, window);
        }
        s.lines.push(checks::CheckLine {
            suite: "blackbox".into(),
            name: "hermiticity".into(),
            pass: h.hermiticity_defect() <= 1e-13 * h.norm_bound().max(1.0),
            detail: format!("{:.3e}", h.hermiticity_defect()),
        });
        finish_checks(&s)?;
    }
    Ok(())
}

pub fn dynamics(a: &DynArgs, c: &Common) -> CliResult<()> {
    let dim = c.dims.first().copied().unwrap_or(3);
    if c.dims.len() > 1 || dim < 2 || dim > 64 {
        return Err(CliError::input("--dims takes one level count between 2 and 64"));
    }
    if a.samples < 2 || !(a.t_max > 0.0) || !(a.dt > 0.0) {
        return Err(CliError::input("need --samples >= 2, --t-max > 0 and --dt > 0"));
    }
    if a.kappa < 0.0 || a.temp_mk < 0.0 {
        return Err(CliError::input("--kappa and --temp-mk must be non-negative"));
    }
    let p = DriveParams { omega: a.omega, delta: a.delta, cd_ff: a.cd, v_max: a.vmax, drive: a.drive.unwrap_or(a.omega) };
    let mut m = driven_duffing(&p, dim)?;
    if a.kappa > 0.0 {
        let ops = oscillator_ops(dim)?;
        let (down, up) = thermal_rates(a.kappa, a.omega, a.temp_mk, unit_mode(c));
        m = m.with_collapse(ops.a.clone(), down);
        if up > 0.0 {
            m = m.with_collapse(ops.adag.clone(), up);
        }
    }
    let mut rho0 = CMat::zeros(dim, dim);
    rho0[(0, 0)] = C64::new(1.0, 0.0);
    let times: Vec<f64> = (0..a.samples).map(|i| a.t_max * i as f64 / (a.samples - 1) as f64).collect();
    let traj = evolve(&m, &rho0, &times, a.dt)?;
    let mut out = OutDir::create(&c.out, "dynamics", c.paper_units)?;
    out.write("trajectory.csv", &traj.to_csv(dim))?;
    out.finish()?;
    let last = traj.states.last().map(|r| r[(1, 1)].re).unwrap_or(0.0);
    println!("P1(t_max) = {}", qcirc::spectrum::format_sig(last));
    if c.check {
        let mut s = Suite::default();
        checks::dynamics(&mut s, &traj);
        finish_checks(&s)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AmpFile {
    schema_version: u32,
    kind: &'static str,
    u: [f64; 2],
    v: [f64; 2],
    #[serde(rename = "gain_dB")]
    gain_db: f64,
    added_noise: f64,
    squeezing: f64,
}

pub fn amp(kind: AmpKind, a: &AmpArgs, c: &Common) -> CliResult<()> {
    let (report, linear, name) = match kind {
        AmpKind::Dpa => (dpa_steady_state(a.eps, a.kappa)?, LinearIoModel::dpa(a.eps, a.kappa), "dpa"),
        AmpKind::Jrm => (
            jrm_steady_state(a.lambda, a.kappa_s, a.kappa_i, a.nbar)?,
            LinearIoModel::jrm(a.lambda, a.kappa_s, a.kappa_i),
            "jrm",
        ),
    };
    let above = match kind {
        AmpKind::Dpa => 2.0 * a.eps.abs() > a.kappa,
        AmpKind::Jrm => 2.0 * a.lambda.abs() > (a.kappa_s * a.kappa_i).sqrt(),
    };
    if above {
        eprintln!("warning: pump above threshold, the steady state is unstable");
    }
    let file = AmpFile {
        schema_version: SCHEMA_VERSION,
        kind: name,
        u: [report.u.re, report.u.im],
        v: [report.v.re, report.v.im],
        gain_db: report.gain_db,
        added_noise: report.added_noise,
        squeezing: report.squeezing,
    };
    let mut out = OutDir::create(&c.out, "amp", c.paper_units)?;
    out.write_report("amp.json", &file)?;
    out.finish()?;
    println!("gain {} dB, added noise {}", qcirc::spectrum::format_sig(report.gain_db), qcirc::spectrum::format_sig(report.added_noise));
    if c.check {
        let mut s = Suite::default();
        checks::amplifier(&mut s, name, &report, &linear);
        finish_checks(&s)?;
    }
    Ok(())
}

/// Every suite on built-in reference cases, then on `input` if given.
pub fn check(input: Option<&Path>, c: &Common) -> CliResult<()> {
    let mut s = Suite::default();
    let opts = solve_options(c)?;

    let reference = "C C1 1 0 80fF\nJ J1 1 0 15GHz\nC Cc 1 2 5fF\nC Cr 2 0 300fF\nL Lr 2 0 3nH\n";
    let g = parse_netlist(reference)?;
    checks::netlist(&mut s, &g);
    let spec = build(&g)?;
    checks::builder(&mut s, &g, &spec);
    let harmonic = parse_netlist("C C1 1 0 60fF\nC C2 2 0 90fF\nL L1 1 0 8nH\nL L2 2 0 11nH\nGYR G 1 0 2 0 0.01\n")?;
    checks::builder(&mut s, &harmonic, &build(&harmonic)?);

    let cpb = HamiltonianSpec::cpb(0.25, 12.5, 0.0);
    let basis = BasisSpec::default_for(&cpb);
    let r = solve(&cpb, &basis, 4, opts)?;
    checks::spectrum(&mut s, &cpb, &BasisSpec { vars: basis_at(&basis, &r) }, &r, opts.tol);
    let fl = HamiltonianSpec::shunted_junction(1.0, 4.0, 1.0, PI);
    let basis = BasisSpec::with_sizes(&fl, &[Some(60)]);
    let r = solve(&fl, &basis, 4, opts)?;
    checks::spectrum(&mut s, &fl, &BasisSpec { vars: basis_at(&basis, &r) }, &r, opts.tol);

    checks::network_reference(&mut s);
    let lossless = CauerModel::new(100.0, vec![(2.0 * PI * 4e9, vec![1.0, 0.3], 0.0), (2.0 * PI * 6e9, vec![-0.4, 0.9], 0.0)]);
    checks::network(&mut s, &lossless, (2.0 * PI * 3e9, 2.0 * PI * 7e9));

    let p = DriveParams { omega: 5.0, delta: -0.3, cd_ff: 0.1, v_max: 20e-6, drive: 5.0 };
    let ops = oscillator_ops(3)?;
    let (down, up) = thermal_rates(0.01, 5.0, 50.0, unit_mode(c));
    let m = driven_duffing(&p, 3)?.with_collapse(ops.a.clone(), down).with_collapse(ops.adag.clone(), up);
    let mut rho0 = CMat::zeros(3, 3);
    rho0[(0, 0)] = C64::new(1.0, 0.0);
    let times: Vec<f64> = (0..=20).map(|i| i as f64).collect();
    checks::dynamics(&mut s, &evolve(&m, &rho0, &times, 1e-3)?);

    checks::amplifier(&mut s, "dpa", &dpa_steady_state(0.3, 1.0)?, &LinearIoModel::dpa(0.3, 1.0));
    checks::amplifier(&mut s, "jrm", &jrm_steady_state(0.3, 1.0, 0.8, 0.0)?, &LinearIoModel::jrm(0.3, 1.0, 0.8));
    checks::perturb_reference(&mut s);

    if let Some(path) = input {
        let g = load_graph(path)?;
        checks::netlist(&mut s, &g);
        let spec = build(&g)?;
        checks::builder(&mut s, &g, &spec);
        let basis = basis_for(&spec, c)?;
        let r = solve(&spec, &basis, c.levels.unwrap_or(DEFAULT_LEVELS), opts)?;
        checks::spectrum(&mut s, &spec, &BasisSpec { vars: basis_at(&basis, &r) }, &r, opts.tol);
    }

    let mut out = OutDir::create(&c.out, "check", c.paper_units)?;
    out.write_json("check.json", &s.lines)?;
    out.finish()?;
    finish_checks(&s)
}
