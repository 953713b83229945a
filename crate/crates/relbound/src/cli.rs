//! Command-line front end: presets, state-label parsing, spectrum
//! runs, wave-function export and the diagnostics suite.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};

use crate::angular::{build_coupling_table, verify_sum_rules, Side};
use crate::kernel::{build_grid, Mapping, MomentumGrid};
use crate::reference::{dirac_coulomb_energy, dirac_reference_wavefunction};
use crate::solver::{
    assemble, assemble_with, bound_eigenvalues, default_window, normalize, select_state, solve_bound_states,
    NormConvention, QuantumState, RadialSolution, TwoBodySystem,
};
use crate::{Error, Result, ALPHA, M_ELECTRON, M_MUON, M_PROTON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    Ev,
    Kev,
}

impl EnergyUnit {
    pub fn label(self) -> &'static str {
        match self {
            EnergyUnit::Ev => "eV",
            EnergyUnit::Kev => "keV",
        }
    }

    /// Factor converting `m1` units to this unit for the given system.
    pub fn per_m1(self, system: &TwoBodySystem) -> f64 {
        match self {
            EnergyUnit::Ev => system.ev_per_m1(),
            EnergyUnit::Kev => system.ev_per_m1() / 1e3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "relbound", version, about = "Relativistic two-body Coulomb bound states in momentum space")]
pub struct Cli {
    /// Flat key=value config file; flags below override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset: hydrogen-e, hydrogen-mu, positronium, e-mu, mu-mu.
    #[arg(long)]
    pub system: Option<String>,
    /// First constituent mass in MeV (overrides the preset).
    #[arg(long)]
    pub m1: Option<f64>,
    /// Second constituent mass in MeV.
    #[arg(long)]
    pub m2: Option<f64>,
    /// Coulomb coupling constant.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated state labels, e.g. 1S0F0,2S0F0.
    #[arg(long)]
    pub states: Option<String>,
    /// Comma-separated grid sizes, e.g. 800,1000,1200.
    #[arg(long)]
    pub grids: Option<String>,
    /// Grid mapping scale in units of m1 (default: alpha * mu / m1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid mapping: rational or tangent.
    #[arg(long)]
    pub mapping: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Attach analytic Dirac-Coulomb reference energies.
    #[arg(long)]
    pub compare_dirac: bool,
    /// Re-solve with m1 and m2 interchanged and report the spread.
    #[arg(long)]
    pub swap_masses: bool,
    /// Re-solve without the S(p')-weighted integral terms.
    #[arg(long)]
    pub drop_small_terms: bool,
    /// Run the diagnostics suite instead of a spectrum.
    #[arg(long)]
    pub diagnostics: bool,
    /// Export the wave function of this state label as CSV.
    #[arg(long)]
    pub export_wavefunction: Option<String>,
    /// Print the sigma.p-hat coupling table for this F (both sides).
    #[arg(long)]
    pub dump_coupling_table: Option<i32>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: TwoBodySystem,
    pub states: Vec<QuantumState>,
    pub state_labels: Vec<String>,
    pub grids: Vec<usize>,
    pub lambda: Option<f64>,
    pub mapping: String,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub unit: EnergyUnit,
    pub compare_dirac: bool,
    pub swap_masses: bool,
    pub drop_small_terms: bool,
}

pub fn preset(name: &str) -> Result<(TwoBodySystem, EnergyUnit)> {
    match name {
        "hydrogen-e" => Ok((TwoBodySystem::new(M_ELECTRON, M_PROTON, ALPHA, "electronic hydrogen")?, EnergyUnit::Ev)),
        "hydrogen-mu" => Ok((TwoBodySystem::new(M_MUON, M_PROTON, ALPHA, "muonic hydrogen")?, EnergyUnit::Kev)),
        "positronium" => Ok((TwoBodySystem::new(M_ELECTRON, M_ELECTRON, ALPHA, "positronium")?, EnergyUnit::Ev)),
        "e-mu" => Ok((TwoBodySystem::new(M_ELECTRON, M_MUON, ALPHA, "electron-antimuon")?, EnergyUnit::Ev)),
        "mu-mu" => Ok((TwoBodySystem::new(M_MUON, M_MUON, ALPHA, "muon-antimuon")?, EnergyUnit::Kev)),
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected hydrogen-e, hydrogen-mu, positronium, e-mu, mu-mu)"
        ))),
    }
}

/// Parse a state label of the form `<n><L><S>F<F>`, e.g. `1S0F0` or
/// `2P1F1`. `L` is a spectroscopic letter from {S, P, D, G, H, I} (the
/// letter F is reserved for the total-F separator), or `X<digit>` for
/// an explicit numeric L.
pub fn parse_state_label(text: &str) -> Result<QuantumState> {
    let bad = |why: &str| Error::Config(format!("bad state label '{text}': {why}"));
    let mut chars = text.chars().peekable();
    let mut n_str = String::new();
    while let Some(c) = chars.peek().copied() {
        if c.is_ascii_digit() {
            n_str.push(c);
            chars.next();
        } else {
            break;
        }
    }
    if n_str.is_empty() {
        return Err(bad("missing principal quantum number"));
    }
    let n: u32 = n_str.parse().map_err(|_| bad("unparsable n"))?;
    let l = match chars.next() {
        Some('S') => 0,
        Some('P') => 1,
        Some('D') => 2,
        Some('G') => 4,
        Some('H') => 5,
        Some('I') => 6,
        Some('X') => {
            let d = chars.next().ok_or_else(|| bad("X must be followed by a digit"))?;
            d.to_digit(10).ok_or_else(|| bad("X must be followed by a digit"))? as i32
        }
        _ => return Err(bad("expected an orbital letter (S, P, D, G, H, I or X<digit>)")),
    };
    let s = chars
        .next()
        .and_then(|c| c.to_digit(10))
        .ok_or_else(|| bad("expected the spin digit after the orbital letter"))? as i32;
    if chars.next() != Some('F') {
        return Err(bad("expected 'F' before the total angular momentum"));
    }
    let f_str: String = chars.collect();
    let f: i32 = f_str.parse().map_err(|_| bad("unparsable F"))?;
    QuantumState::new(n, f, l, s, f).map_err(|e| bad(&e.to_string()))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("key '{key}': expected a boolean, got '{v}'"))),
    }
}

/// Read a flat `key = value` config file (`#` comments allowed).
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected key=value", path.display(), lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Merge config file and flag overrides into a resolved [`RunConfig`].
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => HashMap::new(),
    };
    let get = |k: &str| file.get(k).map(String::as_str);

    let system_name = cli.system.clone().or_else(|| get("system").map(str::to_string));
    let (mut system, mut unit) = match &system_name {
        Some(name) => preset(name)?,
        None => (TwoBodySystem::new(M_ELECTRON, M_PROTON, ALPHA, "custom")?, EnergyUnit::Ev),
    };

    let m1 = cli.m1.or(get("m1").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad m1".into()))?);
    let m2 = cli.m2.or(get("m2").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad m2".into()))?);
    let alpha =
        cli.alpha.or(get("alpha").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad alpha".into()))?);
    if m1.is_some() || m2.is_some() || alpha.is_some() {
        let label = system_name.clone().unwrap_or_else(|| "custom".into());
        system = TwoBodySystem::new(
            m1.unwrap_or(system.m1()),
            m2.unwrap_or(system.m2()),
            alpha.unwrap_or(system.alpha()),
            label,
        )?;
        // explicit masses: pick the unit from the lighter constituent
        unit = if system.m1().min(system.m2()) > 10.0 * M_ELECTRON { EnergyUnit::Kev } else { EnergyUnit::Ev };
        if system_name.is_none() && m1.is_none() {
            return Err(Error::Config("explicit systems need m1 (or use --system)".into()));
        }
    }

    let states_text = cli
        .states
        .clone()
        .or_else(|| get("states").map(str::to_string))
        .unwrap_or_else(|| "1S0F0".to_string());
    let state_labels: Vec<String> = states_text.split(',').map(|s| s.trim().to_string()).collect();
    let states = state_labels.iter().map(|s| parse_state_label(s)).collect::<Result<Vec<_>>>()?;
    if states.is_empty() {
        return Err(Error::Config("need at least one state".into()));
    }

    let grids_text = cli.grids.clone().or_else(|| get("grids").map(str::to_string)).unwrap_or_else(|| "400".into());
    let grids: Vec<usize> = grids_text
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("bad grid size '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    if grids.iter().any(|&n| n < 8) {
        return Err(Error::Config("grid sizes must be at least 8".into()));
    }

    let lambda =
        cli.lambda.or(get("lambda").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad lambda".into()))?);
    let mapping = cli.mapping.clone().or_else(|| get("mapping").map(str::to_string)).unwrap_or_else(|| "rational".into());
    if mapping != "rational" && mapping != "tangent" {
        return Err(Error::Config(format!("unknown mapping '{mapping}' (rational or tangent)")));
    }

    let format = cli.format.unwrap_or(match get("format") {
        Some("json") => OutputFormat::Json,
        Some("csv") => OutputFormat::Csv,
        _ => OutputFormat::Table,
    });
    let out = cli.out.clone().or_else(|| get("out").map(PathBuf::from));
    let compare_dirac = cli.compare_dirac || get("compare_dirac").map(|v| parse_bool("compare_dirac", v)).transpose()?.unwrap_or(false);
    let swap_masses = cli.swap_masses || get("swap_masses").map(|v| parse_bool("swap_masses", v)).transpose()?.unwrap_or(false);
    let drop_small_terms =
        cli.drop_small_terms || get("drop_small_terms").map(|v| parse_bool("drop_small_terms", v)).transpose()?.unwrap_or(false);

    Ok(RunConfig {
        system,
        states,
        state_labels,
        grids,
        lambda,
        mapping,
        format,
        out,
        unit,
        compare_dirac,
        swap_masses,
        drop_small_terms,
    })
}

impl RunConfig {
    pub fn grid(&self, n: usize) -> Result<Arc<MomentumGrid>> {
        let scale = self.lambda.unwrap_or_else(|| self.system.bohr_momentum());
        let mapping = match self.mapping.as_str() {
            "tangent" => Mapping::Tangent { scale },
            _ => Mapping::Rational { scale },
        };
        Ok(Arc::new(build_grid(n, mapping)?))
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Provenance {
    pub version: String,
    pub system: String,
    pub m1_mev: f64,
    pub m2_mev: f64,
    pub alpha: f64,
    pub grids: Vec<usize>,
    pub mapping: String,
    pub lambda_over_m1: f64,
    pub unit: String,
}

impl Provenance {
    fn from_config(config: &RunConfig) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            system: config.system.label.clone(),
            m1_mev: config.system.m1(),
            m2_mev: config.system.m2(),
            alpha: config.system.alpha(),
            grids: config.grids.clone(),
            mapping: config.mapping.clone(),
            lambda_over_m1: config.lambda.unwrap_or_else(|| config.system.bohr_momentum()),
            unit: "energies in the stated unit per record".into(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct StateRecord {
    pub label: String,
    pub unit: String,
    pub epsilon: f64,
    /// Max pairwise spread across grid sizes; None for a single grid.
    pub sigma: Option<f64>,
    pub dirac: Vec<(String, f64)>,
    pub delta_vs_dirac: Option<f64>,
    pub epsilon_swapped: Option<f64>,
    pub epsilon_dropped: Option<f64>,
    pub residual: f64,
    pub node_count: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectrumReport {
    pub records: Vec<StateRecord>,
    pub provenance: Provenance,
}

/// Per-run cache of solved eigenvalue ladders, keyed by channel,
/// grid size and operator variant. States differing only in `n` share
/// one eigendecomposition.
struct SolveCache {
    ladders: HashMap<(String, i32, i32, i32, usize, bool), Vec<f64>>,
}

impl SolveCache {
    fn new() -> Self {
        Self { ladders: HashMap::new() }
    }

    fn ladder(
        &mut self,
        config: &RunConfig,
        system: &TwoBodySystem,
        state: &QuantumState,
        n_grid: usize,
        small_terms: bool,
    ) -> Result<Vec<f64>> {
        let key = (system.label.clone(), state.f, state.l, state.s, n_grid, small_terms);
        if let Some(v) = self.ladders.get(&key) {
            return Ok(v.clone());
        }
        let scale = config.lambda.unwrap_or_else(|| system.bohr_momentum());
        let mapping = match config.mapping.as_str() {
            "tangent" => Mapping::Tangent { scale },
            _ => Mapping::Rational { scale },
        };
        let grid = Arc::new(build_grid(n_grid, mapping)?);
        let op = assemble_with(system, state, &grid, small_terms)?;
        let v = bound_eigenvalues(&op, default_window())?;
        self.ladders.insert(key, v.clone());
        Ok(v)
    }

    fn energy(
        &mut self,
        config: &RunConfig,
        system: &TwoBodySystem,
        state: &QuantumState,
        n_grid: usize,
        small_terms: bool,
    ) -> Result<f64> {
        let ladder = self.ladder(config, system, state, n_grid, small_terms)?;
        ladder
            .get(state.radial_nodes())
            .copied()
            .ok_or_else(|| Error::NotFound(format!("n={} not resolved (only {} levels)", state.n, ladder.len())))
    }
}

/// Solve every configured state at every grid size and build the
/// report. Energies come from the largest grid.
pub fn run_spectrum(config: &RunConfig) -> Result<SpectrumReport> {
    let mut cache = SolveCache::new();
    let to_unit = config.unit.per_m1(&config.system);
    let n_max = *config.grids.iter().max().unwrap();
    let mut records = Vec::new();
    for (state, label) in config.states.iter().zip(&config.state_labels) {
        let mut energies = Vec::new();
        for &n_grid in &config.grids {
            energies.push(cache.energy(config, &config.system, state, n_grid, true)?);
        }
        let eps_best = cache.energy(config, &config.system, state, n_max, true)?;
        let sigma = if config.grids.len() > 1 {
            let mut s = 0.0f64;
            for i in 0..energies.len() {
                for j in (i + 1)..energies.len() {
                    s = s.max((energies[i] - energies[j]).abs());
                }
            }
            Some(s * to_unit)
        } else {
            None
        };

        // residual and node count from the eigenvector at the largest grid
        let grid = config.grid(n_max)?;
        let op = assemble(&config.system, state, &grid)?;
        let sols = solve_bound_states(&op, default_window())?;
        let sol = select_state(&sols, state.n, state.l)?;

        let mut dirac = Vec::new();
        if config.compare_dirac {
            // reduced mass expressed in the report unit
            let mu_unit = config.system.reduced_mass() * 1e6
                / match config.unit {
                    EnergyUnit::Ev => 1.0,
                    EnergyUnit::Kev => 1e3,
                };
            if state.l == 0 {
                dirac.push(("j=1/2".to_string(), dirac_coulomb_energy(state.n, 1, mu_unit, config.system.alpha())?));
            } else {
                for twice_j in [2 * state.l - 1, 2 * state.l + 1] {
                    if (twice_j + 1) / 2 <= state.n as i32 {
                        dirac.push((
                            format!("j={twice_j}/2"),
                            dirac_coulomb_energy(state.n, twice_j, mu_unit, config.system.alpha())?,
                        ));
                    }
                }
            }
        }
        let delta_vs_dirac = dirac.first().map(|(_, d)| eps_best * to_unit - d);

        let epsilon_swapped = if config.swap_masses {
            let swapped = config.system.swapped();
            // same absolute unit: the swapped system is nondimensionalized
            // by its own m1 = our m2
            let e = cache.energy(config, &swapped, state, n_max, true)?;
            Some(e * config.unit.per_m1(&swapped))
        } else {
            None
        };
        let epsilon_dropped = if config.drop_small_terms {
            Some(cache.energy(config, &config.system, state, n_max, false)? * to_unit)
        } else {
            None
        };

        records.push(StateRecord {
            label: label.clone(),
            unit: config.unit.label().to_string(),
            epsilon: eps_best * to_unit,
            sigma,
            dirac,
            delta_vs_dirac,
            epsilon_swapped,
            epsilon_dropped,
            residual: sol.residual,
            node_count: sol.node_count,
        });
    }
    Ok(SpectrumReport { records, provenance: Provenance::from_config(config) })
}

pub fn format_report(report: &SpectrumReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(report).map_err(|e| Error::Solver(format!("json encoding failed: {e}")))
        }
        OutputFormat::Csv => {
            let mut s = String::new();
            writeln!(s, "label,unit,epsilon,sigma,dirac,delta_vs_dirac,epsilon_swapped,epsilon_dropped,residual,node_count").unwrap();
            for r in &report.records {
                let opt = |o: Option<f64>| o.map(|v| format!("{v:.17e}")).unwrap_or_default();
                writeln!(
                    s,
                    "{},{},{:.17e},{},{},{},{},{},{:.3e},{}",
                    r.label,
                    r.unit,
                    r.epsilon,
                    opt(r.sigma),
                    opt(r.dirac.first().map(|(_, v)| *v)),
                    opt(r.delta_vs_dirac),
                    opt(r.epsilon_swapped),
                    opt(r.epsilon_dropped),
                    r.residual,
                    r.node_count
                )
                .unwrap();
            }
            Ok(s)
        }
        OutputFormat::Table => {
            let p = &report.provenance;
            let mut s = String::new();
            writeln!(s, "# relbound {} | {} | m1={} MeV m2={} MeV alpha={}", p.version, p.system, p.m1_mev, p.m2_mev, p.alpha).unwrap();
            writeln!(s, "# grids={:?} mapping={} lambda/m1={:.6e}", p.grids, p.mapping, p.lambda_over_m1).unwrap();
            writeln!(s, "{:<8} {:>16} {:>12} {:>16} {:>10} {:>6}", "state", "epsilon", "sigma", "dirac(j=L+-1/2)", "residual", "nodes").unwrap();
            for r in &report.records {
                let sigma = r.sigma.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
                let dirac = if r.dirac.is_empty() {
                    "-".to_string()
                } else {
                    r.dirac.iter().map(|(_, v)| format!("{v:.7}")).collect::<Vec<_>>().join("/")
                };
                writeln!(
                    s,
                    "{:<8} {:>16.9} {:>12} {:>16} {:>10.2e} {:>6}    [{}]",
                    r.label, r.epsilon, sigma, dirac, r.residual, r.node_count, r.unit
                )
                .unwrap();
                if let Some(v) = r.epsilon_swapped {
                    writeln!(s, "{:<8} {:>16.9}    (masses interchanged)", "", v).unwrap();
                }
                if let Some(v) = r.epsilon_dropped {
                    writeln!(s, "{:<8} {:>16.9}    (S(p') terms dropped)", "", v).unwrap();
                }
            }
            Ok(s)
        }
    }
}

/// Solve one state and write the wave function beside the Dirac-limit
/// reference (reduced mass, same grid, same normalization) as CSV.
pub fn export_wavefunction(config: &RunConfig, state: &QuantumState, path: &Path) -> Result<()> {
    let n_max = *config.grids.iter().max().unwrap();
    let grid = config.grid(n_max)?;
    let op = assemble(&config.system, state, &grid)?;
    let sols = solve_bound_states(&op, default_window())?;
    let sol = normalize(&select_state(&sols, state.n, state.l)?, NormConvention::DiscreteL2)?;
    let mu = config.system.reduced_mass() / config.system.m1();
    let dirac = dirac_reference_wavefunction(mu, state, config.system.alpha(), &grid)?;
    let text = wavefunction_csv(config, state, &sol, &dirac);
    std::fs::write(path, text)?;
    Ok(())
}

pub fn wavefunction_csv(config: &RunConfig, state: &QuantumState, sol: &RadialSolution, dirac: &RadialSolution) -> String {
    let p = Provenance::from_config(config);
    let mut s = String::new();
    writeln!(s, "# relbound {} wave function export", p.version).unwrap();
    writeln!(s, "# system: {} (m1={} MeV, m2={} MeV, alpha={})", p.system, p.m1_mev, p.m2_mev, p.alpha).unwrap();
    writeln!(s, "# state: n={} F={} L={} S={} mF={}", state.n, state.f, state.l, state.s, state.m_f).unwrap();
    writeln!(s, "# grid: N={} mapping={} lambda/m1={:.17e}", sol.grid.len(), p.mapping, p.lambda_over_m1).unwrap();
    writeln!(s, "# normalization: discrete L2; dirac column: same grid, reduced mass").unwrap();
    writeln!(s, "p_over_m1,g,h,g_dirac,g_minus_g_dirac").unwrap();
    for i in 0..sol.grid.len() {
        writeln!(
            s,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            sol.grid.nodes()[i],
            sol.g[i],
            sol.h[i],
            dirac.g[i],
            sol.g[i] - dirac.g[i]
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagnosticEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagnosticsReport {
    pub entries: Vec<DiagnosticEntry>,
    pub provenance: Provenance,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Mass interchange, dropped small terms, the large-m2 Dirac limit,
/// and the coupling-table sum rules, aggregated pass/fail.
pub fn run_diagnostics(config: &RunConfig) -> Result<DiagnosticsReport> {
    let mut cache = SolveCache::new();
    let mut entries = Vec::new();
    let state = config.states[0];
    let n_max = *config.grids.iter().max().unwrap();
    let to_unit = config.unit.per_m1(&config.system);

    // grid-refinement sigma for the first state
    let mut energies = Vec::new();
    for &n in &config.grids {
        energies.push(cache.energy(config, &config.system, &state, n, true)?);
    }
    let mut sigma = 0.0f64;
    for i in 0..energies.len() {
        for j in (i + 1)..energies.len() {
            sigma = sigma.max((energies[i] - energies[j]).abs());
        }
    }
    let eps = *energies.last().unwrap();
    let sigma_floor = sigma.max(1e-12 * eps.abs());

    // 1. mass interchange
    let swapped = config.system.swapped();
    let eps_swapped = cache.energy(config, &swapped, &state, n_max, true)?;
    let delta_abs = (eps * config.system.ev_per_m1() - eps_swapped * swapped.ev_per_m1()).abs();
    let sigma_ev = sigma_floor * config.system.ev_per_m1();
    entries.push(DiagnosticEntry {
        name: "mass_interchange".into(),
        passed: delta_abs <= 2.0 * sigma_ev,
        detail: format!("|delta| = {:.3e} eV vs 2 sigma = {:.3e} eV", delta_abs, 2.0 * sigma_ev),
    });

    // 2. dropped small terms
    let eps_dropped = cache.energy(config, &config.system, &state, n_max, false)?;
    let delta_drop = (eps - eps_dropped).abs();
    entries.push(DiagnosticEntry {
        name: "drop_small_terms".into(),
        passed: delta_drop <= sigma_floor.max(config.system.alpha().powi(2) * eps.abs()),
        detail: format!(
            "|delta| = {:.3e} {} vs sigma = {:.3e} {}",
            delta_drop * to_unit,
            config.unit.label(),
            sigma_floor * to_unit,
            config.unit.label()
        ),
    });

    // 3. large-m2 Dirac limit
    let heavy = TwoBodySystem::new(config.system.m1(), 1e6 * config.system.m1(), config.system.alpha(), "dirac-limit probe")?;
    let ground = QuantumState::new(1, 0, 0, 0, 0)?;
    let n_limit = n_max.min(800);
    let eps_heavy = {
        let scale = heavy.bohr_momentum();
        let grid = Arc::new(build_grid(n_limit, Mapping::Rational { scale })?);
        let op = assemble(&heavy, &ground, &grid)?;
        bound_eigenvalues(&op, default_window())?
            .first()
            .copied()
            .ok_or_else(|| Error::NotFound("no Dirac-limit ground state".into()))?
    };
    let exact = dirac_coulomb_energy(1, 1, 1.0, config.system.alpha())?;
    let rel = ((eps_heavy - exact) / exact).abs();
    entries.push(DiagnosticEntry {
        name: "dirac_limit".into(),
        passed: rel <= 1e-6,
        detail: format!("m2 = 1e6 m1 ground state off closed form by {rel:.3e} relative"),
    });

    // 4. coupling-table sum rules, F <= 3
    let mut worst = 0.0f64;
    for f in 0..=3 {
        for m_f in -f..=f {
            for side in [Side::Left, Side::Right] {
                let table = build_coupling_table(f, m_f, side)?;
                let report = verify_sum_rules(&table)?;
                worst = worst.max(report.max_deviation());
            }
        }
    }
    entries.push(DiagnosticEntry {
        name: "coupling_sum_rules".into(),
        passed: worst <= 1e-14,
        detail: format!("max sum-rule deviation {worst:.3e} over F <= 3, both sides"),
    });

    Ok(DiagnosticsReport { entries, provenance: Provenance::from_config(config) })
}

pub fn format_diagnostics(report: &DiagnosticsReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(report).map_err(|e| Error::Solver(format!("json encoding failed: {e}")))
        }
        _ => {
            let mut s = String::new();
            for e in &report.entries {
                writeln!(s, "{:<20} {}  {}", e.name, if e.passed { "pass" } else { "FAIL" }, e.detail).unwrap();
            }
            Ok(s)
        }
    }
}

/// Dump the coupling tables for one F, both sides, all channels.
pub fn dump_coupling_tables(f: i32) -> Result<String> {
    let mut s = String::new();
    for side in [Side::Left, Side::Right] {
        for m_f in -f..=f {
            let table = build_coupling_table(f, m_f, side)?;
            s.push_str(&table.dump());
        }
    }
    Ok(s)
}

/// Run the CLI to completion; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run_inner(cli: &Cli) -> Result<i32> {
    if let Some(f) = cli.dump_coupling_table {
        let text = dump_coupling_tables(f)?;
        emit(cli.out.as_deref(), &text)?;
        return Ok(0);
    }
    let config = resolve_config(cli)?;
    if cli.diagnostics {
        let report = run_diagnostics(&config)?;
        let text = format_diagnostics(&report, config.format)?;
        emit(config.out.as_deref(), &text)?;
        return Ok(if report.all_passed() { 0 } else { 3 });
    }
    if let Some(label) = &cli.export_wavefunction {
        let state = parse_state_label(label)?;
        let path = config
            .out
            .clone()
            .ok_or_else(|| Error::Config("--export-wavefunction needs --out".into()))?;
        export_wavefunction(&config, &state, &path)?;
        return Ok(0);
    }
    let report = run_spectrum(&config)?;
    let text = format_report(&report, config.format)?;
    emit(config.out.as_deref(), &text)?;
    Ok(0)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
