//! Preset Riemann experiments, batch comparison runners, CSV emission and
//! grid-refinement studies.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::closure::CoefficientProfile;
use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::parallel::map_tasks;
use crate::params::{ModelKind, ModelParameters};
use crate::riemann::{sample_on_grid, solve_riemann, WaveStructure};
use crate::solver::{run_macro, BoundaryMode, MacroRun};
use crate::state::MacroState;

/// The four preset Riemann experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

impl PresetId {
    pub const ALL: [PresetId; 4] = [PresetId::Ex1, PresetId::Ex2, PresetId::Ex3, PresetId::Ex4];

    pub fn label(&self) -> &'static str {
        match self {
            PresetId::Ex1 => "ex1",
            PresetId::Ex2 => "ex2",
            PresetId::Ex3 => "ex3",
            PresetId::Ex4 => "ex4",
        }
    }
}

impl std::str::FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(PresetId::Ex1),
            "ex2" => Ok(PresetId::Ex2),
            "ex3" => Ok(PresetId::Ex3),
            "ex4" => Ok(PresetId::Ex4),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl std::fmt::Display for PresetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Riemann data, horizon and default model list of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub id: PresetId,
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    pub x0: f64,
    pub t_end: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    /// The two mesh sizes every preset is run at.
    pub grid_sizes: [f64; 2],
    pub models: Vec<ModelKind>,
}

/// The preset table. The shock case runs the Aw-Rascle model in
/// conservative variables; the others use momentum variables.
pub fn preset(id: PresetId) -> ExperimentPreset {
    let (rho_l, u_l, rho_r, u_r, x0, t_end, models) = match id {
        PresetId::Ex1 => (
            0.5,
            1.0,
            0.5,
            0.0,
            0.5,
            0.2,
            vec![ModelKind::ConservativeAwRascle, ModelKind::HamiltonJacobi],
        ),
        PresetId::Ex2 => (
            0.0,
            1.0,
            0.5,
            1.0,
            0.5,
            0.2,
            vec![ModelKind::AwRascleType, ModelKind::HamiltonJacobi],
        ),
        PresetId::Ex3 => (
            0.5,
            0.0,
            0.9,
            0.5,
            0.5,
            0.4,
            vec![ModelKind::AwRascleType, ModelKind::HamiltonJacobi],
        ),
        PresetId::Ex4 => (
            0.5,
            0.0,
            0.1,
            1.0,
            0.25,
            0.5,
            vec![ModelKind::AwRascleType, ModelKind::HamiltonJacobi],
        ),
    };
    ExperimentPreset {
        id,
        rho_l,
        u_l,
        rho_r,
        u_r,
        x0,
        t_end,
        x_lo: 0.0,
        x_hi: 1.0,
        grid_sizes: [0.01, 0.001],
        models,
    }
}

impl ExperimentPreset {
    /// Build the run configuration for one (model, dx) pair.
    pub fn config(
        &self,
        model: ModelKind,
        dx: f64,
        params: &ModelParameters,
        cfl: f64,
    ) -> SimulationConfig {
        let n = ((self.x_hi - self.x_lo) / dx).round().max(10.0) as usize;
        let mut c = SimulationConfig::riemann(
            model,
            params.clone(),
            self.rho_l,
            self.u_l,
            self.rho_r,
            self.u_r,
            self.x0,
            n,
            self.t_end,
        );
        c.x_lo = self.x_lo;
        c.x_hi = self.x_hi;
        c.cfl = cfl;
        c
    }

    /// Exact solution of the Aw-Rascle model for this data.
    pub fn oracle(&self, params: &ModelParameters) -> Result<WaveStructure> {
        solve_riemann((self.rho_l, self.u_l), (self.rho_r, self.u_r), params)
    }
}

/// One row of the CSV schema `x,rho,u,model,dx,t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub x: f64,
    pub rho: f64,
    pub u: f64,
    pub model: String,
    pub dx: f64,
    pub t: f64,
}

/// Rows for every cell of a state, labelled with a model name.
pub fn rows_from_state(label: &str, state: &MacroState, params: &ModelParameters) -> Vec<CsvRow> {
    let (rho, u) = state.to_primitive(params);
    (0..state.n_cells())
        .map(|i| CsvRow {
            x: state.cell_center(i),
            rho: rho[i],
            u: u[i],
            model: label.to_string(),
            dx: state.dx,
            t: state.t,
        })
        .collect()
}

/// Rows from raw (rho, u) fields on a uniform grid.
pub fn rows_from_fields(
    label: &str,
    x_lo: f64,
    dx: f64,
    t: f64,
    rho: &[f64],
    u: &[f64],
) -> Vec<CsvRow> {
    rho.iter()
        .zip(u)
        .enumerate()
        .map(|(i, (&r, &v))| CsvRow {
            x: x_lo + (i as f64 + 0.5) * dx,
            rho: r,
            u: v,
            model: label.to_string(),
            dx,
            t,
        })
        .collect()
}

/// Write rows as CSV. Floats are printed with 17 significant decimal
/// digits, which round-trips f64 exactly; an empty row list produces a
/// header-only file.
pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let fail = |e: std::io::Error| Error::io(path, e);
    writeln!(out, "x,rho,u,model,dx,t").map_err(fail)?;
    for row in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
            row.x, row.rho, row.u, row.model, row.dx, row.t
        )
        .map_err(fail)?;
    }
    out.flush().map_err(fail)
}

/// Read back a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "x,rho,u,model,dx,t" {
                return Err(Error::domain(
                    "read_csv",
                    format!("unexpected header `{line}`"),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::domain(
                "read_csv",
                format!("line {}: expected 6 fields, got {}", idx + 1, fields.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                Error::domain("read_csv", format!("line {}: bad number `{s}`", idx + 1))
            })
        };
        rows.push(CsvRow {
            x: num(fields[0])?,
            rho: num(fields[1])?,
            u: num(fields[2])?,
            model: fields[3].to_string(),
            dx: num(fields[4])?,
            t: num(fields[5])?,
        });
    }
    Ok(rows)
}

/// Restrict a fine cell-average field onto a coarser grid whose size
/// divides the fine one.
pub fn restrict(fine: &[f64], n_coarse: usize) -> Option<Vec<f64>> {
    if n_coarse == 0 || fine.len() % n_coarse != 0 {
        return None;
    }
    let k = fine.len() / n_coarse;
    Some(
        (0..n_coarse)
            .map(|j| fine[j * k..(j + 1) * k].iter().sum::<f64>() / k as f64)
            .collect(),
    )
}

fn l1(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Result of a single (model, dx) run within a comparison.
#[derive(Clone, Debug)]
pub struct RunEntry {
    pub model: ModelKind,
    pub dx: f64,
    pub run: MacroRun,
    /// L1 density distance to the exact solution, for the Aw-Rascle models.
    pub oracle_l1: Option<f64>,
    pub csv_path: Option<PathBuf>,
}

impl RunEntry {
    pub fn final_state(&self) -> &MacroState {
        self.run
            .outputs
            .last()
            .expect("run has at least one output")
    }
}

/// Pairwise distance between two runs, evaluated on the coarser grid.
#[derive(Clone, Debug)]
pub struct PairDistance {
    pub a: usize,
    pub b: usize,
    pub l1_rho: f64,
    pub linf_rho: f64,
    pub l1_u: f64,
    pub linf_u: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub preset: ExperimentPreset,
    pub entries: Vec<RunEntry>,
    pub pairs: Vec<PairDistance>,
}

/// Run every (model, dx) combination of a preset, compare all pairs and the
/// oracle, and optionally write one CSV per run into `out_dir` (named
/// `<preset>_<model>_<dx>.csv`). Runs execute concurrently; outputs and
/// file contents are deterministic.
pub fn run_comparison(
    preset: &ExperimentPreset,
    models: &[ModelKind],
    resolutions: &[f64],
    params: &ModelParameters,
    cfl: f64,
    out_dir: Option<&Path>,
) -> Result<ComparisonReport> {
    let combos: Vec<(ModelKind, f64)> = models
        .iter()
        .flat_map(|&m| resolutions.iter().map(move |&dx| (m, dx)))
        .collect();
    let runs: Vec<Result<MacroRun>> = map_tasks(combos.len(), |i| {
        let (model, dx) = combos[i];
        run_macro(&preset.config(model, dx, params, cfl))
    });

    let oracle = preset.oracle(params)?;
    let mut entries = Vec::with_capacity(combos.len());
    for ((model, dx), run) in combos.iter().zip(runs) {
        let run = run?;
        let state = run.outputs.last().expect("at least one output");
        let oracle_l1 = match model {
            ModelKind::AwRascleType | ModelKind::ConservativeAwRascle => {
                let (rho_star, _) = sample_on_grid(
                    &oracle,
                    preset.x0,
                    state.t,
                    state.x0,
                    state.dx,
                    state.n_cells(),
                );
                let (rho, _) = state.to_primitive(params);
                Some(l1(&rho, &rho_star, state.dx))
            }
            _ => None,
        };
        let csv_path = match out_dir {
            Some(dir) => {
                let path = dir.join(format!("{}_{}_{}.csv", preset.id, model, dx));
                write_csv(&path, &rows_from_state(model.label(), state, params))?;
                Some(path)
            }
            None => None,
        };
        entries.push(RunEntry {
            model: *model,
            dx: *dx,
            run,
            oracle_l1,
            csv_path,
        });
    }

    let mut pairs = Vec::new();
    for a in 0..entries.len() {
        for b in a + 1..entries.len() {
            let sa = entries[a].final_state();
            let sb = entries[b].final_state();
            let (fine, coarse, fa, fb) = if sa.n_cells() >= sb.n_cells() {
                (sa, sb, a, b)
            } else {
                (sb, sa, b, a)
            };
            let (rho_f, u_f) = fine.to_primitive(params);
            let (rho_c, u_c) = coarse.to_primitive(params);
            let (rho_f, u_f) = match (
                restrict(&rho_f, coarse.n_cells()),
                restrict(&u_f, coarse.n_cells()),
            ) {
                (Some(r), Some(u)) => (r, u),
                _ => continue, // incompatible grids
            };
            pairs.push(PairDistance {
                a: fa,
                b: fb,
                l1_rho: l1(&rho_f, &rho_c, coarse.dx),
                linf_rho: linf(&rho_f, &rho_c),
                l1_u: l1(&u_f, &u_c, coarse.dx),
                linf_u: linf(&u_f, &u_c),
            });
        }
    }

    Ok(ComparisonReport {
        preset: preset.clone(),
        entries,
        pairs,
    })
}

/// Grid-refinement self-convergence report.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub ns: Vec<usize>,
    /// Extremum-excluded L1 distances between consecutive levels.
    pub errors: Vec<f64>,
    /// Orders `log2(e_k / e_{k+1})`.
    pub orders: Vec<f64>,
    pub mean_order: Option<f64>,
    /// Fraction of the domain excluded around extrema.
    pub masked_fraction: f64,
}

/// Physical half-width of the exclusion zone around each extremum. The
/// MinMod limiter clips extrema to first order; convergence is measured
/// away from them.
const EXTREMUM_EXCLUSION_RADIUS: f64 = 0.05;

/// Richardson self-convergence study on a periodic unit domain with smooth
/// initial data `x -> (rho, u)`. Runs `levels` grids starting at `base_n`
/// cells, doubling each level, and measures extremum-excluded L1 distances
/// between consecutive levels.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    model: ModelKind,
    params: &ModelParameters,
    profile: CoefficientProfile,
    initial: &(dyn Fn(f64) -> (f64, f64) + Sync),
    base_n: usize,
    levels: usize,
    t_end: f64,
    cfl: f64,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::domain(
            "convergence_study",
            format!("need at least 3 levels, got {levels}"),
        ));
    }
    let scheme = crate::solver::Scheme {
        model,
        params,
        profile,
        boundary: BoundaryMode::Periodic,
        cfl,
    };
    let variable_set = if model.is_conservative() {
        crate::state::VariableSet::ConservativeY
    } else {
        crate::state::VariableSet::Momentum
    };
    let mut ns = Vec::with_capacity(levels);
    let mut finals: Vec<MacroState> = Vec::with_capacity(levels);
    for level in 0..levels {
        let n = base_n << level;
        let dx = 1.0 / n as f64;
        let mut rho = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            let (r, v) = initial((i as f64 + 0.5) * dx);
            rho.push(r);
            u.push(v);
        }
        let mut state = MacroState::from_primitive(0.0, dx, 0.0, variable_set, rho, &u, params)?;
        state.validate(params)?;
        while state.t < t_end - 1e-14 {
            let lambda = scheme.max_wave_speed(&state);
            let dt = if lambda > 1e-300 {
                (cfl * dx / lambda).min(t_end - state.t)
            } else {
                t_end - state.t
            };
            let (next, _) = scheme.step(&state, dt)?;
            state = next;
        }
        state.t = t_end;
        finals.push(state);
        ns.push(n);
    }

    // Extrema located on the finest solution define physical exclusion
    // zones shared by every comparison level.
    let finest = finals.last().unwrap();
    let (rho_f, u_f) = finest.to_primitive(params);
    let mut extrema = Vec::new();
    let nf = finest.n_cells();
    for field in [&rho_f, &u_f] {
        for i in 0..nf {
            let prev = field[(i + nf - 1) % nf];
            let next = field[(i + 1) % nf];
            let here = field[i];
            if (next - here) * (here - prev) <= 0.0 {
                extrema.push(finest.cell_center(i));
            }
        }
    }
    let masked = |x: f64| {
        extrema.iter().any(|&e| {
            let mut d = (x - e).abs();
            d = d.min(1.0 - d); // periodic distance
            d <= EXTREMUM_EXCLUSION_RADIUS
        })
    };

    let mut errors = Vec::new();
    let mut masked_fraction = 0.0;
    for k in 0..levels - 1 {
        let coarse = &finals[k];
        let fine = &finals[k + 1];
        let (rho_c, _) = coarse.to_primitive(params);
        let (rho_fine, _) = fine.to_primitive(params);
        let rho_r = restrict(&rho_fine, coarse.n_cells()).expect("grids are nested");
        let mut err = 0.0;
        let mut kept = 0usize;
        for i in 0..coarse.n_cells() {
            if masked(coarse.cell_center(i)) {
                continue;
            }
            kept += 1;
            err += (rho_r[i] - rho_c[i]).abs();
        }
        masked_fraction = 1.0 - kept as f64 / coarse.n_cells() as f64;
        errors.push(err * coarse.dx);
    }

    let degenerate = errors.iter().all(|&e| e < 1e-13);
    let orders: Vec<f64> = if degenerate {
        Vec::new()
    } else {
        errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    };
    let mean_order = if orders.is_empty() {
        None
    } else {
        Some(orders.iter().sum::<f64>() / orders.len() as f64)
    };
    Ok(ConvergenceReport {
        ns,
        errors,
        orders,
        mean_order,
        masked_fraction,
    })
}
