//! Scenario execution: one validated config in, one table out.
//!
//! Sweeps fan the base mode out over a worker pool; each worker writes into
//! its own result slot, and assembly walks the slots in input order, so the
//! emitted bytes never depend on the worker count. The first failing value
//! (in input order) truncates the table there and is reported as an abort
//! record alongside the partial output.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use defosc_core::{
    integrate, steady_nullspace, steady_product, thermo, transition_rates, Bath, Bath64, Beta,
    Deformation, Deformation64, DensityMatrix, DensityMatrix64, Generator, InitialState, Mode,
    Spectrum, Table as CoreTable,
};
use num_complex::Complex;

use crate::config::{
    BathKind, BetaVal, ComplexTable, DeformSpec, InitSpec, ModeKind, RealTable, Scenario,
    SweepParam,
};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

pub fn column_names(mode: ModeKind) -> &'static [&'static str] {
    match mode {
        ModeKind::Spectrum => &["n", "F", "f", "E", "Omega"],
        ModeKind::Evolve => &[
            "t",
            "mean_N",
            "mean_a_re",
            "mean_a_im",
            "mean_Omega_a_re",
            "mean_Omega_a_im",
            "energy",
            "trace_err",
            "min_eig",
        ],
        ModeKind::Steady => &["n", "P_product", "P_nullspace", "balance_residual"],
        ModeKind::Thermo => {
            &["beta", "tau", "Z_q", "Z_plus_b_tau2", "b", "E_closed", "E_series", "tail_bound"]
        }
    }
}

pub fn run_mode(sc: &Scenario) -> CliResult<Table> {
    match sc.mode {
        ModeKind::Spectrum => run_spectrum(sc),
        ModeKind::Evolve => run_evolve(sc),
        ModeKind::Steady => run_steady(sc),
        ModeKind::Thermo => run_thermo(sc),
    }
}

fn deformation_of(sc: &Scenario) -> CliResult<Deformation64> {
    match &sc.deformation {
        DeformSpec::Identity => Ok(Deformation::identity()),
        DeformSpec::Q { tau } => {
            Deformation::q(*tau).map_err(|e| CliError::at_field(e, "deformation.tau"))
        }
        DeformSpec::Custom { factors } => Deformation::custom(factors.clone())
            .map_err(|e| CliError::at_field(e, "deformation.factors")),
    }
}

fn mode_of(sc: &Scenario) -> CliResult<defosc_core::Mode64> {
    Mode::new(sc.omega, sc.dim).map_err(CliError::from)
}

fn beta_to_core(beta: BetaVal) -> CliResult<Beta<f64>> {
    match beta {
        BetaVal::Infinite => Ok(Beta::Infinite),
        BetaVal::Finite(v) => Beta::finite(v).map_err(|e| CliError::at_field(e, "beta")),
    }
}

fn complex_table(
    spec: &ComplexTable,
    need: usize,
    field: &str,
) -> CliResult<CoreTable<Complex<f64>>> {
    match spec {
        ComplexTable::Constant(re, im) => Ok(CoreTable::Constant(Complex::new(*re, *im))),
        ComplexTable::PerLevel(entries) => {
            if entries.len() < need {
                return Err(CliError::config(
                    field,
                    format!("per-level table needs at least dim - 1 = {need} entries, got {}", entries.len()),
                ));
            }
            Ok(CoreTable::PerLevel(entries.iter().map(|(re, im)| Complex::new(*re, *im)).collect()))
        }
    }
}

fn real_table(spec: &RealTable, need: usize, field: &str) -> CliResult<CoreTable<f64>> {
    match spec {
        RealTable::Constant(v) => Ok(CoreTable::Constant(*v)),
        RealTable::PerLevel(values) => {
            if values.len() < need {
                return Err(CliError::config(
                    field,
                    format!("per-level table needs at least dim - 1 = {need} entries, got {}", values.len()),
                ));
            }
            Ok(CoreTable::PerLevel(values.clone()))
        }
    }
}

fn bath_of(sc: &Scenario) -> CliResult<Bath64> {
    let spec = sc.bath.as_ref().expect("bath validated for this mode");
    match &spec.kind {
        BathKind::Thermal { beta } => Bath::thermal(spec.lambda, beta_to_core(*beta)?)
            .map_err(|e| CliError::at_field(e, "beta")),
        BathKind::Squeezed { nbar, m_re, m_im } => {
            Bath::squeezed(spec.lambda, *nbar, Complex::new(*m_re, *m_im))
                .map_err(|e| CliError::at_field(e, "bath.nbar"))
        }
        BathKind::Custom { d_plus, d_minus, d_pq } => {
            let need = sc.dim - 1;
            let d_plus = complex_table(d_plus, need, "bath.d_plus_re")?;
            let d_minus = complex_table(d_minus, need, "bath.d_minus_re")?;
            let d_pq = real_table(d_pq, need, "bath.d_pq")?;
            Bath::custom(spec.lambda, d_plus, d_minus, d_pq).map_err(CliError::from)
        }
    }
}

fn load_state_file(path: &Path, dim: usize) -> CliResult<DensityMatrix64> {
    let field = "initial_state.path";
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(field, format!("cannot read {}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(field, format!("invalid state file: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::config(field, "state file must be a JSON object"))?;
    let file_dim = obj
        .get("dim")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| CliError::config(field, "state file needs an integer \"dim\""))?
        as usize;
    if file_dim != dim {
        return Err(CliError::config(
            field,
            format!("state file dimension {file_dim} does not match dim = {dim}"),
        ));
    }
    let read_part = |name: &str| -> CliResult<Option<Vec<f64>>> {
        match obj.get(name) {
            None => Ok(None),
            Some(serde_json::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let v = item.as_f64().ok_or_else(|| {
                        CliError::config(field, format!("state file \"{name}\" must hold numbers"))
                    })?;
                    out.push(v);
                }
                Ok(Some(out))
            }
            Some(_) => Err(CliError::config(field, format!("state file \"{name}\" must be an array"))),
        }
    };
    let re = read_part("re")?
        .ok_or_else(|| CliError::config(field, "state file needs a row-major \"re\" array"))?;
    if re.len() != dim * dim {
        return Err(CliError::config(
            field,
            format!("state file \"re\" has {} entries, expected dim^2 = {}", re.len(), dim * dim),
        ));
    }
    let im = match read_part("im")? {
        None => vec![0.0; dim * dim],
        Some(values) => {
            if values.len() != dim * dim {
                return Err(CliError::config(
                    field,
                    format!("state file \"im\" has {} entries, expected dim^2 = {}", values.len(), dim * dim),
                ));
            }
            values
        }
    };
    let data: Vec<Complex<f64>> =
        re.into_iter().zip(im).map(|(re, im)| Complex::new(re, im)).collect();
    let matrix = defosc_core::Matrix::from_row_major(dim, data).expect("length checked above");
    DensityMatrix::new(matrix).map_err(|e| CliError::at_field(e, field))
}

fn initial_state_of(
    sc: &Scenario,
    def: &Deformation64,
    mode: &defosc_core::Mode64,
) -> CliResult<DensityMatrix64> {
    match sc.initial.as_ref().expect("initial state validated for evolve") {
        InitSpec::Fock(n) => InitialState::Fock(*n)
            .build(def, mode)
            .map_err(|e| CliError::at_field(e, "initial_state.n")),
        InitSpec::Thermal(beta) => {
            let beta = match beta {
                BetaVal::Infinite => Beta::Infinite,
                BetaVal::Finite(v) => {
                    Beta::finite(*v).map_err(|e| CliError::at_field(e, "initial_state.beta"))?
                }
            };
            InitialState::Thermal(beta)
                .build(def, mode)
                .map_err(|e| CliError::at_field(e, "initial_state.beta"))
        }
        InitSpec::Diagonal(weights) => InitialState::Diagonal(weights.clone())
            .build(def, mode)
            .map_err(|e| CliError::at_field(e, "initial_state.weights")),
        InitSpec::File(path) => load_state_file(path, mode.dim),
    }
}

fn run_spectrum(sc: &Scenario) -> CliResult<Table> {
    let def = deformation_of(sc)?;
    let mode = mode_of(sc)?;
    let spectrum = Spectrum::new(&def, &mode).map_err(|e| match sc.deformation {
        DeformSpec::Custom { .. } => CliError::at_field(e, "deformation.factors"),
        _ => CliError::from(e),
    })?;
    let mut rows = Vec::with_capacity(sc.dim);
    for n in 0..sc.dim {
        let factor = if n == 0 {
            Cell::Empty
        } else {
            Cell::Float(def.factor(n).map_err(CliError::from)?)
        };
        rows.push(vec![
            Cell::Int(n as u64),
            Cell::Float(spectrum.structure[n]),
            factor,
            Cell::Float(sc.omega * spectrum.energies[n]),
            Cell::Float(spectrum.frequency_shift[n]),
        ]);
    }
    Ok(Table { mode: "spectrum", columns: column_names(ModeKind::Spectrum).to_vec(), rows })
}

fn run_evolve(sc: &Scenario) -> CliResult<Table> {
    let def = deformation_of(sc)?;
    let mode = mode_of(sc)?;
    let bath = bath_of(sc)?;
    let gen = Generator::assemble(&def, &bath, &mode).map_err(CliError::from)?;
    let rho0 = initial_state_of(sc, &def, &mode)?;
    let t_end = sc.t_end.expect("t_end validated for evolve");
    let dt = sc.dt.unwrap_or(0.9 * gen.step_bound());
    let sample_every = match sc.sample_every {
        Some(v) => v,
        None => {
            let steps = (t_end / dt).ceil().max(1.0) as usize;
            steps.div_ceil(1000).max(1)
        }
    };
    let trajectory =
        integrate(&gen, &rho0, t_end, dt, sample_every).map_err(|e| CliError::at_field(e, "dt"))?;
    let rows = trajectory
        .times
        .iter()
        .zip(&trajectory.observables)
        .map(|(t, obs)| {
            vec![
                Cell::Float(*t),
                Cell::Float(obs.mean_n),
                Cell::Float(obs.mean_a.re),
                Cell::Float(obs.mean_a.im),
                Cell::Float(obs.mean_omega_a.re),
                Cell::Float(obs.mean_omega_a.im),
                Cell::Float(obs.energy),
                Cell::Float(obs.trace_err),
                Cell::Float(obs.min_eig),
            ]
        })
        .collect();
    Ok(Table { mode: "evolve", columns: column_names(ModeKind::Evolve).to_vec(), rows })
}

fn run_steady(sc: &Scenario) -> CliResult<Table> {
    let def = deformation_of(sc)?;
    let mode = mode_of(sc)?;
    let bath = bath_of(sc)?;
    let chain = transition_rates(&def, &bath, &mode).map_err(CliError::from)?;
    let product = steady_product(&chain).map_err(CliError::from)?;
    let nullspace = steady_nullspace(&chain).map_err(CliError::from)?;
    let mut rows = Vec::with_capacity(sc.dim);
    for n in 0..sc.dim {
        let residual = if n == 0 {
            0.0
        } else {
            (chain.down[n - 1] * product.p[n] - chain.up[n - 1] * product.p[n - 1]).abs()
        };
        rows.push(vec![
            Cell::Int(n as u64),
            Cell::Float(product.p[n]),
            Cell::Float(nullspace.p[n]),
            Cell::Float(residual),
        ]);
    }
    Ok(Table { mode: "steady", columns: column_names(ModeKind::Steady).to_vec(), rows })
}

fn run_thermo(sc: &Scenario) -> CliResult<Table> {
    let tau = match &sc.deformation {
        DeformSpec::Identity => 0.0,
        DeformSpec::Q { tau } => *tau,
        DeformSpec::Custom { .. } => {
            return Err(CliError::config("deformation.kind", "thermo needs the identity or q deformation"))
        }
    };
    let beta = sc.beta_thermo.expect("beta validated for thermo");
    let result = thermo(beta, tau, sc.omega, sc.tol).map_err(CliError::from)?;
    let row = vec![
        Cell::Float(result.beta),
        Cell::Float(result.tau),
        Cell::Float(result.z_q),
        Cell::Float(result.z_q_expansion),
        Cell::Float(result.b),
        Cell::Float(result.e_closed),
        Cell::Float(result.e_series),
        Cell::Float(result.tail_bound),
    ];
    Ok(Table { mode: "thermo", columns: column_names(ModeKind::Thermo).to_vec(), rows: vec![row] })
}

/// Outcome of a sweep: the (possibly truncated) table plus the first
/// failure in input order, if any.
pub struct SweepOutcome {
    pub table: Table,
    pub failure: Option<SweepFailure>,
}

pub struct SweepFailure {
    pub index: usize,
    pub value: f64,
    pub error: CliError,
}

pub fn run_sweep(sc: &Scenario, jobs: usize) -> SweepOutcome {
    let sweep = sc.sweep.as_ref().expect("sweep block validated");
    let n = sweep.values.len();
    let results: Vec<Mutex<Option<CliResult<Table>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let failed_floor = AtomicUsize::new(usize::MAX);
    let workers = jobs.clamp(1, n.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n || i > failed_floor.load(Ordering::Relaxed) {
                    break;
                }
                let outcome = sc
                    .with_value(sweep.parameter, sweep.values[i])
                    .and_then(|pinned| run_mode(&pinned));
                if outcome.is_err() {
                    failed_floor.fetch_min(i, Ordering::Relaxed);
                }
                *results[i].lock().expect("no poisoned result slot") = Some(outcome);
            });
        }
    });

    let base_columns = column_names(sc.mode);
    let prefix = !base_columns.contains(&sweep.parameter.name());
    let mut columns = Vec::with_capacity(base_columns.len() + 1);
    if prefix {
        columns.push(sweep.parameter.name());
    }
    columns.extend_from_slice(base_columns);

    let mut rows = Vec::new();
    let mut failure = None;
    for (i, slot) in results.iter().enumerate() {
        let outcome = slot.lock().expect("no poisoned result slot").take();
        match outcome {
            Some(Ok(table)) => {
                for mut row in table.rows {
                    if prefix {
                        let key = match sweep.parameter {
                            SweepParam::Dim => Cell::Int(sweep.values[i] as u64),
                            _ => Cell::Float(sweep.values[i]),
                        };
                        row.insert(0, key);
                    }
                    rows.push(row);
                }
            }
            Some(Err(error)) => {
                failure = Some(SweepFailure { index: i, value: sweep.values[i], error });
                break;
            }
            None => {
                failure = Some(SweepFailure {
                    index: i,
                    value: sweep.values[i],
                    error: CliError::numerical("sweep worker dropped a task"),
                });
                break;
            }
        }
    }

    SweepOutcome { table: Table { mode: "sweep", columns, rows }, failure }
}
