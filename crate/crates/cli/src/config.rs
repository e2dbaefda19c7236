//! Scenario configuration.
//!
//! A scenario file is a flat list of `key = value` lines with dotted keys
//! (`deformation.tau = 0.2`), blank lines and `#` comment lines ignored.
//! The same schema is accepted as a JSON object, with nested objects
//! standing in for the dots and arrays for comma-separated lists. Keys are
//! checked against the schema of the requested mode; anything left over is
//! rejected so typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{CliError, CliResult};
use crate::table::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcmd {
    Spectrum,
    Evolve,
    Steady,
    Thermo,
    Sweep,
}

impl Subcmd {
    fn name(self) -> &'static str {
        match self {
            Subcmd::Spectrum => "spectrum",
            Subcmd::Evolve => "evolve",
            Subcmd::Steady => "steady",
            Subcmd::Thermo => "thermo",
            Subcmd::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Spectrum,
    Evolve,
    Steady,
    Thermo,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Spectrum => "spectrum",
            ModeKind::Evolve => "evolve",
            ModeKind::Steady => "steady",
            ModeKind::Thermo => "thermo",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeformSpec {
    Identity,
    Q { tau: f64 },
    Custom { factors: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaVal {
    Finite(f64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RealTable {
    Constant(f64),
    PerLevel(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComplexTable {
    Constant(f64, f64),
    PerLevel(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BathKind {
    Thermal { beta: BetaVal },
    Squeezed { nbar: f64, m_re: f64, m_im: f64 },
    Custom { d_plus: ComplexTable, d_minus: ComplexTable, d_pq: RealTable },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathSpec {
    pub lambda: f64,
    pub kind: BathKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Fock(usize),
    Thermal(BetaVal),
    Diagonal(Vec<f64>),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Tau,
    Beta,
    Lambda,
    Dim,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Tau => "tau",
            SweepParam::Beta => "beta",
            SweepParam::Lambda => "lambda",
            SweepParam::Dim => "dim",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub mode: ModeKind,
    pub deformation: DeformSpec,
    pub omega: f64,
    pub dim: usize,
    pub bath: Option<BathSpec>,
    pub initial: Option<InitSpec>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub sample_every: Option<usize>,
    pub beta_thermo: Option<f64>,
    pub tol: f64,
    pub sweep: Option<SweepSpec>,
    pub out_path: Option<PathBuf>,
    pub format: Format,
}

pub const DIM_CAP: usize = 512;

/// Raw key-value view of a config document. Keys are removed as the
/// schema consumes them; whatever remains at the end is unknown.
#[derive(Debug)]
pub struct KeyBag {
    map: BTreeMap<String, String>,
}

pub fn parse_raw(text: &str) -> CliResult<KeyBag> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_flat(text)
    }
}

fn parse_flat(text: &str) -> CliResult<KeyBag> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config_plain(format!(
                "line {}: expected `key = value`, got {line:?}",
                idx + 1
            )));
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(CliError::config_plain(format!("line {}: empty key", idx + 1)));
        }
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(CliError::config(key, "duplicate key"));
        }
    }
    Ok(KeyBag { map })
}

fn parse_json(text: &str) -> CliResult<KeyBag> {
    let doc: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::config_plain(format!("invalid JSON config: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::config_plain("JSON config must be an object"))?;
    let mut map = BTreeMap::new();
    flatten_json("", obj, &mut map)?;
    Ok(KeyBag { map })
}

fn flatten_json(
    prefix: &str,
    obj: &serde_json::Map<String, serde_json::Value>,
    map: &mut BTreeMap<String, String>,
) -> CliResult<()> {
    for (name, value) in obj {
        let key = if prefix.is_empty() { name.clone() } else { format!("{prefix}.{name}") };
        let text = match value {
            serde_json::Value::Object(inner) => {
                flatten_json(&key, inner, map)?;
                continue;
            }
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => {
                let mut parts = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        serde_json::Value::Number(n) => parts.push(n.to_string()),
                        serde_json::Value::String(s) => parts.push(s.clone()),
                        _ => {
                            return Err(CliError::config(
                                key,
                                "array entries must be numbers or strings",
                            ))
                        }
                    }
                }
                parts.join(", ")
            }
            _ => return Err(CliError::config(key, "unsupported value type")),
        };
        map.insert(key, text);
    }
    Ok(())
}

impl KeyBag {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(s) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| CliError::config(key, format!("expected a number, got {s:?}")))?;
                if !v.is_finite() {
                    return Err(CliError::config(key, format!("must be finite, got {s}")));
                }
                Ok(Some(v))
            }
        }
    }

    fn take_usize(&mut self, key: &str) -> CliResult<Option<usize>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<usize>()
                .map(Some)
                .map_err(|_| CliError::config(key, format!("expected a nonnegative integer, got {s:?}"))),
        }
    }

    fn take_beta(&mut self, key: &str) -> CliResult<Option<BetaVal>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(s) if s == "inf" => Ok(Some(BetaVal::Infinite)),
            Some(s) => {
                let v: f64 = s.parse().map_err(|_| {
                    CliError::config(key, format!("expected a positive real or \"inf\", got {s:?}"))
                })?;
                if !v.is_finite() || v <= 0.0 {
                    return Err(CliError::config(
                        key,
                        format!("expected a positive real or \"inf\", got {s}"),
                    ));
                }
                Ok(Some(BetaVal::Finite(v)))
            }
        }
    }

    fn take_list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(s) => {
                let body = s.trim();
                if body.is_empty() {
                    return Ok(Some(Vec::new()));
                }
                let mut values = Vec::new();
                for part in body.split(',') {
                    let part = part.trim();
                    let v: f64 = part.parse().map_err(|_| {
                        CliError::config(key, format!("expected a comma-separated number list, got entry {part:?}"))
                    })?;
                    if !v.is_finite() {
                        return Err(CliError::config(key, format!("list entries must be finite, got {part}")));
                    }
                    values.push(v);
                }
                Ok(Some(values))
            }
        }
    }

    fn finish(mut self) -> CliResult<()> {
        if let Some((key, _)) = self.map.pop_first() {
            return Err(CliError::config(key, "unknown key or not applicable to this mode"));
        }
        Ok(())
    }
}

fn parse_mode(name: &str) -> CliResult<ModeKind> {
    match name {
        "spectrum" => Ok(ModeKind::Spectrum),
        "evolve" => Ok(ModeKind::Evolve),
        "steady" => Ok(ModeKind::Steady),
        "thermo" => Ok(ModeKind::Thermo),
        "sweep" => Err(CliError::config("mode", "sweep cannot be its own base mode")),
        other => Err(CliError::config("mode", format!("unknown mode {other:?}"))),
    }
}

fn sweep_params_for(mode: ModeKind) -> &'static [SweepParam] {
    match mode {
        ModeKind::Spectrum => &[SweepParam::Tau, SweepParam::Dim],
        ModeKind::Evolve | ModeKind::Steady => {
            &[SweepParam::Tau, SweepParam::Beta, SweepParam::Lambda, SweepParam::Dim]
        }
        ModeKind::Thermo => &[SweepParam::Tau, SweepParam::Beta],
    }
}

fn parse_sweep(bag: &mut KeyBag, base: ModeKind) -> CliResult<SweepSpec> {
    let pname = bag
        .take("sweep.parameter")
        .ok_or_else(|| CliError::config("sweep.parameter", "sweep requires sweep.parameter"))?;
    let parameter = match pname.as_str() {
        "tau" => SweepParam::Tau,
        "beta" => SweepParam::Beta,
        "lambda" => SweepParam::Lambda,
        "dim" => SweepParam::Dim,
        other => {
            return Err(CliError::config(
                "sweep.parameter",
                format!("expected tau, beta, lambda or dim, got {other:?}"),
            ))
        }
    };
    if !sweep_params_for(base).contains(&parameter) {
        return Err(CliError::config(
            "sweep.parameter",
            format!("parameter {} does not apply to mode {}", parameter.name(), base.name()),
        ));
    }
    let values = bag
        .take_list("sweep.values")?
        .ok_or_else(|| CliError::config("sweep.values", "sweep requires sweep.values"))?;
    if values.is_empty() {
        return Err(CliError::config("sweep.values", "values list must not be empty"));
    }
    for &v in &values {
        let ok = match parameter {
            SweepParam::Tau => v >= 0.0,
            SweepParam::Beta => v > 0.0,
            SweepParam::Lambda => v >= 0.0,
            SweepParam::Dim => v.fract() == 0.0 && (2.0..=DIM_CAP as f64).contains(&v),
        };
        if !ok {
            return Err(CliError::config(
                "sweep.values",
                format!("value {v} is outside the domain of parameter {}", parameter.name()),
            ));
        }
    }
    Ok(SweepSpec { parameter, values })
}

fn parse_deformation(bag: &mut KeyBag, sweeping_tau: bool) -> CliResult<DeformSpec> {
    let kind = bag.take("deformation.kind").unwrap_or_else(|| "identity".into());
    match kind.as_str() {
        "identity" => Ok(DeformSpec::Identity),
        "q" => {
            let tau = bag.take_f64("deformation.tau")?;
            let q = bag.take_f64("deformation.q")?;
            let tau = match (tau, q) {
                (Some(_), Some(_)) => {
                    return Err(CliError::config(
                        "deformation.q",
                        "give either deformation.tau or deformation.q, not both",
                    ))
                }
                (Some(t), None) => {
                    if t < 0.0 {
                        return Err(CliError::config("deformation.tau", format!("must be >= 0, got {t}")));
                    }
                    t
                }
                (None, Some(qv)) => {
                    if qv <= 0.0 {
                        return Err(CliError::config("deformation.q", format!("must be > 0, got {qv}")));
                    }
                    qv.ln().abs()
                }
                (None, None) if sweeping_tau => 0.0,
                (None, None) => {
                    return Err(CliError::config(
                        "deformation.tau",
                        "the q deformation needs deformation.tau (or deformation.q)",
                    ))
                }
            };
            Ok(DeformSpec::Q { tau })
        }
        "custom" => {
            let factors = bag
                .take_list("deformation.factors")?
                .ok_or_else(|| CliError::config("deformation.factors", "custom deformation needs factors"))?;
            if factors.is_empty() {
                return Err(CliError::config("deformation.factors", "factor list must not be empty"));
            }
            if let Some(bad) = factors.iter().find(|f| **f < 0.0) {
                return Err(CliError::config("deformation.factors", format!("factors must be >= 0, got {bad}")));
            }
            Ok(DeformSpec::Custom { factors })
        }
        other => Err(CliError::config(
            "deformation.kind",
            format!("expected identity, q or custom, got {other:?}"),
        )),
    }
}

fn take_complex_table(bag: &mut KeyBag, base: &str) -> CliResult<Option<ComplexTable>> {
    let re_key = format!("{base}_re");
    let im_key = format!("{base}_im");
    let re = bag.take_list(&re_key)?;
    let im = bag.take_list(&im_key)?;
    match (re, im) {
        (None, None) => Ok(None),
        (None, Some(_)) => {
            let message = format!("{im_key} is set but {re_key} is missing");
            Err(CliError::config(re_key, message))
        }
        (Some(re), im) => {
            if re.is_empty() {
                return Err(CliError::config(re_key, "list must not be empty"));
            }
            let im = im.unwrap_or_else(|| vec![0.0; re.len()]);
            if im.len() != re.len() {
                return Err(CliError::config(
                    im_key,
                    format!("length {} does not match {re_key} length {}", im.len(), re.len()),
                ));
            }
            if re.len() == 1 {
                Ok(Some(ComplexTable::Constant(re[0], im[0])))
            } else {
                Ok(Some(ComplexTable::PerLevel(re.into_iter().zip(im).collect())))
            }
        }
    }
}

fn take_real_table(bag: &mut KeyBag, key: &str) -> CliResult<Option<RealTable>> {
    match bag.take_list(key)? {
        None => Ok(None),
        Some(values) if values.is_empty() => Err(CliError::config(key, "list must not be empty")),
        Some(values) if values.len() == 1 => Ok(Some(RealTable::Constant(values[0]))),
        Some(values) => Ok(Some(RealTable::PerLevel(values))),
    }
}

fn parse_bath(bag: &mut KeyBag, sweeping: impl Fn(SweepParam) -> bool) -> CliResult<BathSpec> {
    let lambda = match bag.take_f64("lambda")? {
        Some(l) => {
            if l < 0.0 {
                return Err(CliError::config("lambda", format!("must be >= 0, got {l}")));
            }
            l
        }
        None if sweeping(SweepParam::Lambda) => 1.0,
        None => return Err(CliError::config("lambda", "this mode requires lambda")),
    };
    let kind_name = bag.take("bath.kind").unwrap_or_else(|| "thermal".into());
    let kind = match kind_name.as_str() {
        "thermal" => {
            let beta = match bag.take_beta("beta")? {
                Some(b) => b,
                None if sweeping(SweepParam::Beta) => BetaVal::Finite(1.0),
                None => {
                    return Err(CliError::config("beta", "a thermal bath requires beta (a positive real or \"inf\")"))
                }
            };
            BathKind::Thermal { beta }
        }
        "squeezed" => {
            if sweeping(SweepParam::Beta) {
                return Err(CliError::config("sweep.parameter", "a beta sweep requires a thermal bath"));
            }
            let nbar = bag
                .take_f64("bath.nbar")?
                .ok_or_else(|| CliError::config("bath.nbar", "a squeezed bath requires bath.nbar"))?;
            if nbar < 0.0 {
                return Err(CliError::config("bath.nbar", format!("must be >= 0, got {nbar}")));
            }
            let m_re = bag.take_f64("bath.m_re")?.unwrap_or(0.0);
            let m_im = bag.take_f64("bath.m_im")?.unwrap_or(0.0);
            BathKind::Squeezed { nbar, m_re, m_im }
        }
        "custom" => {
            if sweeping(SweepParam::Beta) {
                return Err(CliError::config("sweep.parameter", "a beta sweep requires a thermal bath"));
            }
            let d_plus = take_complex_table(bag, "bath.d_plus")?.ok_or_else(|| {
                CliError::config("bath.d_plus_re", "a custom bath requires bath.d_plus_re")
            })?;
            let d_minus = take_complex_table(bag, "bath.d_minus")?
                .unwrap_or(ComplexTable::Constant(0.0, 0.0));
            let d_pq = take_real_table(bag, "bath.d_pq")?.unwrap_or(RealTable::Constant(0.0));
            BathKind::Custom { d_plus, d_minus, d_pq }
        }
        other => {
            return Err(CliError::config(
                "bath.kind",
                format!("expected thermal, squeezed or custom, got {other:?}"),
            ))
        }
    };
    Ok(BathSpec { lambda, kind })
}

fn parse_initial(bag: &mut KeyBag) -> CliResult<InitSpec> {
    let kind = bag
        .take("initial_state.kind")
        .ok_or_else(|| CliError::config("initial_state.kind", "evolve requires an initial state"))?;
    match kind.as_str() {
        "fock" => {
            let n = bag
                .take_usize("initial_state.n")?
                .ok_or_else(|| CliError::config("initial_state.n", "a fock state needs initial_state.n"))?;
            Ok(InitSpec::Fock(n))
        }
        "thermal" => {
            let beta = bag.take_beta("initial_state.beta")?.ok_or_else(|| {
                CliError::config("initial_state.beta", "a thermal state needs initial_state.beta")
            })?;
            Ok(InitSpec::Thermal(beta))
        }
        "diagonal" => {
            let weights = bag.take_list("initial_state.weights")?.ok_or_else(|| {
                CliError::config("initial_state.weights", "a diagonal state needs initial_state.weights")
            })?;
            if weights.is_empty() {
                return Err(CliError::config("initial_state.weights", "weight list must not be empty"));
            }
            if let Some(bad) = weights.iter().find(|w| **w < 0.0) {
                return Err(CliError::config(
                    "initial_state.weights",
                    format!("weights must be >= 0, got {bad}"),
                ));
            }
            Ok(InitSpec::Diagonal(weights))
        }
        "file" => {
            let path = bag
                .take("initial_state.path")
                .ok_or_else(|| CliError::config("initial_state.path", "a file state needs initial_state.path"))?;
            Ok(InitSpec::File(PathBuf::from(path)))
        }
        other => Err(CliError::config(
            "initial_state.kind",
            format!("expected fock, thermal, diagonal or file, got {other:?}"),
        )),
    }
}

pub fn build_scenario(sub: Subcmd, mut bag: KeyBag) -> CliResult<Scenario> {
    let mode_key = bag.take("mode");
    let base = match sub {
        Subcmd::Sweep => {
            let name = mode_key.ok_or_else(|| {
                CliError::config("mode", "sweep requires mode = spectrum|evolve|steady|thermo in the config")
            })?;
            parse_mode(&name)?
        }
        other => {
            if let Some(name) = mode_key {
                if name != other.name() {
                    return Err(CliError::config(
                        "mode",
                        format!("config says mode = {name}, but the command is {}", other.name()),
                    ));
                }
            }
            match other {
                Subcmd::Spectrum => ModeKind::Spectrum,
                Subcmd::Evolve => ModeKind::Evolve,
                Subcmd::Steady => ModeKind::Steady,
                Subcmd::Thermo => ModeKind::Thermo,
                Subcmd::Sweep => unreachable!(),
            }
        }
    };

    let sweep = if sub == Subcmd::Sweep { Some(parse_sweep(&mut bag, base)?) } else { None };
    let sweeping = |p: SweepParam| sweep.as_ref().is_some_and(|s| s.parameter == p);

    let deformation = parse_deformation(&mut bag, sweeping(SweepParam::Tau))?;
    if sweeping(SweepParam::Tau) && !matches!(deformation, DeformSpec::Q { .. }) {
        return Err(CliError::config("sweep.parameter", "a tau sweep requires deformation.kind = q"));
    }

    let omega = bag.take_f64("omega")?.unwrap_or(1.0);
    if omega <= 0.0 {
        return Err(CliError::config("omega", format!("must be > 0, got {omega}")));
    }

    let dim = if base == ModeKind::Thermo {
        if bag.take("dim").is_some() {
            return Err(CliError::config("dim", "mode thermo sums the full series and takes no basis dimension"));
        }
        32
    } else {
        let d = bag.take_usize("dim")?.unwrap_or(32);
        if !(2..=DIM_CAP).contains(&d) {
            return Err(CliError::config("dim", format!("must be between 2 and {DIM_CAP}, got {d}")));
        }
        d
    };

    let mut bath = None;
    let mut initial = None;
    let mut t_end = None;
    let mut dt = None;
    let mut sample_every = None;
    let mut beta_thermo = None;
    let mut tol = 1e-15;

    match base {
        ModeKind::Spectrum => {}
        ModeKind::Evolve | ModeKind::Steady => {
            bath = Some(parse_bath(&mut bag, sweeping)?);
            if base == ModeKind::Evolve {
                initial = Some(parse_initial(&mut bag)?);
                let te = bag
                    .take_f64("t_end")?
                    .ok_or_else(|| CliError::config("t_end", "evolve requires t_end"))?;
                if te < 0.0 {
                    return Err(CliError::config("t_end", format!("must be >= 0, got {te}")));
                }
                t_end = Some(te);
                dt = bag.take_f64("dt")?;
                if let Some(v) = dt {
                    if v <= 0.0 {
                        return Err(CliError::config("dt", format!("must be > 0, got {v}")));
                    }
                }
                sample_every = bag.take_usize("sample_every")?;
                if sample_every == Some(0) {
                    return Err(CliError::config("sample_every", "must be >= 1"));
                }
            }
        }
        ModeKind::Thermo => {
            beta_thermo = match bag.take_beta("beta")? {
                Some(BetaVal::Finite(v)) => Some(v),
                Some(BetaVal::Infinite) => {
                    return Err(CliError::config("beta", "thermo requires a finite beta"))
                }
                None if sweeping(SweepParam::Beta) => Some(1.0),
                None => return Err(CliError::config("beta", "thermo requires beta")),
            };
            if matches!(deformation, DeformSpec::Custom { .. }) {
                return Err(CliError::config(
                    "deformation.kind",
                    "thermo needs the identity or q deformation",
                ));
            }
            if let Some(t) = bag.take_f64("tol")? {
                if !(t > 0.0 && t < 1.0) {
                    return Err(CliError::config("tol", format!("must lie in (0, 1), got {t}")));
                }
                tol = t;
            }
        }
    }

    let out_path = bag.take("output.path").map(PathBuf::from);
    let format = match bag.take("output.format") {
        None => Format::Csv,
        Some(s) => Format::parse(&s).map_err(|m| CliError::config("output.format", m))?,
    };

    bag.finish()?;

    Ok(Scenario {
        mode: base,
        deformation,
        omega,
        dim,
        bath,
        initial,
        t_end,
        dt,
        sample_every,
        beta_thermo,
        tol,
        sweep,
        out_path,
        format,
    })
}

impl Scenario {
    /// Copy of this scenario with the swept parameter pinned to one value.
    pub fn with_value(&self, parameter: SweepParam, value: f64) -> CliResult<Scenario> {
        let mut sc = self.clone();
        sc.sweep = None;
        match parameter {
            SweepParam::Tau => {
                sc.deformation = DeformSpec::Q { tau: value };
            }
            SweepParam::Beta => {
                if sc.mode == ModeKind::Thermo {
                    sc.beta_thermo = Some(value);
                } else {
                    match sc.bath.as_mut() {
                        Some(BathSpec { kind: BathKind::Thermal { beta }, .. }) => {
                            *beta = BetaVal::Finite(value);
                        }
                        _ => {
                            return Err(CliError::config(
                                "sweep.parameter",
                                "a beta sweep requires a thermal bath",
                            ))
                        }
                    }
                }
            }
            SweepParam::Lambda => match sc.bath.as_mut() {
                Some(b) => b.lambda = value,
                None => {
                    return Err(CliError::config(
                        "sweep.parameter",
                        format!("parameter lambda does not apply to mode {}", sc.mode.name()),
                    ))
                }
            },
            SweepParam::Dim => {
                sc.dim = value as usize;
            }
        }
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(text: &str) -> KeyBag {
        parse_raw(text).expect("config parses")
    }

    #[test]
    fn flat_and_json_configs_agree() {
        let flat = bag("mode = spectrum\ndeformation.kind = q\ndeformation.tau = 0.2\ndim = 8\n");
        let json = bag("{\"mode\": \"spectrum\", \"deformation\": {\"kind\": \"q\", \"tau\": 0.2}, \"dim\": 8}");
        let a = build_scenario(Subcmd::Spectrum, flat).unwrap();
        let b = build_scenario(Subcmd::Spectrum, json).unwrap();
        assert_eq!(a.deformation, b.deformation);
        assert_eq!(a.dim, b.dim);
    }

    #[test]
    fn comments_blank_lines_and_spacing_are_ignored() {
        let sc = build_scenario(
            Subcmd::Spectrum,
            bag("# a comment\n\n  dim   =  4 \n deformation.kind=identity\n"),
        )
        .unwrap();
        assert_eq!(sc.dim, 4);
        assert_eq!(sc.deformation, DeformSpec::Identity);
    }

    #[test]
    fn duplicate_and_unknown_keys_are_rejected() {
        let err = parse_raw("dim = 4\ndim = 8\n").unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "dim"));

        let err = build_scenario(Subcmd::Spectrum, bag("dim = 4\nwidth = 2\n")).unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "width"));
    }

    #[test]
    fn mode_key_must_match_the_command() {
        let err = build_scenario(Subcmd::Spectrum, bag("mode = evolve\n")).unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "mode"));
    }

    #[test]
    fn evolve_keys_do_not_leak_into_spectrum() {
        let err = build_scenario(Subcmd::Spectrum, bag("t_end = 3\n")).unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "t_end"));
    }

    #[test]
    fn beta_accepts_the_inf_literal() {
        let sc = build_scenario(
            Subcmd::Steady,
            bag("mode = steady\nlambda = 0.5\nbeta = inf\ndim = 6\n"),
        )
        .unwrap();
        match sc.bath.unwrap().kind {
            BathKind::Thermal { beta } => assert_eq!(beta, BetaVal::Infinite),
            other => panic!("expected thermal bath, got {other:?}"),
        }

        let err =
            build_scenario(Subcmd::Thermo, bag("mode = thermo\nbeta = inf\n")).unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "beta"));
    }

    #[test]
    fn sweep_needs_a_base_mode_and_nonempty_values() {
        let err = build_scenario(
            Subcmd::Sweep,
            bag("sweep.parameter = tau\nsweep.values = 0, 0.1\ndeformation.kind = q\n"),
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "mode"));

        let err = build_scenario(
            Subcmd::Sweep,
            bag("mode = thermo\nbeta = 1\ndeformation.kind = q\nsweep.parameter = tau\nsweep.values =\n"),
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "sweep.values"));
    }

    #[test]
    fn sweep_parameter_must_fit_the_base_mode() {
        let err = build_scenario(
            Subcmd::Sweep,
            bag("mode = thermo\nbeta = 1\ndeformation.kind = q\ndeformation.tau = 0.1\nsweep.parameter = lambda\nsweep.values = 0.5\n"),
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "sweep.parameter"));
    }

    #[test]
    fn swept_keys_may_be_omitted_from_the_base_config() {
        let sc = build_scenario(
            Subcmd::Sweep,
            bag("mode = steady\ndeformation.kind = q\ndeformation.tau = 0.3\nlambda = 0.5\ndim = 8\nsweep.parameter = beta\nsweep.values = 0.5, 1, 2\n"),
        )
        .unwrap();
        let pinned = sc.with_value(SweepParam::Beta, 2.0).unwrap();
        match pinned.bath.unwrap().kind {
            BathKind::Thermal { beta } => assert_eq!(beta, BetaVal::Finite(2.0)),
            other => panic!("expected thermal bath, got {other:?}"),
        }
    }

    #[test]
    fn custom_bath_tables_parse_constants_and_lists() {
        let sc = build_scenario(
            Subcmd::Steady,
            bag("mode = steady\nlambda = 0.4\nbath.kind = custom\nbath.d_plus_re = 0.5, 0.6, 0.7\ndim = 4\n"),
        )
        .unwrap();
        match sc.bath.unwrap().kind {
            BathKind::Custom { d_plus, d_minus, d_pq } => {
                assert_eq!(d_plus, ComplexTable::PerLevel(vec![(0.5, 0.0), (0.6, 0.0), (0.7, 0.0)]));
                assert_eq!(d_minus, ComplexTable::Constant(0.0, 0.0));
                assert_eq!(d_pq, RealTable::Constant(0.0));
            }
            other => panic!("expected custom bath, got {other:?}"),
        }
    }

    #[test]
    fn initial_state_kinds_parse() {
        let base = "mode = evolve\nlambda = 0.5\nbeta = 1\nt_end = 1\ndim = 6\n";
        let sc = build_scenario(
            Subcmd::Evolve,
            bag(&format!("{base}initial_state.kind = fock\ninitial_state.n = 2\n")),
        )
        .unwrap();
        assert_eq!(sc.initial, Some(InitSpec::Fock(2)));

        let sc = build_scenario(
            Subcmd::Evolve,
            bag(&format!("{base}initial_state.kind = diagonal\ninitial_state.weights = 0.5, 0.5\n")),
        )
        .unwrap();
        assert_eq!(sc.initial, Some(InitSpec::Diagonal(vec![0.5, 0.5])));

        let err = build_scenario(Subcmd::Evolve, bag(base)).unwrap_err();
        assert!(matches!(err, CliError::Config { field: Some(f), .. } if f == "initial_state.kind"));
    }
}
