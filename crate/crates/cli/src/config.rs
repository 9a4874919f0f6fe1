//! Scenario files: flat `key = value` lines with dotted keys.
//!
//! Lists are comma separated and matrices are row-major lists. `#` starts a
//! comment. Unknown or repeated keys are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use pbc_core::analysis::{MetricsConfig, SamplingBox};
use pbc_core::controllers::{
    linear_controller, msd_c1, static_gain_controller, tora_c1, tora_c2_controller,
};
use pbc_core::plants::{lti_model, msd_model, tora_model};
use pbc_core::sector::{classify_mode, sector_residual, BoundaryMode};
use pbc_core::{
    ClosedLoopState, ControllerModel, DissipativityTriple, IntegratorConfig, PbcError, PlantModel,
    Scenario, SectorBounds,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    Msd,
    Tora {
        epsilon: f64,
        h0: f64,
        h1: f64,
    },
    Lti {
        a: Vec<f64>,
        b: Vec<f64>,
        g: Vec<f64>,
        p: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Linear { a: Vec<f64>, b: Vec<f64> },
    ToraC2,
    StaticGain { k: f64 },
}

impl ControllerSpec {
    pub fn label(&self) -> String {
        match self {
            ControllerSpec::Linear { .. } => "linear".into(),
            ControllerSpec::ToraC2 => "tora_c2".into(),
            ControllerSpec::StaticGain { k } => format!("static_gain(k={k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativitySpec {
    pub triple: DissipativityTriple,
    pub sample_box: SamplingBox,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub plant: PlantSpec,
    pub controller: ControllerSpec,
    pub bounds: SectorBounds,
    pub initial: ClosedLoopState,
    pub integrator: IntegratorConfig,
    pub projection: bool,
    pub metrics: MetricsConfig,
    pub dissipativity: Option<DissipativitySpec>,
}

struct Fields {
    origin: String,
    entries: BTreeMap<String, (usize, String)>,
    used: BTreeSet<String>,
}

impl Fields {
    fn parse(origin: &str, text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{origin}: line {line_no}: expected `key = value`"
                )));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "{origin}: line {line_no}: empty key"
                )));
            }
            if let Some((first, _)) = entries.get(&key) {
                return Err(CliError::Config(format!(
                    "{origin}: line {line_no}: {key}: already set on line {first}"
                )));
            }
            entries.insert(key, (line_no, value.trim().to_string()));
        }
        Ok(Self {
            origin: origin.to_string(),
            entries,
            used: BTreeSet::new(),
        })
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match self.entries.get(key) {
            Some((line, _)) => {
                CliError::Config(format!("{}: line {line}: {key}: {msg}", self.origin))
            }
            None => CliError::Config(format!("{}: {key}: {msg}", self.origin)),
        }
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.entries.get(key).map(|(_, v)| v.clone())
    }

    fn string(&mut self, key: &str) -> Result<String, CliError> {
        self.raw(key)
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => match parse_number(&v) {
                Some(x) => Ok(Some(x)),
                None => Err(self.err(key, format!("expected a finite number, got `{v}`"))),
            },
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64, CliError> {
        self.opt_f64(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn opt_usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| self.err(key, format!("expected a non-negative integer, got `{v}`"))),
        }
    }

    fn opt_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                match parse_number(item) {
                    Some(x) => Ok(x),
                    None => Err(self.err(key, format!("bad list entry `{item}`"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>, CliError> {
        self.opt_list(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some((key, (line, _))) = self.entries.iter().find(|(k, _)| !self.used.contains(*k)) {
            return Err(CliError::Config(format!(
                "{}: line {line}: {key}: unknown key",
                self.origin
            )));
        }
        Ok(())
    }
}

/// Numbers, plus `pi`, `-pi` and `pi/N` for readable angles.
fn parse_number(s: &str) -> Option<f64> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let value = if body == "pi" {
        std::f64::consts::PI
    } else if let Some(den) = body.strip_prefix("pi/") {
        std::f64::consts::PI / den.parse::<f64>().ok()?
    } else {
        body.parse::<f64>().ok()?
    };
    let value = sign * value;
    value.is_finite().then_some(value)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&path.display().to_string(), &text)
}

pub fn parse(origin: &str, text: &str) -> Result<ScenarioConfig, CliError> {
    let mut f = Fields::parse(origin, text)?;
    let name = f.raw("name").unwrap_or_else(|| {
        Path::new(origin)
            .file_stem()
            .map_or_else(|| origin.to_string(), |s| s.to_string_lossy().into_owned())
    });

    let plant = match f.string("plant.kind")?.as_str() {
        "msd" => PlantSpec::Msd,
        "tora" => PlantSpec::Tora {
            epsilon: f.f64("plant.epsilon")?,
            h0: f.f64("plant.h0")?,
            h1: f.f64("plant.h1")?,
        },
        "lti" => PlantSpec::Lti {
            a: f.list("plant.a")?,
            b: f.list("plant.b")?,
            g: f.list("plant.g")?,
            p: f.opt_list("plant.p")?,
        },
        other => {
            return Err(f.err(
                "plant.kind",
                format!("unknown plant kind `{other}` (msd, tora, lti)"),
            ))
        }
    };

    let controller = match f.string("controller.kind")?.as_str() {
        "linear" => ControllerSpec::Linear {
            a: f.list("controller.a")?,
            b: f.list("controller.b")?,
        },
        "msd_c1" => {
            let c = msd_c1();
            ControllerSpec::Linear {
                a: c.a().to_vec(),
                b: c.b().to_vec(),
            }
        }
        "tora_c1" => {
            let c = tora_c1();
            ControllerSpec::Linear {
                a: c.a().to_vec(),
                b: c.b().to_vec(),
            }
        }
        "tora_c2" => ControllerSpec::ToraC2,
        "static_gain" => ControllerSpec::StaticGain {
            k: f.f64("controller.k")?,
        },
        other => return Err(f.err(
            "controller.kind",
            format!(
                "unknown controller kind `{other}` (linear, msd_c1, tora_c1, tora_c2, static_gain)"
            ),
        )),
    };

    let k1 = f.f64("sector.k1")?;
    let k2 = f.f64("sector.k2")?;
    if k1 >= k2 {
        return Err(f.err(
            "sector.k2",
            format!("must be greater than sector.k1 (k1={k1}, k2={k2})"),
        ));
    }
    let bounds = SectorBounds::new(k1, k2).map_err(|e| f.err("sector.k1", e))?;

    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        step: f.opt_f64("integrator.step")?.unwrap_or(defaults.step),
        horizon: f.opt_f64("integrator.horizon")?.unwrap_or(defaults.horizon),
        mode_tol: f
            .opt_f64("integrator.mode_tol")?
            .unwrap_or(defaults.mode_tol),
        drift_budget: f
            .opt_f64("integrator.drift_budget")?
            .unwrap_or(defaults.drift_budget),
        record_stride: f
            .opt_usize("integrator.record_stride")?
            .unwrap_or(defaults.record_stride),
    };
    if !(integrator.step > 0.0) {
        return Err(f.err(
            "integrator.step",
            format!("must be > 0, got {}", integrator.step),
        ));
    }
    if !(integrator.horizon >= integrator.step) {
        return Err(f.err(
            "integrator.horizon",
            format!("must be >= integrator.step, got {}", integrator.horizon),
        ));
    }
    if !(integrator.mode_tol > 0.0) {
        return Err(f.err("integrator.mode_tol", "must be > 0"));
    }
    if !(integrator.drift_budget > 0.0) {
        return Err(f.err("integrator.drift_budget", "must be > 0"));
    }
    if integrator.record_stride == 0 {
        return Err(f.err("integrator.record_stride", "must be >= 1"));
    }

    let projection = match f.raw("projection").as_deref() {
        None | Some("on") | Some("true") => true,
        Some("off") | Some("false") => false,
        Some(other) => {
            return Err(f.err("projection", format!("expected on or off, got `{other}`")))
        }
    };

    let x = f.list("initial.x")?;
    let m = controller_dim(&controller);
    let z = f.opt_list("initial.z")?.unwrap_or_else(|| vec![0.0; m]);
    if z.len() != m {
        return Err(f.err(
            "initial.z",
            format!("expected {m} entries for this controller, got {}", z.len()),
        ));
    }
    let initial = ClosedLoopState::new(x, z[0], z[1..].to_vec());

    let metric_defaults = MetricsConfig::default();
    let metrics = MetricsConfig {
        band: f.opt_f64("metrics.band")?.unwrap_or(metric_defaults.band),
        threshold: f.opt_f64("metrics.threshold")?,
        designated_state: f
            .opt_usize("metrics.state")?
            .unwrap_or(metric_defaults.designated_state),
    };
    if !(metrics.band > 0.0 && metrics.band < 1.0) {
        return Err(f.err("metrics.band", "must lie in (0, 1)"));
    }

    let dissipativity = match f.opt_f64("dissipativity.s")? {
        None => None,
        Some(s) => {
            let bounds_list = f.list("dissipativity.state_bounds")?;
            Some(DissipativitySpec {
                triple: DissipativityTriple::new(
                    f.opt_f64("dissipativity.q")?.unwrap_or(0.0),
                    s,
                    f.opt_f64("dissipativity.r")?.unwrap_or(0.0),
                ),
                sample_box: SamplingBox::symmetric(
                    &bounds_list,
                    f.f64("dissipativity.input_bound")?,
                ),
                samples: f.opt_usize("dissipativity.samples")?.unwrap_or(10_000),
                tol: f.opt_f64("dissipativity.tol")?.unwrap_or(1e-9),
            })
        }
    };

    let config = ScenarioConfig {
        name,
        plant,
        controller,
        bounds,
        initial,
        integrator,
        projection,
        metrics,
        dissipativity,
    };
    // Build once so dimension and membership problems surface as config errors.
    let plant_model = config
        .build_plant()
        .map_err(|e| f.err("plant.kind", core_message(e)))?;
    if config.initial.x.len() != plant_model.dim() {
        return Err(f.err(
            "initial.x",
            format!(
                "expected {} entries for this plant, got {}",
                plant_model.dim(),
                config.initial.x.len()
            ),
        ));
    }
    if let Some(d) = &config.dissipativity {
        if d.sample_box.state.len() != plant_model.dim() {
            return Err(f.err(
                "dissipativity.state_bounds",
                format!(
                    "expected {} entries, got {}",
                    plant_model.dim(),
                    d.sample_box.state.len()
                ),
            ));
        }
    }
    if config.metrics.designated_state >= config.initial.len() {
        return Err(f.err(
            "metrics.state",
            format!(
                "index out of range for a state of length {}",
                config.initial.len()
            ),
        ));
    }
    config
        .build_controller()
        .map_err(|e| f.err("controller.kind", core_message(e)))?;
    if config.projection && !matches!(config.controller, ControllerSpec::StaticGain { .. }) {
        let v = plant_model.output(&config.initial.x);
        if classify_mode(
            &config.bounds,
            v,
            config.initial.z1,
            config.integrator.mode_tol,
        ) == BoundaryMode::Outside
        {
            return Err(f.err(
                "initial.z",
                format!(
                    "initial state lies outside the sector set (v={v}, z1={}, residual={:e})",
                    config.initial.z1,
                    sector_residual(&config.bounds, v, config.initial.z1)
                ),
            ));
        }
    }
    f.finish()?;
    Ok(config)
}

fn core_message(e: PbcError) -> String {
    match e {
        PbcError::Config(msg) => msg,
        other => other.to_string(),
    }
}

fn controller_dim(spec: &ControllerSpec) -> usize {
    match spec {
        ControllerSpec::Linear { b, .. } => b.len().max(1),
        ControllerSpec::ToraC2 => 2,
        ControllerSpec::StaticGain { .. } => 1,
    }
}

impl ScenarioConfig {
    pub fn build_plant(&self) -> Result<Arc<dyn PlantModel>, PbcError> {
        Ok(match &self.plant {
            PlantSpec::Msd => Arc::new(msd_model()),
            PlantSpec::Tora { epsilon, h0, h1 } => Arc::new(tora_model(*epsilon, *h0, *h1)?),
            PlantSpec::Lti { a, b, g, p } => Arc::new(lti_model(a, b, g, p.as_deref())?),
        })
    }

    pub fn build_controller(&self) -> Result<Arc<dyn ControllerModel>, PbcError> {
        Ok(match &self.controller {
            ControllerSpec::Linear { a, b } => Arc::new(linear_controller(a, b)?),
            ControllerSpec::ToraC2 => Arc::new(tora_c2_controller()),
            ControllerSpec::StaticGain { k } => Arc::new(static_gain_controller(*k)?),
        })
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario::new(
            self.build_plant()?,
            self.build_controller()?,
            self.bounds,
            self.initial.clone(),
            self.integrator,
            self.projection,
        )
        .map_err(|e| CliError::Config(format!("{}: {}", self.name, core_message(e))))
    }
}
