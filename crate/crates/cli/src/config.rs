//! Run configuration: a TOML file with `[system]`, `[model]`, `[probe]` and
//! `[run]` sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kaalab::biomodel::{BioModelSpec, HarvestSpec, History, NonlinearitySpec};
use kaalab::dichotomy::Projection;
use kaalab::signal::{MatrixSignal, ScalarSignal};
use serde::Deserialize;

use crate::CliError;

/// A number or an expression string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl Value {
    pub fn text(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:?}"),
            Value::Text(s) => s.clone(),
        }
    }

    fn signal(&self, key: &str) -> Result<ScalarSignal, CliError> {
        ScalarSignal::parse(&self.text()).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSection>,
    pub model: Option<ModelSection>,
    pub probe: Option<ProbeSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub dim: Option<usize>,
    /// Rows of expression strings.
    #[serde(rename = "A")]
    pub a: Option<Vec<Vec<Value>>>,
    /// Shorthand for a diagonal `A`.
    pub diag: Option<Vec<Value>>,
    #[serde(rename = "P")]
    pub p: Option<Vec<Vec<f64>>>,
    pub alpha: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub signal: Option<Value>,
    pub frequencies: Option<Vec<f64>>,
    pub shifts: Option<Vec<f64>>,
    pub count: Option<usize>,
    pub cap: Option<u64>,
    pub tol: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub grid_points: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub tol_uc: Option<f64>,
    pub base_points: Option<Vec<[f64; 2]>>,
    pub pairs: Option<Vec<[f64; 2]>>,
    pub tail_gap: Option<f64>,
    pub input: Option<Vec<Value>>,
    pub operator: Option<String>,
    pub conv_tol: Option<f64>,
    pub sup_u: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub span: Option<[f64; 2]>,
    pub h_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub margin: Option<f64>,
    pub segment: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelSection {
    pub n: Option<usize>,
    pub alpha: Value,
    pub b: Value,
    pub sigma: Value,
    pub beta: Option<Vec<Value>>,
    pub lambda: Option<Vec<Value>>,
    pub tau: Option<Vec<Value>>,
    pub nonlinearity: Option<Vec<String>>,
    pub harvest: Value,
    #[serde(rename = "L_H")]
    pub l_h: Option<f64>,
    pub history: Option<Value>,
    pub tau_low: Option<f64>,
    pub t0: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub n_points: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub random_histories: Option<usize>,
    /// Indexed keys such as `beta_1`.
    #[serde(flatten)]
    pub indexed: BTreeMap<String, toml::Value>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut cfg = parse(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(config_err(format!("{key} must be positive, got {x}")))
        }
        _ => Ok(()),
    }
}

fn interval(key: &str, v: Option<[f64; 2]>) -> Result<(), CliError> {
    match v {
        Some([a, b]) if !(a < b && a.is_finite() && b.is_finite()) => {
            Err(config_err(format!("{key} = [{a}, {b}] is not an interval")))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        positive("run.h_max", self.run.h_max)?;
        positive("run.margin", self.run.margin)?;
        positive("run.segment", self.run.segment)?;
        interval("run.span", self.run.span)?;
        if let Some(p) = &self.probe {
            positive("probe.tol", p.tol)?;
            positive("probe.tol_uc", p.tol_uc)?;
            positive("probe.tail_gap", p.tail_gap)?;
            positive("probe.conv_tol", p.conv_tol)?;
            interval("probe.window", p.window)?;
            if let Some(op) = &p.operator {
                if op != "g1" && op != "g2" {
                    return Err(config_err(format!(
                        "probe.operator must be g1 or g2, got {op}"
                    )));
                }
            }
        }
        if let Some(s) = &self.system {
            positive("system.alpha", s.alpha)?;
            positive("system.K", s.k)?;
            self.matrix()?;
        }
        if let Some(m) = &self.model {
            positive("model.tol", m.tol)?;
            positive("model.step", m.step)?;
            positive("model.tau_low", m.tau_low)?;
            interval("model.window", m.window)?;
            self.model_spec()?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<&SystemSection, CliError> {
        self.system
            .as_ref()
            .ok_or_else(|| config_err("missing [system] section"))
    }

    pub fn probe(&self) -> Result<&ProbeSection, CliError> {
        self.probe
            .as_ref()
            .ok_or_else(|| config_err("missing [probe] section"))
    }

    pub fn model(&self) -> Result<&ModelSection, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| config_err("missing [model] section"))
    }

    pub fn matrix(&self) -> Result<MatrixSignal, CliError> {
        let s = self.system()?;
        let m = match (&s.a, &s.diag) {
            (Some(rows), None) => {
                let rows: Vec<Vec<String>> = rows
                    .iter()
                    .map(|r| r.iter().map(Value::text).collect())
                    .collect();
                MatrixSignal::parse_rows(&rows)
            }
            (None, Some(d)) => {
                MatrixSignal::diagonal(&d.iter().map(Value::text).collect::<Vec<_>>())
            }
            _ => return Err(config_err("[system] needs exactly one of A or diag")),
        }
        .map_err(|e| config_err(format!("system.A: {e}")))?;
        if let Some(n) = s.dim {
            if n != m.dim() {
                return Err(config_err(format!(
                    "system.dim = {n} but A is {0}x{0}",
                    m.dim()
                )));
            }
        }
        Ok(m)
    }

    /// `P` as configured, or the spectral projection of a constant `A`.
    pub fn projection(&self, a: &MatrixSignal) -> Result<Projection, CliError> {
        match &self.system()?.p {
            Some(rows) => {
                if rows.len() != a.dim() {
                    return Err(config_err("system.P does not match the dimension of A"));
                }
                Projection::from_rows(rows).map_err(|e| config_err(format!("system.P: {e}")))
            }
            None if a.is_constant() => Projection::spectral(&a.eval(0.0))
                .map_err(|e| config_err(format!("spectral projection: {e}"))),
            None => Err(config_err("system.P is required when A is not constant")),
        }
    }

    pub fn span(&self) -> (f64, f64) {
        let [a, b] = self.run.span.unwrap_or([-5.0, 5.0]);
        (a, b)
    }

    pub fn model_spec(&self) -> Result<BioModelSpec, CliError> {
        let m = self.model()?;
        let list = |name: &str, arr: &Option<Vec<Value>>| -> Result<Vec<Value>, CliError> {
            let mut out = arr.clone().unwrap_or_default();
            for i in 1.. {
                match m.indexed.get(&format!("{name}_{i}")) {
                    Some(v) => out.push(toml_value(name, i, v)?),
                    None => break,
                }
            }
            Ok(out)
        };
        let beta = list("beta", &m.beta)?;
        let lambda = list("lambda", &m.lambda)?;
        let tau = list("tau", &m.tau)?;
        let kinds = list(
            "nonlinearity",
            &m.nonlinearity
                .as_ref()
                .map(|v| v.iter().cloned().map(Value::Text).collect()),
        )?;
        for key in m.indexed.keys() {
            let known = ["beta_", "lambda_", "tau_", "nonlinearity_"]
                .iter()
                .any(|p| {
                    key.strip_prefix(p)
                        .is_some_and(|r| r.parse::<usize>().is_ok())
                });
            if !known {
                return Err(config_err(format!("unknown key model.{key}")));
            }
        }
        let n = m.n.unwrap_or(beta.len());
        if n == 0
            || [beta.len(), lambda.len(), tau.len(), kinds.len()]
                .iter()
                .any(|&l| l != n)
        {
            return Err(config_err(format!(
                "model needs n = {n} entries each of beta, lambda, tau and nonlinearity"
            )));
        }
        let mut terms = Vec::with_capacity(n);
        for i in 0..n {
            terms.push((
                beta[i].signal(&format!("beta_{}", i + 1))?,
                lambda[i].signal(&format!("lambda_{}", i + 1))?,
                tau[i].signal(&format!("tau_{}", i + 1))?,
                self.nonlinearity(&kinds[i].text())?,
            ));
        }
        let harvest = HarvestSpec::new(&m.harvest.text(), m.l_h.unwrap_or(0.0))
            .map_err(|e| config_err(format!("harvest: {e}")))?;
        if harvest.expr.expr().has_var() && m.l_h.is_none() {
            return Err(config_err(
                "L_H is required when the harvest term depends on u",
            ));
        }
        let mut spec = BioModelSpec::new(
            m.alpha.signal("alpha")?,
            m.b.signal("b")?,
            m.sigma.signal("sigma")?,
            terms,
            harvest,
        );
        if let Some(t) = m.tau_low {
            spec = spec.with_tau_low(t);
        }
        spec.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(spec)
    }

    fn nonlinearity(&self, kind: &str) -> Result<NonlinearitySpec, CliError> {
        let err = |e: kaalab::Error| config_err(format!("nonlinearity {kind}: {e}"));
        match kind.split_once(':') {
            None if kind == "nicholson" => Ok(NonlinearitySpec::nicholson()),
            None if kind == "lasota" => Ok(NonlinearitySpec::lasota_wazewska()),
            Some(("mackey", m)) => {
                let m: f64 = m
                    .trim()
                    .parse()
                    .map_err(|_| config_err(format!("bad Mackey-Glass exponent in {kind}")))?;
                NonlinearitySpec::mackey_glass(m).map_err(err)
            }
            Some(("custom", file)) => {
                let path = self.base_dir.join(file.trim());
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                NonlinearitySpec::custom(text.trim()).map_err(err)
            }
            _ => Err(config_err(format!(
                "unknown nonlinearity {kind} (nicholson, lasota, mackey:m, custom:file)"
            ))),
        }
    }

    pub fn history(&self, spec: &BioModelSpec) -> Result<History, CliError> {
        let m = self.model()?;
        let text = m
            .history
            .as_ref()
            .ok_or_else(|| config_err("model.history is required"))?
            .text();
        History::parse(&text, spec.max_delay()).map_err(|e| config_err(format!("history: {e}")))
    }
}

fn toml_value(name: &str, i: usize, v: &toml::Value) -> Result<Value, CliError> {
    match v {
        toml::Value::String(s) => Ok(Value::Text(s.clone())),
        toml::Value::Float(x) => Ok(Value::Num(*x)),
        toml::Value::Integer(x) => Ok(Value::Num(*x as f64)),
        _ => Err(config_err(format!(
            "{name}_{i} must be a number or a string"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexed_and_array_keys_agree() {
        let a = parse(
            r#"
            [model]
            alpha = 1
            b = 1
            sigma = 0.5
            beta = [1]
            lambda = [1]
            tau = [1]
            nonlinearity = ["nicholson"]
            harvest = 1
            "#,
        )
        .unwrap();
        let b = parse(
            r#"
            [model]
            n = 1
            alpha = "1"
            b = "1"
            sigma = "0.5"
            beta_1 = "1"
            lambda_1 = 1
            tau_1 = 1.0
            nonlinearity_1 = "nicholson"
            harvest = "1"
            "#,
        )
        .unwrap();
        let (sa, sb) = (a.model_spec().unwrap(), b.model_spec().unwrap());
        assert_eq!(sa.bars(), sb.bars());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_tolerances() {
        assert!(parse("[run]\nfoo = 1").is_err());
        assert!(parse("[probe]\ntol = -1").is_err());
        let bad = parse(
            "[model]\nalpha = 1\nb = 1\nsigma = 1\nbeta = [1]\nlambda = [1]\ntau = [1]\nnonlinearity = [\"nicholson\"]\nharvest = 1\ngamma_1 = 2",
        );
        assert!(matches!(bad, Err(CliError::Config(m)) if m.contains("gamma_1")));
    }

    #[test]
    fn syntax_errors_report_offsets() {
        let e = parse("[system]\ndiag = [\"-1 + \", \"1\"]").unwrap_err();
        match e {
            CliError::Config(m) => assert!(m.contains("byte"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_defaults_to_spectral_for_constant_systems() {
        let cfg = parse("[system]\nA = [[\"-1\", \"2\"], [\"0\", \"1\"]]").unwrap();
        let a = cfg.matrix().unwrap();
        let p = cfg.projection(&a).unwrap();
        assert!(p.defect() < 1e-12);
        let tv = parse("[system]\ndiag = [\"-1 + 0.1*sin(t)\", \"1\"]").unwrap();
        assert!(tv.projection(&tv.matrix().unwrap()).is_err());
    }
}
