use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::oracle::MAX_ATOMS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    NPlus,
    NMinus,
    NTot,
    NOutPlus,
    NOutMinus,
    NOutTot,
    PhiPlus,
    PhiMinus,
    RelativePhase,
    Eigenvalues,
    W,
    NLoss,
    MeanS,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::NPlus => "n_plus",
            Quantity::NMinus => "n_minus",
            Quantity::NTot => "n_tot",
            Quantity::NOutPlus => "n_out_plus",
            Quantity::NOutMinus => "n_out_minus",
            Quantity::NOutTot => "n_out_tot",
            Quantity::PhiPlus => "phi_plus",
            Quantity::PhiMinus => "phi_minus",
            Quantity::RelativePhase => "relative_phase",
            Quantity::Eigenvalues => "eigenvalues",
            Quantity::W => "w",
            Quantity::NLoss => "n_loss",
            Quantity::MeanS => "mean_s",
        }
    }

    /// Output columns with their unit annotations.
    pub fn columns(self) -> Vec<String> {
        let simple = |unit: &str| vec![format!("{}[{unit}]", self.name())];
        match self {
            // intracavity photons per resonantly driven empty cavity
            Quantity::NPlus | Quantity::NMinus | Quantity::NTot => simple("4eps^2/kappa"),
            // output photon flux per input flux
            Quantity::NOutPlus | Quantity::NOutMinus | Quantity::NOutTot | Quantity::W | Quantity::NLoss => {
                simple("eps^2")
            }
            Quantity::PhiPlus | Quantity::PhiMinus | Quantity::RelativePhase => simple("rad"),
            Quantity::Eigenvalues => ["E1+", "E1-", "E2+", "E2-"]
                .iter()
                .flat_map(|l| [format!("{l}_re[gamma]"), format!("{l}_im[gamma]")])
                .collect(),
            Quantity::MeanS => vec!["mean_s[N]".into(), "mean_s_stderr[N]".into()],
        }
    }

    /// Observables only the closed-form engine provides.
    fn analytic_only(self) -> bool {
        matches!(self, Quantity::Eigenvalues | Quantity::W | Quantity::NLoss | Quantity::MeanS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Delta,
    DeltaAc,
    SMagnitude,
    Nc,
    KappaInRatio,
    Sigma,
    ArgS,
    NAtoms,
}

impl AxisName {
    pub fn header(self) -> &'static str {
        match self {
            AxisName::Delta => "delta[gamma]",
            AxisName::DeltaAc => "delta_ac[gamma]",
            AxisName::SMagnitude => "s_magnitude[1]",
            AxisName::Nc => "nc[1]",
            AxisName::KappaInRatio => "kappa_in_ratio[1]",
            AxisName::Sigma => "sigma[lambda]",
            AxisName::ArgS => "arg_s[rad]",
            AxisName::NAtoms => "n_atoms[1]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(name: AxisName, start: f64, stop: f64, points: usize) -> Self {
        Self {
            name,
            start,
            stop,
            points,
            spacing: Spacing::Linear,
        }
    }

    /// Grid values; atom counts are rounded to the nearest integer.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        let raw = (0..self.points).map(|i| {
            let t = i as f64 / last;
            match self.spacing {
                Spacing::Linear => self.start + t * (self.stop - self.start),
                Spacing::Log => self.start * (self.stop / self.start).powf(t),
            }
        });
        match self.name {
            AxisName::NAtoms => raw.map(f64::round).collect(),
            _ => raw.collect(),
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        let err = |message: String| Err(config_error(path, message));
        if self.points < 2 {
            return err(format!("needs at least 2 points, got {}", self.points));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return err("range must be finite".into());
        }
        if self.spacing == Spacing::Log && !(self.start * self.stop > 0.0) {
            return err("log spacing needs a range of one sign, excluding 0".into());
        }
        let nonnegative = matches!(
            self.name,
            AxisName::SMagnitude | AxisName::Nc | AxisName::KappaInRatio | AxisName::Sigma
        );
        if nonnegative && self.start.min(self.stop) < 0.0 {
            return err(format!("`{}` cannot be negative", self.header_name()));
        }
        if self.name == AxisName::KappaInRatio && self.start.max(self.stop) > 1.0 {
            return err("kappa_in_ratio must lie in [0, 1]".into());
        }
        if self.name == AxisName::NAtoms && self.start.min(self.stop) < 0.5 {
            return err("n_atoms must be at least 1".into());
        }
        Ok(())
    }

    fn header_name(&self) -> &'static str {
        self.name.header().split('[').next().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Analytic,
    Meanfield,
    Oracle,
}

/// What stays fixed while δ is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hold {
    /// Cavity-atom detuning stays put; the drive moves relative to both.
    #[default]
    DeltaAc,
    /// Drive-atom detuning Δ = δ + Δ_ac stays put; Δ_ac follows δ.
    AtomDetuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSpec {
    pub n_atoms: usize,
    /// |S|/N of the generated chain.
    pub s_ratio: f64,
    pub arg_s: f64,
    /// Explicit positions in λ; overrides the three fields above.
    pub positions: Option<Vec<f64>>,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            n_atoms: 10,
            s_ratio: 1.0,
            arg_s: 0.0,
            positions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderSettings {
    /// Position spread in λ.
    pub sigma: f64,
    pub samples: usize,
}

impl Default for DisorderSettings {
    fn default() -> Self {
        // 20 nm at 780 nm
        Self {
            sigma: 20.0 / 780.0,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fixed {
    pub params: SystemParams,
    pub chain: ChainSpec,
    pub disorder: DisorderSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Quantity),
    Many(Vec<Quantity>),
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Quantity>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(q) => vec![q],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// One observable or a list of them.
    #[serde(deserialize_with = "one_or_many")]
    pub quantity: Vec<Quantity>,
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    #[serde(default)]
    pub fixed: Fixed,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hold: Hold,
}

pub(crate) fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ScanConfig {
    /// Parses and validates a JSON document. Errors carry the key path of
    /// the offending entry.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn axes(&self) -> Vec<&Axis> {
        std::iter::once(&self.axis1).chain(self.axis2.as_ref()).collect()
    }

    pub fn row_count(&self) -> usize {
        self.axes().iter().map(|a| a.points).product()
    }

    fn has_axis(&self, name: AxisName) -> bool {
        self.axes().iter().any(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantity.is_empty() {
            return Err(config_error("quantity", "no observable requested"));
        }
        self.axis1.validate("axis1")?;
        if let Some(a) = &self.axis2 {
            a.validate("axis2")?;
            if a.name == self.axis1.name {
                return Err(config_error("axis2.name", "both axes sweep the same parameter"));
            }
        }
        self.fixed
            .params
            .validate()
            .map_err(|e| config_error("fixed.params", e.to_string()))?;

        let chain = &self.fixed.chain;
        if let Some(positions) = &chain.positions {
            if positions.is_empty() || positions.iter().any(|x| !x.is_finite()) {
                return Err(config_error("fixed.chain.positions", "need finite positions"));
            }
            for name in [AxisName::SMagnitude, AxisName::ArgS, AxisName::NAtoms] {
                if self.has_axis(name) {
                    return Err(config_error(
                        "fixed.chain.positions",
                        format!("explicit positions cannot be combined with a `{}` axis", name.header()),
                    ));
                }
            }
        } else {
            if chain.n_atoms == 0 {
                return Err(config_error("fixed.chain.n_atoms", "need at least one atom"));
            }
            if !(0.0..=1.0).contains(&chain.s_ratio) {
                return Err(config_error("fixed.chain.s_ratio", "must lie in [0, 1]"));
            }
        }
        let d = &self.fixed.disorder;
        if !(d.sigma >= 0.0) || !d.sigma.is_finite() {
            return Err(config_error("fixed.disorder.sigma", "must be a non-negative number"));
        }
        if d.samples == 0 {
            return Err(config_error("fixed.disorder.samples", "need at least one sample"));
        }

        if self.has_axis(AxisName::Sigma) && !self.quantity.contains(&Quantity::MeanS) {
            return Err(config_error("axis1.name", "a `sigma` axis only affects `mean_s`"));
        }
        if self.hold == Hold::AtomDetuning && self.has_axis(AxisName::DeltaAc) {
            return Err(config_error("hold", "cannot hold δ + Δ_ac while sweeping Δ_ac"));
        }
        if self.engine != Engine::Analytic {
            if let Some(q) = self.quantity.iter().find(|q| q.analytic_only()) {
                return Err(config_error(
                    "engine",
                    format!("`{}` is only available from the analytic engine", q.name()),
                ));
            }
            if !(self.fixed.params.epsilon > 0.0) {
                return Err(config_error("fixed.params.epsilon", "dynamical engines need a nonzero drive"));
            }
        }
        if self.engine == Engine::Oracle {
            let largest = match (&chain.positions, self.axes().iter().find(|a| a.name == AxisName::NAtoms)) {
                (Some(p), _) => p.len(),
                (None, Some(axis)) => axis.start.max(axis.stop).round() as usize,
                (None, None) => chain.n_atoms,
            };
            if largest > MAX_ATOMS {
                return Err(config_error(
                    "engine",
                    format!("the oracle handles at most {MAX_ATOMS} atoms, scan reaches {largest}"),
                ));
            }
        }
        Ok(())
    }
}
