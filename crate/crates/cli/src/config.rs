//! Run configuration and its key-value document grammar.
//!
//! ```text
//! # comment
//! scenario = transfer
//! t_end = 3840
//!
//! [params]
//! v2 = 0.001        # v1 follows from the scenario's rate relation
//! ```
//!
//! Keys may appear at top level or inside the section they belong to.
//! Unknown keys, repeated keys and malformed lines are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use squid_core::ladder::{FullSolver, LadderParams};
use squid_core::scenarios::ScenarioKind;
use squid_core::{Amplitudes, IntegratorConfig, ModelParams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    PairGeneration,
    Transfer,
    LadderCompare,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 4] =
        [Scenario::PairGeneration, Scenario::Transfer, Scenario::LadderCompare, Scenario::Custom];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::PairGeneration => "pair-generation",
            Scenario::Transfer => "transfer",
            Scenario::LadderCompare => "ladder-compare",
            Scenario::Custom => "custom",
        }
    }

    pub fn kind(self) -> Option<ScenarioKind> {
        match self {
            Scenario::PairGeneration => Some(ScenarioKind::PairGeneration),
            Scenario::Transfer => Some(ScenarioKind::Transfer),
            Scenario::Custom => Some(ScenarioKind::Custom),
            Scenario::LadderCompare => None,
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            format!("unknown scenario `{s}` (expected pair-generation, transfer, ladder-compare or custom)")
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = Formats { csv: false, json: false };
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                other => return Err(format!("unknown format `{other}` (expected csv, json)")),
            }
        }
        if !(f.csv || f.json) {
            return Err("at least one output format is required".into());
        }
        Ok(f)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSettings {
    pub g: f64,
    pub delta: f64,
    pub omega_photon: f64,
    pub compensate_stark: bool,
    pub samples: usize,
    pub solver: FullSolver,
}

impl Default for LadderSettings {
    fn default() -> Self {
        Self {
            g: 1.0,
            delta: 100.0,
            omega_photon: 500.0,
            compensate_stark: true,
            samples: 20_000,
            solver: FullSolver::Integrated,
        }
    }
}

impl LadderSettings {
    pub fn params(&self) -> Result<LadderParams, squid_core::Error> {
        Ok(LadderParams::from_detuning(self.g, self.delta, self.omega_photon)?.with_compensation(self.compensate_stark))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    pub t_end: f64,
    pub sample_interval: f64,
    /// Initial amplitudes; fixed by the scenario except for `custom`.
    pub initial_state: Amplitudes,
    pub ladder: LadderSettings,
    pub out_dir: PathBuf,
    pub formats: Formats,
    pub seed: u64,
    pub cases: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        resolve(&BTreeMap::new()).expect("defaults are valid")
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Section {
    Run,
    Params,
    Integrator,
    Ladder,
    Output,
    Validate,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "run" => Section::Run,
            "params" => Section::Params,
            "integrator" => Section::Integrator,
            "ladder" => Section::Ladder,
            "output" => Section::Output,
            "validate" => Section::Validate,
            _ => return None,
        })
    }
}

const KEYS: &[(&str, Section)] = &[
    ("scenario", Section::Run),
    ("t_end", Section::Run),
    ("sample_interval", Section::Run),
    ("initial_state", Section::Run),
    ("Omega", Section::Params),
    ("Omega_a", Section::Params),
    ("Omega_b", Section::Params),
    ("omega_a", Section::Params),
    ("omega_b", Section::Params),
    ("omega01_0", Section::Params),
    ("omega20_0", Section::Params),
    ("omega00", Section::Params),
    ("v1", Section::Params),
    ("v2", Section::Params),
    ("rtol", Section::Integrator),
    ("atol", Section::Integrator),
    ("initial_step", Section::Integrator),
    ("max_step", Section::Integrator),
    ("max_steps", Section::Integrator),
    ("sample_drift_bound", Section::Integrator),
    ("final_drift_bound", Section::Integrator),
    ("g", Section::Ladder),
    ("Delta", Section::Ladder),
    ("omega_photon", Section::Ladder),
    ("compensate_stark", Section::Ladder),
    ("ladder_samples", Section::Ladder),
    ("ladder_solver", Section::Ladder),
    ("out", Section::Output),
    ("formats", Section::Output),
    ("seed", Section::Validate),
    ("cases", Section::Validate),
];

fn section_of(key: &str) -> Option<Section> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, s)| *s)
}

/// A raw assignment with the line it came from (`None` for command-line
/// overrides).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: Option<usize>,
}

pub type Assignments = BTreeMap<String, Entry>;

/// Read the document into raw assignments, checking syntax and key names.
pub fn parse_assignments(text: &str) -> Result<Assignments, ConfigError> {
    let mut out = Assignments::new();
    let mut section: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let n = Some(idx + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(n, format!("malformed section header `{line}`")))?
                .trim();
            section =
                Some(Section::parse(name).ok_or_else(|| ConfigError::at(n, format!("unknown section `[{name}]`")))?);
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| ConfigError::at(n, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::at(n, format!("invalid key `{key}`")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(n, format!("missing value for `{key}`")));
        }
        let home = section_of(key).ok_or_else(|| ConfigError::at(n, format!("unknown key `{key}`")))?;
        if let Some(s) = section {
            if s != home {
                return Err(ConfigError::at(n, format!("key `{key}` does not belong in this section")));
            }
        }
        if let Some(prev) = out.get(key) {
            return Err(ConfigError::at(
                n,
                format!("duplicate key `{key}` (first set on line {})", prev.line.unwrap_or(0)),
            ));
        }
        out.insert(key.to_string(), Entry { value: value.to_string(), line: n });
    }
    Ok(out)
}

/// Apply a `key=value` command-line override on top of parsed assignments.
/// A `section.key` prefix is accepted and checked.
pub fn apply_override(assignments: &mut Assignments, spec: &str) -> Result<(), ConfigError> {
    let (key, value) =
        spec.split_once('=').ok_or_else(|| ConfigError::at(None, format!("override `{spec}` is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    let key = match key.split_once('.') {
        Some((sec, k)) => {
            let s = Section::parse(sec).ok_or_else(|| ConfigError::at(None, format!("unknown section `{sec}`")))?;
            if section_of(k) != Some(s) {
                return Err(ConfigError::at(None, format!("unknown key `{key}`")));
            }
            k
        }
        None => key,
    };
    if section_of(key).is_none() {
        return Err(ConfigError::at(None, format!("unknown key `{key}`")));
    }
    if value.is_empty() {
        return Err(ConfigError::at(None, format!("missing value for `{key}`")));
    }
    assignments.insert(key.to_string(), Entry { value: value.to_string(), line: None });
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    resolve(&parse_assignments(text)?)
}

struct Reader<'a> {
    map: &'a Assignments,
}

impl Reader<'_> {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<(T, Option<usize>)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|err| ConfigError::at(e.line, format!("invalid value `{}` for `{key}`: {err}", e.value))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<(f64, Option<usize>)>, ConfigError> {
        let v = self.get::<f64>(key)?;
        if let Some((x, line)) = v {
            if !x.is_finite() {
                return Err(ConfigError::at(line, format!("`{key}` must be finite, got {x}")));
            }
        }
        Ok(v)
    }

    fn real_into(&self, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
        if let Some((v, _)) = self.real(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).and_then(|e| e.line)
    }
}

fn require(cond: bool, line: Option<usize>, msg: String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::at(line, msg))
    }
}

fn parse_initial_state(text: &str) -> Result<Amplitudes, String> {
    match text {
        "single-photon" => return Ok(Amplitudes::single_photon()),
        "squid-bell" => return Ok(Amplitudes::squid_bell()),
        "field-bell" => return Ok(Amplitudes::field_bell()),
        _ => {}
    }
    let nums: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    if nums.len() != 8 {
        return Err(format!(
            "expected single-photon, squid-bell, field-bell or 8 comma-separated numbers (re,im of c1..c4), got {} numbers",
            nums.len()
        ));
    }
    let c = Amplitudes(std::array::from_fn(|k| C64::new(nums[2 * k], nums[2 * k + 1])));
    c.check_normalized(squid_core::state::NORM_TOL).map_err(|e| e.to_string())?;
    Ok(c)
}

/// Turn raw assignments into a validated configuration, filling scenario
/// defaults and the scenario's chirp-rate relation.
pub fn resolve(map: &Assignments) -> Result<RunConfig, ConfigError> {
    let r = Reader { map };
    let scenario = r.get::<Scenario>("scenario")?.map(|(s, _)| s).unwrap_or(Scenario::PairGeneration);
    let kind = scenario.kind().unwrap_or(ScenarioKind::PairGeneration);

    let mut p = kind.default_params();
    r.real_into("Omega", &mut p.omega)?;
    r.real_into("Omega_a", &mut p.omega_a)?;
    r.real_into("Omega_b", &mut p.omega_b)?;
    r.real_into("omega_a", &mut p.freq_a)?;
    r.real_into("omega_b", &mut p.freq_b)?;
    r.real_into("omega01_0", &mut p.omega01_0)?;
    r.real_into("omega20_0", &mut p.omega20_0)?;
    r.real_into("omega00", &mut p.omega00)?;
    let v1 = r.real("v1")?;
    let v2 = r.real("v2")?;
    // ratio v1 / v2 imposed by the scenario
    let ratio = match scenario {
        Scenario::PairGeneration => Some(1.0),
        Scenario::Transfer => Some(2.0),
        _ => None,
    };
    match (v1, v2, ratio) {
        (Some((a, _)), None, Some(k)) => {
            p.v1 = a;
            p.v2 = a / k;
        }
        (None, Some((b, _)), Some(k)) => {
            p.v2 = b;
            p.v1 = k * b;
        }
        (Some((a, la)), Some((b, _)), Some(k)) => {
            require(
                (a - k * b).abs() <= 1e-12 * a.abs().max(b.abs()),
                la,
                format!("scenario {} requires v1 = {k} v2, got v1 = {a}, v2 = {b}", scenario.name()),
            )?;
            p.v1 = a;
            p.v2 = b;
        }
        (a, b, None) => {
            if let Some((a, _)) = a {
                p.v1 = a;
            }
            if let Some((b, _)) = b {
                p.v2 = b;
            }
        }
        (None, None, Some(_)) => {}
    }
    for (key, v) in [("Omega", p.omega), ("Omega_a", p.omega_a), ("Omega_b", p.omega_b), ("v1", p.v1), ("v2", p.v2)] {
        require(v >= 0.0, r.line(key), format!("`{key}` must be >= 0, got {v}"))?;
    }
    if scenario == Scenario::PairGeneration {
        require(
            p.v1 > 0.0,
            r.line("v1").or(r.line("v2")),
            format!("pair-generation requires v1 = v2 > 0, got {}", p.v1),
        )?;
    }

    let mut cfg = IntegratorConfig::default();
    let mut sample_interval = cfg.sample_interval;
    if let Some((v, line)) = r.real("sample_interval")? {
        require(v > 0.0, line, format!("`sample_interval` must be > 0, got {v}"))?;
        sample_interval = v;
    }
    cfg.sample_interval = sample_interval;
    for (key, slot) in [
        ("rtol", &mut cfg.rtol),
        ("atol", &mut cfg.atol),
        ("max_step", &mut cfg.max_step),
        ("sample_drift_bound", &mut cfg.sample_drift_bound),
        ("final_drift_bound", &mut cfg.final_drift_bound),
    ] {
        if let Some((v, line)) = r.real(key)? {
            require(v > 0.0, line, format!("`{key}` must be > 0, got {v}"))?;
            *slot = v;
        }
    }
    if let Some((v, line)) = r.real("initial_step")? {
        require(v > 0.0, line, format!("`initial_step` must be > 0, got {v}"))?;
        cfg.initial_step = Some(v);
    }
    if let Some((v, line)) = r.get::<u64>("max_steps")? {
        require(v > 0, line, "`max_steps` must be > 0".into())?;
        cfg.max_steps = v;
    }
    cfg.validate().map_err(|e| ConfigError::at(None, e.to_string()))?;

    let mut ladder = LadderSettings::default();
    if let Some((v, line)) = r.real("g")? {
        require(v >= 0.0, line, format!("`g` must be >= 0, got {v}"))?;
        ladder.g = v;
    }
    if let Some((v, line)) = r.real("Delta")? {
        require(v != 0.0, line, "`Delta` must be nonzero".into())?;
        ladder.delta = v;
    }
    r.real_into("omega_photon", &mut ladder.omega_photon)?;
    if let Some((v, _)) = r.get::<bool>("compensate_stark")? {
        ladder.compensate_stark = v;
    }
    if let Some((v, line)) = r.get::<usize>("ladder_samples")? {
        require(v >= 2, line, format!("`ladder_samples` must be >= 2, got {v}"))?;
        ladder.samples = v;
    }
    if let Some((v, line)) = r.get::<String>("ladder_solver")? {
        ladder.solver = match v.as_str() {
            "integrated" => FullSolver::Integrated,
            "exact" => FullSolver::Exact,
            other => {
                return Err(ConfigError::at(
                    line,
                    format!("unknown ladder_solver `{other}` (expected integrated, exact)"),
                ))
            }
        };
    }

    let t_end = match r.real("t_end")? {
        Some((v, line)) => {
            require(v > 0.0, line, format!("`t_end` must be > 0, got {v}"))?;
            v
        }
        None => match scenario {
            Scenario::LadderCompare => {
                let lp = ladder.params().map_err(|e| ConfigError::at(None, e.to_string()))?;
                require(ladder.g > 0.0, r.line("g"), "ladder-compare needs g > 0 or an explicit t_end".into())?;
                lp.effective_period()
            }
            _ => kind.default_t_end(),
        },
    };

    let initial_state = match r.get::<String>("initial_state")? {
        Some((text, line)) => {
            require(
                scenario == Scenario::Custom,
                line,
                format!("`initial_state` is fixed by scenario {}; use scenario = custom", scenario.name()),
            )?;
            parse_initial_state(&text).map_err(|e| ConfigError::at(line, format!("invalid `initial_state`: {e}")))?
        }
        None => kind.initial_state(),
    };

    if scenario == Scenario::LadderCompare {
        ladder.params().map_err(|e| ConfigError::at(None, e.to_string()))?;
    } else {
        p.validate().map_err(|e| ConfigError::at(None, e.to_string()))?;
    }

    let out_dir = r.get::<String>("out")?.map(|(s, _)| PathBuf::from(s)).unwrap_or_else(|| PathBuf::from("out"));
    let formats = r.get::<Formats>("formats")?.map(|(f, _)| f).unwrap_or_default();
    let seed = r.get::<u64>("seed")?.map(|(s, _)| s).unwrap_or(0);
    let cases = r.get::<usize>("cases")?.map(|(s, _)| s).unwrap_or(100);

    Ok(RunConfig {
        scenario,
        params: p,
        integrator: cfg,
        t_end,
        sample_interval,
        initial_state,
        ladder,
        out_dir,
        formats,
        seed,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.scenario, Scenario::PairGeneration);
        assert_eq!(c.params, ModelParams::pair_generation());
        assert_eq!(c.t_end, squid_core::scenarios::PAIR_GENERATION_T_END);
        assert_eq!(c.initial_state, Amplitudes::single_photon());
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn transfer_rate_relation() {
        let c = parse_config("scenario = transfer\nv2 = 0.001").unwrap();
        assert_eq!(c.params.v2, 0.001);
        assert_eq!(c.params.v1, 0.002);
        let c = parse_config("scenario = transfer\nv1 = 0.001").unwrap();
        assert_eq!(c.params.v2, 0.0005);
        assert!(parse_config("scenario = transfer\nv1 = 0.001\nv2 = 0.001").is_err());
        let c = parse_config("v2 = 0.0003").unwrap();
        assert_eq!(c.params.v1, 0.0003);
    }

    #[test]
    fn negative_t_end_names_key() {
        let e = parse_config("t_end = -5").unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(e.message.contains("t_end"), "{e}");
        assert!(e.message.contains("> 0"));
    }

    #[test]
    fn strictness() {
        let e = parse_config("# header\n\nrtoll = 1e-9").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("unknown key"));
        assert!(parse_config("[params]\nrtol = 1e-9").is_err());
        assert!(parse_config("[nope]").is_err());
        assert!(parse_config("t_end 5").is_err());
        assert!(parse_config("t_end = 5\nt_end = 6").is_err());
        assert!(parse_config("t_end = abc").is_err());
        assert!(parse_config("scenario = bogus").is_err());
        assert!(parse_config("formats = xml").is_err());
        assert!(parse_config("initial_state = squid-bell").is_err());
    }

    #[test]
    fn sections_and_comments() {
        let text = "scenario = custom # trailing\n[params]\nOmega_a = 0.1\n[run]\ninitial_state = 0,0, 1,0, 0,0, 0,0\n[output]\nformats = json\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.params.omega_a, 0.1);
        assert_eq!(c.initial_state, Amplitudes::basis(1));
        assert_eq!(c.formats, Formats { csv: false, json: true });
    }

    #[test]
    fn overrides() {
        let mut a = parse_assignments("scenario = transfer").unwrap();
        apply_override(&mut a, "params.v2=0.002").unwrap();
        apply_override(&mut a, "t_end = 100").unwrap();
        assert!(apply_override(&mut a, "params.rtol=1").is_err());
        assert!(apply_override(&mut a, "bogus=1").is_err());
        let c = resolve(&a).unwrap();
        assert_eq!(c.params.v1, 0.004);
        assert_eq!(c.t_end, 100.0);
    }

    #[test]
    fn ladder_defaults_to_one_period() {
        let c = parse_config("scenario = ladder-compare\ng = 1\nDelta = 100").unwrap();
        let lp = c.ladder.params().unwrap();
        assert!((c.t_end - lp.effective_period()).abs() < 1e-9);
    }
}
