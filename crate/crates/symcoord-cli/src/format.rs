//! The model-file format: a TOML document describing spaces, initial
//! distributions, kernels, costs, an optional aggregate map, and optional
//! strategy tables.
//!
//! Scalars may be written as TOML integers, floats, or strings; string
//! scalars accept both decimal (`"0.25"`) and fraction (`"1/4"`) syntax
//! and are parsed exactly in rational mode. Fraction syntax anywhere in
//! the file forces rational mode for that model.
//!
//! Kernel, cost, and strategy rows address entries by labels; omitted
//! key fields (or `"*"`) are wildcards. The most specific matching row
//! wins, with later rows breaking ties, and the assembled tables must be
//! total.

use serde::Deserialize;
use std::collections::BTreeMap;

use symcoord_core::model::{InfoStructure, ModelParts, PrivateKey, Space};
use symcoord_core::scalar::{Rat, Scalar};
use symcoord_core::{Dist, Kernel, Strategy, TeamModel};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] symcoord_core::Error),
    #[error("fraction syntax in the model file forces rational mode")]
    FractionsForceRational,
}

type Result<T> = std::result::Result<T, LoadError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumericMode {
    Rational,
    Float,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScalarText {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ScalarText {
    fn parse<N: Scalar>(&self) -> Result<N> {
        match self {
            ScalarText::Int(n) => Ok(N::from_int(*n)),
            ScalarText::Float(x) => Ok(N::from_f64(*x)),
            ScalarText::Text(s) => {
                N::parse_text(s).map_err(|e| LoadError::Schema(e.to_string()))
            }
        }
    }

    fn is_fraction(&self) -> bool {
        matches!(self, ScalarText::Text(s) if s.contains('/'))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum IntOrStar {
    Int(usize),
    Star(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum KeySpec {
    Star(String),
    Labels(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelRow {
    t: Option<IntOrStar>,
    x: Option<String>,
    x0: Option<String>,
    u1: Option<String>,
    u2: Option<String>,
    dist: Vec<ScalarText>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostRow {
    t: Option<IntOrStar>,
    x0: Option<String>,
    x1: Option<String>,
    x2: Option<String>,
    u1: Option<String>,
    u2: Option<String>,
    value: ScalarText,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregateRow {
    u1: String,
    u2: String,
    a: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyRow {
    t: Option<IntOrStar>,
    p: KeySpec,
    c: Option<KeySpec>,
    dist: Vec<ScalarText>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: Option<String>,
    info_structure: String,
    horizon: usize,
    shared_space: Option<Vec<String>>,
    local_space: Vec<String>,
    action_space: Vec<String>,
    aggregate_space: Option<Vec<String>>,
    alpha0: Option<Vec<ScalarText>>,
    alpha: Vec<ScalarText>,
    mode: Option<String>,
    cost_default: Option<ScalarText>,
    iid_uncontrolled_local: Option<bool>,
    local_ignores_own_state: Option<bool>,
    #[serde(default)]
    shared_kernel: Vec<KernelRow>,
    #[serde(default)]
    local_kernel: Vec<KernelRow>,
    #[serde(default)]
    cost: Vec<CostRow>,
    #[serde(default)]
    aggregate: Vec<AggregateRow>,
    #[serde(default)]
    strategy: Vec<StrategyRow>,
    #[serde(default)]
    strategy2: Vec<StrategyRow>,
}

/// A parsed model plus whatever strategies the file shipped, in one
/// numeric backend.
pub struct LoadedModel<N: Scalar> {
    pub name: Option<String>,
    pub structure: InfoStructure,
    pub model: TeamModel<N>,
    pub strategy: Option<Strategy<N>>,
    pub strategy2: Option<Strategy<N>>,
}

pub enum Loaded {
    Rational(LoadedModel<Rat>),
    Float(LoadedModel<f64>),
}

impl Loaded {
    pub fn name(&self) -> Option<&str> {
        match self {
            Loaded::Rational(m) => m.name.as_deref(),
            Loaded::Float(m) => m.name.as_deref(),
        }
    }

    pub fn structure(&self) -> InfoStructure {
        match self {
            Loaded::Rational(m) => m.structure,
            Loaded::Float(m) => m.structure,
        }
    }
}

/// Parses a model document, picking the numeric backend from the CLI
/// override, the file's `mode` field, or (default) rational. Fraction
/// syntax pins rational mode; overriding it to float is an input error.
pub fn load_model(
    text: &str,
    mode_override: Option<NumericMode>,
    structure_override: Option<InfoStructure>,
) -> Result<Loaded> {
    let file: ModelFile =
        toml::from_str(text).map_err(|e| LoadError::Schema(e.to_string()))?;
    let has_fractions = file_has_fractions(&file);
    let file_mode = match file.mode.as_deref() {
        None => None,
        Some("rational") => Some(NumericMode::Rational),
        Some("float") => Some(NumericMode::Float),
        Some(other) => {
            return Err(LoadError::Schema(format!(
                "mode must be `rational` or `float`, not `{other}`"
            )))
        }
    };
    let mode = mode_override
        .or(file_mode)
        .unwrap_or(NumericMode::Rational);
    if mode == NumericMode::Float && has_fractions {
        return Err(LoadError::FractionsForceRational);
    }
    match mode {
        NumericMode::Rational => Ok(Loaded::Rational(build::<Rat>(&file, structure_override)?)),
        NumericMode::Float => Ok(Loaded::Float(build::<f64>(&file, structure_override)?)),
    }
}

fn file_has_fractions(file: &ModelFile) -> bool {
    let in_list = |v: &[ScalarText]| v.iter().any(ScalarText::is_fraction);
    file.alpha0.as_deref().is_some_and(in_list)
        || in_list(&file.alpha)
        || file.cost_default.as_ref().is_some_and(ScalarText::is_fraction)
        || file.shared_kernel.iter().any(|r| in_list(&r.dist))
        || file.local_kernel.iter().any(|r| in_list(&r.dist))
        || file.cost.iter().any(|r| r.value.is_fraction())
        || file.strategy.iter().any(|r| in_list(&r.dist))
        || file.strategy2.iter().any(|r| in_list(&r.dist))
}

struct SpaceIndex<'a> {
    space: &'a Space,
    what: &'static str,
}

impl<'a> SpaceIndex<'a> {
    fn lookup(&self, label: &Option<String>) -> Result<Option<usize>> {
        match label.as_deref() {
            None | Some("*") => Ok(None),
            Some(l) => self
                .space
                .index_of(l)
                .map(Some)
                .ok_or_else(|| LoadError::Schema(format!("unknown {} label `{l}`", self.what))),
        }
    }

    fn require(&self, label: &str) -> Result<usize> {
        self.space
            .index_of(label)
            .ok_or_else(|| LoadError::Schema(format!("unknown {} label `{label}`", self.what)))
    }
}

fn match_time(spec: &Option<IntOrStar>, t: usize) -> Result<bool> {
    match spec {
        None => Ok(true),
        Some(IntOrStar::Star(s)) if s == "*" => Ok(true),
        Some(IntOrStar::Star(s)) => Err(LoadError::Schema(format!(
            "time must be an integer or `*`, not `{s}`"
        ))),
        Some(IntOrStar::Int(spec_t)) => Ok(*spec_t == t),
    }
}

/// Wildcard match bookkeeping: counts how many components were pinned.
fn combine(matches: &[(Option<usize>, usize)]) -> Option<usize> {
    let mut specificity = 0;
    for (spec, actual) in matches {
        match spec {
            None => {}
            Some(v) if v == actual => specificity += 1,
            Some(_) => return None,
        }
    }
    Some(specificity)
}

fn build<N: Scalar>(
    file: &ModelFile,
    structure_override: Option<InfoStructure>,
) -> Result<LoadedModel<N>> {
    let native_structure = InfoStructure::from_code(&file.info_structure).ok_or_else(|| {
        LoadError::Schema(format!(
            "info_structure must be one of p1a/p1b/p1c/p1d, not `{}`",
            file.info_structure
        ))
    })?;
    let structure = structure_override.unwrap_or(native_structure);
    if file.horizon == 0 {
        return Err(LoadError::Schema("horizon must be at least 1".into()));
    }

    let shared_space = match &file.shared_space {
        Some(labels) => Space::new(labels.clone())?,
        None => Space::singleton(),
    };
    let local_space = Space::new(file.local_space.clone())?;
    let action_space = Space::new(file.action_space.clone())?;
    let aggregate_space = file
        .aggregate_space
        .as_ref()
        .map(|labels| Space::new(labels.clone()))
        .transpose()?;

    let parse_dist = |values: &[ScalarText], len: usize, what: &str| -> Result<Dist<N>> {
        if values.len() != len {
            return Err(LoadError::Schema(format!(
                "{what} needs {len} weights, got {}",
                values.len()
            )));
        }
        let weights = values
            .iter()
            .map(ScalarText::parse)
            .collect::<Result<Vec<N>>>()?;
        Dist::new(weights).map_err(LoadError::Model)
    };

    let alpha = parse_dist(&file.alpha, local_space.len(), "alpha")?;
    let alpha0 = match &file.alpha0 {
        Some(values) => parse_dist(values, shared_space.len(), "alpha0")?,
        None => {
            if shared_space.len() != 1 {
                return Err(LoadError::Schema(
                    "alpha0 is required when the shared space is not a singleton".into(),
                ));
            }
            Dist::point(1, 0)
        }
    };

    let x0_idx = SpaceIndex {
        space: &shared_space,
        what: "shared-state",
    };
    let x_idx = SpaceIndex {
        space: &local_space,
        what: "local-state",
    };
    let u_idx = SpaceIndex {
        space: &action_space,
        what: "action",
    };

    // Shared kernels: forced when the shared space is a singleton.
    let mut shared_kernels = Vec::new();
    for t in 1..file.horizon {
        let mut rows = Vec::new();
        for x0 in 0..shared_space.len() {
            for u1 in 0..action_space.len() {
                for u2 in 0..action_space.len() {
                    if shared_space.len() == 1 && file.shared_kernel.is_empty() {
                        rows.push(Dist::point(1, 0));
                        continue;
                    }
                    let mut best: Option<(usize, &KernelRow)> = None;
                    for row in &file.shared_kernel {
                        if row.x.is_some() {
                            return Err(LoadError::Schema(
                                "shared_kernel rows take no local state `x`".into(),
                            ));
                        }
                        if !match_time(&row.t, t)? {
                            continue;
                        }
                        let keys = [
                            (x0_idx.lookup(&row.x0)?, x0),
                            (u_idx.lookup(&row.u1)?, u1),
                            (u_idx.lookup(&row.u2)?, u2),
                        ];
                        if let Some(s) = combine(&keys) {
                            if best.as_ref().is_none_or(|(bs, _)| s >= *bs) {
                                best = Some((s, row));
                            }
                        }
                    }
                    let (_, row) = best.ok_or_else(|| {
                        LoadError::Schema(format!(
                            "no shared_kernel row matches (t={t}, x0={}, u1={}, u2={})",
                            shared_space.label(x0),
                            action_space.label(u1),
                            action_space.label(u2)
                        ))
                    })?;
                    let dist =
                        parse_dist(&row.dist, shared_space.len(), "shared_kernel dist").map_err(
                            |e| match e {
                                LoadError::Model(symcoord_core::Error::NotNormalized { sum }) => {
                                    LoadError::Model(
                                        symcoord_core::Error::KernelRowNotNormalized {
                                            row: format!(
                                                "shared (t={t}, x0={}, u1={}, u2={})",
                                                shared_space.label(x0),
                                                action_space.label(u1),
                                                action_space.label(u2)
                                            ),
                                            sum,
                                        },
                                    )
                                }
                                other => other,
                            },
                        )?;
                    rows.push(dist);
                }
            }
        }
        shared_kernels.push(
            Kernel::new(
                vec![shared_space.len(), action_space.len(), action_space.len()],
                rows,
            )
            .map_err(LoadError::Model)?,
        );
    }

    let mut local_kernels = Vec::new();
    for t in 1..file.horizon {
        let mut rows = Vec::new();
        for x in 0..local_space.len() {
            for x0 in 0..shared_space.len() {
                for u1 in 0..action_space.len() {
                    for u2 in 0..action_space.len() {
                        let mut best: Option<(usize, &KernelRow)> = None;
                        for row in &file.local_kernel {
                            if !match_time(&row.t, t)? {
                                continue;
                            }
                            let keys = [
                                (x_idx.lookup(&row.x)?, x),
                                (x0_idx.lookup(&row.x0)?, x0),
                                (u_idx.lookup(&row.u1)?, u1),
                                (u_idx.lookup(&row.u2)?, u2),
                            ];
                            if let Some(s) = combine(&keys) {
                                if best.as_ref().is_none_or(|(bs, _)| s >= *bs) {
                                    best = Some((s, row));
                                }
                            }
                        }
                        let (_, row) = best.ok_or_else(|| {
                            LoadError::Schema(format!(
                                "no local_kernel row matches (t={t}, x={}, x0={}, u1={}, u2={})",
                                local_space.label(x),
                                shared_space.label(x0),
                                action_space.label(u1),
                                action_space.label(u2)
                            ))
                        })?;
                        let dist = parse_dist(&row.dist, local_space.len(), "local_kernel dist")
                            .map_err(|e| match e {
                                LoadError::Model(symcoord_core::Error::NotNormalized { sum }) => {
                                    LoadError::Model(
                                        symcoord_core::Error::KernelRowNotNormalized {
                                            row: format!(
                                                "local (t={t}, x={}, x0={}, u1={}, u2={})",
                                                local_space.label(x),
                                                shared_space.label(x0),
                                                action_space.label(u1),
                                                action_space.label(u2)
                                            ),
                                            sum,
                                        },
                                    )
                                }
                                other => other,
                            })?;
                        rows.push(dist);
                    }
                }
            }
        }
        local_kernels.push(
            Kernel::new(
                vec![
                    local_space.len(),
                    shared_space.len(),
                    action_space.len(),
                    action_space.len(),
                ],
                rows,
            )
            .map_err(LoadError::Model)?,
        );
    }

    // Costs, with optional default.
    let mut costs = Vec::new();
    for t in 1..=file.horizon {
        let mut table = Vec::new();
        for x0 in 0..shared_space.len() {
            for x1 in 0..local_space.len() {
                for x2 in 0..local_space.len() {
                    for u1 in 0..action_space.len() {
                        for u2 in 0..action_space.len() {
                            let mut best: Option<(usize, &CostRow)> = None;
                            for row in &file.cost {
                                if !match_time(&row.t, t)? {
                                    continue;
                                }
                                let keys = [
                                    (x0_idx.lookup(&row.x0)?, x0),
                                    (x_idx.lookup(&row.x1)?, x1),
                                    (x_idx.lookup(&row.x2)?, x2),
                                    (u_idx.lookup(&row.u1)?, u1),
                                    (u_idx.lookup(&row.u2)?, u2),
                                ];
                                if let Some(s) = combine(&keys) {
                                    if best.as_ref().is_none_or(|(bs, _)| s >= *bs) {
                                        best = Some((s, row));
                                    }
                                }
                            }
                            let value = match best {
                                Some((_, row)) => row.value.parse::<N>()?,
                                None => match &file.cost_default {
                                    Some(v) => v.parse::<N>()?,
                                    None => {
                                        return Err(LoadError::Schema(format!(
                                            "no cost row matches (t={t}, x0={}, x1={}, x2={}, \
                                             u1={}, u2={}) and no cost_default is set",
                                            shared_space.label(x0),
                                            local_space.label(x1),
                                            local_space.label(x2),
                                            action_space.label(u1),
                                            action_space.label(u2)
                                        )))
                                    }
                                },
                            };
                            table.push(value);
                        }
                    }
                }
            }
        }
        costs.push(table);
    }

    // Aggregate map.
    let aggregate = if file.aggregate.is_empty() {
        None
    } else {
        let agg_space = aggregate_space.as_ref().ok_or_else(|| {
            LoadError::Schema("aggregate rows need an aggregate_space".into())
        })?;
        let a_idx = SpaceIndex {
            space: agg_space,
            what: "aggregate",
        };
        let mut map: Vec<Option<usize>> =
            vec![None; action_space.len() * action_space.len()];
        for row in &file.aggregate {
            let u1 = u_idx.require(&row.u1)?;
            let u2 = u_idx.require(&row.u2)?;
            map[u1 * action_space.len() + u2] = Some(a_idx.require(&row.a)?);
        }
        let map = map
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                a.ok_or_else(|| {
                    let (u1, u2) = (i / action_space.len(), i % action_space.len());
                    LoadError::Schema(format!(
                        "aggregate map misses (u1={}, u2={})",
                        action_space.label(u1),
                        action_space.label(u2)
                    ))
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        Some(map)
    };
    if structure.requires_aggregate() && aggregate.is_none() {
        return Err(LoadError::Schema(
            "the aggregate-action structure needs an `aggregate` table".into(),
        ));
    }

    let model = TeamModel::new(ModelParts {
        horizon: file.horizon,
        shared_space,
        local_space,
        action_space,
        aggregate_space,
        alpha0,
        alpha,
        shared_kernels,
        local_kernels,
        costs,
        aggregate,
        declared_iid_uncontrolled_local: file.iid_uncontrolled_local,
        declared_local_ignores_own_state: file.local_ignores_own_state,
    })?;

    let strategy = build_strategy(&model, structure, &file.strategy, "strategy")?;
    let strategy2 = build_strategy(&model, structure, &file.strategy2, "strategy2")?;
    if strategy.is_none() && strategy2.is_some() {
        return Err(LoadError::Schema(
            "strategy2 rows need a strategy table for agent 1".into(),
        ));
    }

    Ok(LoadedModel {
        name: file.name.clone(),
        structure,
        model,
        strategy,
        strategy2,
    })
}

fn build_strategy<N: Scalar>(
    model: &TeamModel<N>,
    structure: InfoStructure,
    rows: &[StrategyRow],
    what: &str,
) -> Result<Option<Strategy<N>>> {
    if rows.is_empty() {
        return Ok(None);
    }
    let local = model.local_space();
    let actions = model.action_space();
    let decode_p = |spec: &KeySpec, t: usize| -> Result<Option<PrivateKey>> {
        match spec {
            KeySpec::Star(s) if s == "*" => Ok(None),
            KeySpec::Star(s) => Err(LoadError::Schema(format!(
                "{what}: p must be a label list or `*`, not `{s}`"
            ))),
            KeySpec::Labels(labels) => {
                if labels.len() != structure.private_tuple_len(t) {
                    return Err(LoadError::Schema(format!(
                        "{what}: p at t={t} needs {} labels, got {:?}",
                        structure.private_tuple_len(t),
                        labels
                    )));
                }
                labels
                    .iter()
                    .map(|l| {
                        local.index_of(l).ok_or_else(|| {
                            LoadError::Schema(format!("{what}: unknown local-state label `{l}`"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()
                    .map(Some)
            }
        }
    };

    let mut tables = Vec::with_capacity(model.horizon());
    for t in 1..=model.horizon() {
        let commons = model.enumerate_common(structure, t)?;
        let mut table = BTreeMap::new();
        for p in model.private_domain(structure, t) {
            for c in &commons {
                let mut best: Option<(usize, &StrategyRow)> = None;
                for row in rows {
                    if !match_time(&row.t, t)? {
                        continue;
                    }
                    let p_spec = decode_p(&row.p, t)?;
                    let mut specificity = 0;
                    if let Some(ref spec) = p_spec {
                        if spec != &p {
                            continue;
                        }
                        specificity += 1;
                    }
                    match &row.c {
                        None => {}
                        Some(KeySpec::Star(s)) if s == "*" => {}
                        Some(KeySpec::Star(s)) => {
                            return Err(LoadError::Schema(format!(
                                "{what}: c must be a label list or `*`, not `{s}`"
                            )))
                        }
                        Some(KeySpec::Labels(labels)) => {
                            let decoded = decode_common(model, structure, t, labels, what)?;
                            if &decoded != c {
                                continue;
                            }
                            specificity += 2;
                        }
                    }
                    if best.as_ref().is_none_or(|(bs, _)| specificity >= *bs) {
                        best = Some((specificity, row));
                    }
                }
                let (_, row) = best.ok_or_else(|| {
                    LoadError::Schema(format!(
                        "{what}: no row matches (t={t}, p={p:?}, c={c:?})"
                    ))
                })?;
                if row.dist.len() != actions.len() {
                    return Err(LoadError::Schema(format!(
                        "{what}: dist needs {} weights",
                        actions.len()
                    )));
                }
                let weights = row
                    .dist
                    .iter()
                    .map(ScalarText::parse)
                    .collect::<Result<Vec<N>>>()?;
                let dist = Dist::new(weights).map_err(LoadError::Model)?;
                table.insert((p.clone(), c.clone()), dist);
            }
        }
        tables.push(table);
    }
    Ok(Some(Strategy::new(tables)))
}

/// Decodes a label-written common realization into the canonical index
/// encoding for the given structure and time.
pub fn decode_common<N: Scalar>(
    model: &TeamModel<N>,
    structure: InfoStructure,
    t: usize,
    labels: &[String],
    what: &str,
) -> Result<Vec<usize>> {
    let spaces = common_component_spaces(model, structure, t);
    if labels.len() != spaces.len() {
        return Err(LoadError::Schema(format!(
            "{what}: c at t={t} needs {} labels, got {}",
            spaces.len(),
            labels.len()
        )));
    }
    labels
        .iter()
        .zip(spaces)
        .map(|(l, space)| {
            space.index_of(l).ok_or_else(|| {
                LoadError::Schema(format!("{what}: unknown common-info label `{l}`"))
            })
        })
        .collect()
}

/// The component spaces of the canonical common-information encoding.
pub fn common_component_spaces<N: Scalar>(
    model: &TeamModel<N>,
    structure: InfoStructure,
    t: usize,
) -> Vec<&Space> {
    let mut spaces = vec![model.shared_space()];
    for _ in 1..t {
        spaces.push(model.shared_space());
        match structure {
            InfoStructure::P1a => {
                spaces.push(model.action_space());
                spaces.push(model.action_space());
                spaces.push(model.local_space());
                spaces.push(model.local_space());
            }
            InfoStructure::P1b | InfoStructure::P1c => {
                spaces.push(model.action_space());
                spaces.push(model.action_space());
            }
            InfoStructure::P1d => {
                spaces.push(model.aggregate_space().expect("aggregate structure"));
            }
        }
    }
    spaces
}

/// Renders a canonical common realization with its labels.
pub fn common_labels<N: Scalar>(
    model: &TeamModel<N>,
    structure: InfoStructure,
    c: &[usize],
) -> String {
    // Recover t from the encoding length.
    let step = match structure {
        InfoStructure::P1a => 5,
        InfoStructure::P1b | InfoStructure::P1c => 3,
        InfoStructure::P1d => 2,
    };
    let t = 1 + (c.len() - 1) / step;
    let spaces = common_component_spaces(model, structure, t);
    c.iter()
        .zip(spaces)
        .map(|(&i, space)| space.label(i).to_string())
        .collect::<Vec<_>>()
        .join("|")
}
