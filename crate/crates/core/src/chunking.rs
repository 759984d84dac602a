//! Cognitive chunks, domain feature construction and per-chunk
//! contributions.
//!
//! A [`ChunkSpec`] groups dataset columns into named input chunks and names
//! the subset of them that an explanation presents (the output chunks). The
//! counts of both feed the explainability score.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::partial_dependence::{pd_curve, pd_group, GroupPd, PdGrid};
use crate::predictor::{check_dataset, Predictor};
use crate::tabular::{pearson, ColumnKind, ColumnMeta, Dataset, Matrix, PearsonError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Original,
    DomainGrouped,
    Constructed,
}

/// Input chunks keyed by name, in declaration order. Rejects duplicate keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ChunkMap(pub IndexMap<String, Vec<String>>);

impl<'de> Deserialize<'de> for ChunkMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MapVisitor;

        impl<'de> Visitor<'de> for MapVisitor {
            type Value = ChunkMap;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping chunk names to column lists")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<ChunkMap, A::Error> {
                let mut map = IndexMap::new();
                while let Some(key) = access.next_key::<String>()? {
                    if map.contains_key(&key) {
                        return Err(serde::de::Error::custom(format!("duplicate chunk '{key}'")));
                    }
                    let cols: Vec<String> = access.next_value()?;
                    map.insert(key, cols);
                }
                Ok(ChunkMap(map))
            }
        }

        deserializer.deserialize_map(MapVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkSpec {
    pub input_chunks: ChunkMap,
    pub output_chunks: Vec<String>,
    #[serde(default)]
    pub provenance: Provenance,
}

/// Column indices behind a validated spec.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedChunks {
    /// `(chunk name, column indices)` per input chunk, in declaration order.
    pub input: Vec<(String, Vec<usize>)>,
    /// Positions in `input` of the output chunks, in declaration order.
    pub output: Vec<usize>,
}

impl ResolvedChunks {
    pub fn output_chunks(&self) -> impl Iterator<Item = &(String, Vec<usize>)> {
        self.output.iter().map(|&i| &self.input[i])
    }

    /// Every column referenced by an input chunk, in declaration order.
    pub fn input_columns(&self) -> Vec<usize> {
        self.input.iter().flat_map(|(_, c)| c.iter().copied()).collect()
    }
}

fn spec_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ChunkSpec {
        path: path.into(),
        message: message.into(),
    }
}

impl ChunkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ChunkSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            spec_err(format!("$.{path}").trim_end_matches('.'), e.inner().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chunk spec serialises")
    }

    /// One chunk per column, all of them presented.
    pub fn singletons<S: AsRef<str>>(columns: &[S], provenance: Provenance) -> Self {
        let map = columns
            .iter()
            .map(|c| (c.as_ref().to_string(), vec![c.as_ref().to_string()]))
            .collect();
        Self {
            input_chunks: ChunkMap(map),
            output_chunks: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            provenance,
        }
    }

    pub fn from_groups(
        groups: &[(String, Vec<String>)],
        outputs: &[String],
        provenance: Provenance,
    ) -> Result<Self> {
        let spec = Self {
            input_chunks: ChunkMap(groups.iter().cloned().collect()),
            output_chunks: outputs.to_vec(),
            provenance,
        };
        if spec.input_chunks.0.len() != groups.len() {
            return Err(spec_err("$.input_chunks", "duplicate chunk names"));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_input(&self) -> usize {
        self.input_chunks.0.len()
    }

    pub fn n_output(&self) -> usize {
        self.output_chunks.len()
    }

    /// Checks the invariants that do not depend on a dataset.
    pub fn validate(&self) -> Result<()> {
        if self.input_chunks.0.is_empty() {
            return Err(spec_err("$.input_chunks", "at least one input chunk is required"));
        }
        if self.output_chunks.is_empty() {
            return Err(spec_err("$.output_chunks", "at least one output chunk is required"));
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for (name, cols) in &self.input_chunks.0 {
            if name.is_empty() {
                return Err(spec_err("$.input_chunks", "chunk names must be non-empty"));
            }
            if cols.is_empty() {
                return Err(spec_err(format!("$.input_chunks.{name}"), "chunk has no columns"));
            }
            for (i, c) in cols.iter().enumerate() {
                if let Some(prev) = owner.insert(c.as_str(), name.as_str()) {
                    return Err(spec_err(
                        format!("$.input_chunks.{name}[{i}]"),
                        format!("column '{c}' already belongs to chunk '{prev}'"),
                    ));
                }
            }
        }
        let mut seen = HashSet::new();
        for (i, out) in self.output_chunks.iter().enumerate() {
            if !self.input_chunks.0.contains_key(out) {
                return Err(spec_err(
                    format!("$.output_chunks[{i}]"),
                    format!("'{out}' is not a declared input chunk"),
                ));
            }
            if !seen.insert(out) {
                return Err(spec_err(format!("$.output_chunks[{i}]"), format!("'{out}' listed twice")));
            }
        }
        Ok(())
    }

    /// Maps chunk columns onto the dataset's column indices.
    pub fn resolve(&self, d: &Dataset) -> Result<ResolvedChunks> {
        self.validate()?;
        let mut input = Vec::with_capacity(self.n_input());
        for (name, cols) in &self.input_chunks.0 {
            let mut idx = Vec::with_capacity(cols.len());
            for (i, c) in cols.iter().enumerate() {
                match d.column_index(c) {
                    Some(j) if Some(j) == d.target() => {
                        return Err(spec_err(
                            format!("$.input_chunks.{name}[{i}]"),
                            format!("'{c}' is the target column"),
                        ))
                    }
                    Some(j) => idx.push(j),
                    None => {
                        return Err(spec_err(
                            format!("$.input_chunks.{name}[{i}]"),
                            format!("unknown column '{c}'"),
                        ))
                    }
                }
            }
            input.push((name.clone(), idx));
        }
        let output = self
            .output_chunks
            .iter()
            .map(|o| self.input_chunks.0.get_index_of(o).expect("validated"))
            .collect();
        Ok(ResolvedChunks { input, output })
    }
}

/// `(N_i, N_o)`.
pub fn count_chunks(spec: &ChunkSpec) -> (usize, usize) {
    (spec.n_input(), spec.n_output())
}

/// A feature built as the sum of its member columns, each weighted by the
/// member's Pearson correlation with the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructedFeature {
    pub name: String,
    pub member_columns: Vec<String>,
    pub member_correlations: Vec<f64>,
}

impl ConstructedFeature {
    /// Applies the frozen correlations to another dataset with the same
    /// member columns.
    pub fn apply(&self, d: &Dataset) -> Result<Vec<f64>> {
        let idx = self
            .member_columns
            .iter()
            .map(|c| {
                d.column_index(c)
                    .ok_or_else(|| Error::Construction(format!("column '{c}' not found")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(d
            .cells()
            .rows()
            .map(|row| {
                idx.iter()
                    .zip(&self.member_correlations)
                    .fold(0.0, |acc, (&j, r)| acc + row[j] * r)
            })
            .collect())
    }
}

/// Builds one column per group from the group's members and their
/// correlation with `target`. A two-level categorical target is encoded by
/// level index (first level 0). The returned dataset holds only the
/// constructed columns.
pub fn construct_features(
    d: &Dataset,
    target: &str,
    groups: &[(String, Vec<String>)],
) -> Result<(Dataset, Vec<ConstructedFeature>)> {
    let t = d
        .column_index(target)
        .ok_or_else(|| Error::Construction(format!("unknown target '{target}'")))?;
    let tmeta = &d.columns()[t];
    if tmeta.kind == ColumnKind::Categorical && tmeta.levels.len() != 2 {
        return Err(Error::Construction(format!(
            "categorical target '{target}' must have exactly two levels"
        )));
    }
    let y = d.column(t);
    if groups.is_empty() {
        return Err(Error::Construction("no groups given".into()));
    }

    let mut used = HashSet::new();
    let mut features = Vec::with_capacity(groups.len());
    for (name, members) in groups {
        if members.is_empty() {
            return Err(Error::Construction(format!("group '{name}' is empty")));
        }
        let mut correlations = Vec::with_capacity(members.len());
        for m in members {
            let j = d
                .column_index(m)
                .ok_or_else(|| Error::Construction(format!("unknown column '{m}' in group '{name}'")))?;
            if j == t {
                return Err(Error::Construction(format!("group '{name}' contains the target")));
            }
            if !d.columns()[j].is_numeric() {
                return Err(Error::Construction(format!("column '{m}' is not numeric")));
            }
            if !used.insert(j) {
                return Err(Error::Construction(format!("column '{m}' appears in two groups")));
            }
            let r = match pearson(&d.column(j), &y) {
                Ok(r) => r,
                Err(PearsonError::ConstantFirst) => {
                    return Err(Error::UndefinedCorrelation { column: m.clone() })
                }
                Err(PearsonError::ConstantSecond) => {
                    return Err(Error::UndefinedCorrelation {
                        column: target.to_string(),
                    })
                }
                Err(PearsonError::TooShort) => {
                    return Err(Error::Construction("need at least two rows".into()))
                }
            };
            correlations.push(r);
        }
        features.push(ConstructedFeature {
            name: name.clone(),
            member_columns: members.clone(),
            member_correlations: correlations,
        });
    }

    let columns: Vec<Vec<f64>> = features.iter().map(|f| f.apply(d)).collect::<Result<_>>()?;
    let n = d.n_rows();
    let mut data = Vec::with_capacity(n * columns.len());
    for i in 0..n {
        data.extend(columns.iter().map(|c| c[i]));
    }
    let metas = features.iter().map(|f| ColumnMeta::numeric(f.name.clone())).collect();
    let out = Dataset::new(d.name(), metas, Matrix::new(n, columns.len(), data)?)?;
    Ok((out, features))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub chunk: String,
    pub contribution: f64,
}

#[derive(Clone, Debug)]
enum ChunkEffect {
    Single { column: usize, pd: PdGrid },
    Group { pd: GroupPd },
}

/// Partial dependence of every output chunk, computed once and reused for
/// any number of instances.
pub struct ChunkEffects<'a> {
    predictor: &'a dyn Predictor,
    eval: Dataset,
    chunks: Vec<(String, ChunkEffect)>,
}

impl<'a> ChunkEffects<'a> {
    /// `eval` holds the predictor's feature columns; `spec` must resolve
    /// against it.
    pub fn new(
        predictor: &'a dyn Predictor,
        eval: &Dataset,
        spec: &ChunkSpec,
        grid_size: usize,
    ) -> Result<Self> {
        check_dataset(predictor.signature(), eval)?;
        let resolved = spec.resolve(eval)?;
        let chunks = resolved
            .output_chunks()
            .map(|(name, cols)| {
                let effect = match cols.as_slice() {
                    [c] => ChunkEffect::Single {
                        column: *c,
                        pd: pd_curve(predictor, eval, *c, grid_size)?,
                    },
                    _ => ChunkEffect::Group {
                        pd: pd_group(predictor, eval, cols, grid_size)?,
                    },
                };
                Ok((name.clone(), effect))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            predictor,
            eval: eval.clone(),
            chunks,
        })
    }

    /// One-dimensional curves of the single-column output chunks.
    pub fn curves(&self) -> impl Iterator<Item = &PdGrid> {
        self.chunks.iter().filter_map(|(_, e)| match e {
            ChunkEffect::Single { pd, .. } => Some(pd),
            ChunkEffect::Group { .. } => None,
        })
    }

    /// Signed centred-PD contribution of each output chunk at `instance`,
    /// largest magnitude first, ties by chunk name.
    pub fn breakdown(&self, instance: &[f64]) -> Result<Vec<Contribution>> {
        let signature = self.predictor.signature();
        if instance.len() != signature.len() {
            return Err(Error::Signature(format!(
                "instance has {} values, predictor expects {}",
                instance.len(),
                signature.len()
            )));
        }
        if let Some((meta, v)) = signature.iter().zip(instance).find(|(m, &v)| !m.accepts(v)) {
            return Err(Error::Signature(format!(
                "instance value {v} is not valid for column '{}'",
                meta.name
            )));
        }
        let mut out = self
            .chunks
            .iter()
            .map(|(name, effect)| {
                let contribution = match effect {
                    ChunkEffect::Single { column, pd } => pd.centered_at(instance[*column])?,
                    ChunkEffect::Group { pd } => {
                        let values: Vec<f64> = pd.members.iter().map(|&m| instance[m]).collect();
                        pd.centered_at(self.predictor, &self.eval, &values)?
                    }
                };
                Ok(Contribution {
                    chunk: name.clone(),
                    contribution,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sort_contributions(&mut out);
        Ok(out)
    }
}

pub fn sort_contributions(c: &mut [Contribution]) {
    c.sort_by(|a, b| {
        b.contribution
            .abs()
            .total_cmp(&a.contribution.abs())
            .then_with(|| a.chunk.cmp(&b.chunk))
    });
}

/// Convenience wrapper around [`ChunkEffects`] for a single instance.
pub fn contribution_breakdown(
    p: &dyn Predictor,
    eval: &Dataset,
    spec: &ChunkSpec,
    instance: &[f64],
    grid_size: usize,
) -> Result<Vec<Contribution>> {
    ChunkEffects::new(p, eval, spec, grid_size)?.breakdown(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{ConstantModel, LinearModel};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn counts_original_setting() {
        let spec = ChunkSpec::singletons(&names(30), Provenance::Original);
        assert_eq!(count_chunks(&spec), (30, 30));
    }

    #[test]
    fn counts_constructed_setting() {
        let groups: Vec<(String, Vec<String>)> =
            names(7).into_iter().map(|n| (n.clone(), vec![n])).collect();
        let outputs = names(5);
        let spec = ChunkSpec::from_groups(&groups, &outputs, Provenance::Constructed).unwrap();
        assert_eq!(count_chunks(&spec), (7, 5));
    }

    #[test]
    fn minimal_spec() {
        let spec = ChunkSpec::from_json(r#"{"input_chunks": {"a": ["x"]}, "output_chunks": ["a"]}"#).unwrap();
        assert_eq!(count_chunks(&spec), (1, 1));
        assert_eq!(spec.provenance, Provenance::Original);
    }

    #[test]
    fn json_errors_cite_paths() {
        let cases = [
            (r#"{"input_chunks": {"a": ["x"], "b": ["x"]}, "output_chunks": ["a"]}"#, "$.input_chunks.b[0]"),
            (r#"{"input_chunks": {"a": ["x"]}, "output_chunks": ["zz"]}"#, "$.output_chunks[0]"),
            (r#"{"input_chunks": {"a": []}, "output_chunks": ["a"]}"#, "$.input_chunks.a"),
            (r#"{"input_chunks": {}, "output_chunks": ["a"]}"#, "$.input_chunks"),
            (r#"{"input_chunks": {"a": ["x"]}, "output_chunks": []}"#, "$.output_chunks"),
            (r#"{"input_chunks": {"a": ["x", 3]}, "output_chunks": ["a"]}"#, "$.input_chunks.a[1]"),
            (r#"{"input_chunks": {"a": ["x"]}, "output_chunks": ["a"], "provenance": "magic"}"#, "$.provenance"),
            (r#"{"input_chunks": {"a": ["x"], "a": ["y"]}, "output_chunks": ["a"]}"#, "$.input_chunks"),
        ];
        for (json, path) in cases {
            match ChunkSpec::from_json(json) {
                Err(Error::ChunkSpec { path: p, .. }) => assert!(p.starts_with(path), "{json}: {p}"),
                other => panic!("{json}: {other:?}"),
            }
        }
    }

    #[test]
    fn resolve_rejects_unknown_columns() {
        let d = Dataset::from_numeric_rows(&["x", "y"], &[[1.0, 2.0]]).unwrap();
        let spec = ChunkSpec::from_json(r#"{"input_chunks": {"a": ["x", "q"]}, "output_chunks": ["a"]}"#).unwrap();
        let err = spec.resolve(&d).unwrap_err();
        assert!(err.to_string().contains("$.input_chunks.a[1]"), "{err}");
    }

    #[test]
    fn resolve_rejects_target_in_chunk() {
        let d = Dataset::from_numeric_rows(&["x", "y"], &[[1.0, 2.0]])
            .unwrap()
            .with_target("y")
            .unwrap();
        let spec = ChunkSpec::singletons(&["x", "y"], Provenance::Original);
        assert!(spec.resolve(&d).is_err());
    }

    #[test]
    fn spec_json_round_trip_keeps_order() {
        let json = r#"{"input_chunks": {"zeta": ["c"], "alpha": ["a", "b"]}, "output_chunks": ["alpha"], "provenance": "domain_grouped"}"#;
        let spec = ChunkSpec::from_json(json).unwrap();
        let again = ChunkSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(again.input_chunks.0.keys().collect::<Vec<_>>(), vec!["zeta", "alpha"]);
    }

    #[test]
    fn single_member_with_unit_correlation_reproduces_member() {
        let d = Dataset::from_numeric_rows(&["x", "y"], &[[1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).unwrap();
        let (out, feats) = construct_features(&d, "y", &[("g".into(), vec!["x".into()])]).unwrap();
        assert_eq!(feats[0].member_correlations, vec![1.0]);
        assert_eq!(out.column(0), d.column(0));
    }

    #[test]
    fn constant_member_is_named() {
        let d = Dataset::from_numeric_rows(&["x", "c", "y"], &[[1.0, 3.0, 1.0], [2.0, 3.0, 0.0]]).unwrap();
        let err = construct_features(&d, "y", &[("g".into(), vec!["x".into(), "c".into()])]).unwrap_err();
        assert!(matches!(err, Error::UndefinedCorrelation { ref column } if column == "c"), "{err}");
    }

    #[test]
    fn empty_and_overlapping_groups_rejected() {
        let d = Dataset::from_numeric_rows(&["x", "y"], &[[1.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(construct_features(&d, "y", &[("g".into(), vec![])]).is_err());
        let overlap = [("a".into(), vec!["x".into()]), ("b".into(), vec!["x".into()])];
        assert!(construct_features(&d, "y", &overlap).is_err());
    }

    #[test]
    fn binary_categorical_target_is_encoded() {
        let cols = vec![
            ColumnMeta::numeric("x"),
            ColumnMeta::categorical("y", vec!["no".into(), "yes".into()]),
        ];
        let cells = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 1.0], [3.0, 0.0]]).unwrap();
        let d = Dataset::new("t", cols, cells).unwrap();
        let (_, feats) = construct_features(&d, "y", &[("g".into(), vec!["x".into()])]).unwrap();
        let expected = pearson(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(feats[0].member_correlations[0], expected);
    }

    #[test]
    fn constant_predictor_contributes_nothing() {
        let d = Dataset::from_numeric_rows(&["a", "b"], &[[0.0, 1.0], [1.0, 3.0], [2.0, 2.0]]).unwrap();
        let m = ConstantModel::new(d.columns().to_vec(), 2.0).unwrap();
        let spec = ChunkSpec::singletons(&["a", "b"], Provenance::Original);
        let c = contribution_breakdown(&m, &d, &spec, &[1.5, 2.5], 10).unwrap();
        assert!(c.iter().all(|c| c.contribution == 0.0));
    }

    #[test]
    fn breakdown_orders_by_magnitude_then_name() {
        let d = Dataset::from_numeric_rows(&["a", "b", "c"], &[[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]]).unwrap();
        let m = LinearModel::new(d.columns().to_vec(), 0.0, vec![1.0, -3.0, 1.0]).unwrap();
        let spec = ChunkSpec::singletons(&["c", "b", "a"], Provenance::Original);
        let c = contribution_breakdown(&m, &d, &spec, &[2.0, 2.0, 2.0], 10).unwrap();
        let order: Vec<&str> = c.iter().map(|c| c.chunk.as_str()).collect();
        assert_eq!(order, vec!["b", "a", "c"]);
        assert_eq!(c[0].contribution, -3.0);
    }

    #[test]
    fn breakdown_checks_instance_signature() {
        let d = Dataset::from_numeric_rows(&["a", "b"], &[[0.0, 1.0], [1.0, 3.0]]).unwrap();
        let m = ConstantModel::new(d.columns().to_vec(), 2.0).unwrap();
        let spec = ChunkSpec::singletons(&["a"], Provenance::Original);
        assert!(matches!(
            contribution_breakdown(&m, &d, &spec, &[1.0], 10),
            Err(Error::Signature(_))
        ));
    }

    #[test]
    fn group_chunk_replaces_members_jointly() {
        let d = Dataset::from_numeric_rows(
            &["a", "b", "c"],
            &[[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [2.0, 2.0, 3.0], [3.0, 1.0, 0.0]],
        )
        .unwrap();
        let m = LinearModel::new(d.columns().to_vec(), 1.0, vec![2.0, 1.0, -1.0]).unwrap();
        let spec = ChunkSpec::from_json(
            r#"{"input_chunks": {"ab": ["a", "b"], "c": ["c"]}, "output_chunks": ["ab", "c"], "provenance": "domain_grouped"}"#,
        )
        .unwrap();
        let c = contribution_breakdown(&m, &d, &spec, &[3.0, 1.0, 0.0], 10).unwrap();
        // linear: group contribution = 2(a - mean a) + (b - mean b) = 2*1.5 + 0
        let ab = c.iter().find(|c| c.chunk == "ab").unwrap().contribution;
        let cc = c.iter().find(|c| c.chunk == "c").unwrap().contribution;
        assert!((ab - 3.0).abs() < 1e-12, "{ab}");
        assert!((cc - 2.25).abs() < 1e-12, "{cc}");
    }
}
