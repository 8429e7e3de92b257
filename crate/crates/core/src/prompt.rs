//! Domain types for labelled examples, templates and prompt plans, plus
//! prompt assembly and score normalization.
//!
//! A prompt is built from a [`PromptPlan`] (an ordered list of training-set
//! indices). Each selected example is rendered through the template's
//! demonstration pattern, the renderings are joined by the separator, and the
//! query pattern instantiated with the query text closes the prompt. The
//! label is scored as the continuation of that final string.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TEXT_PLACEHOLDER: &str = "{x}";
pub const LABEL_PLACEHOLDER: &str = "{y}";

/// Sum-to-one tolerance for [`PredictiveDistribution`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Ordered set of label surface strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::LabelSpace(format!(
                "need at least 2 labels, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(Error::LabelSpace("empty label string".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::LabelSpace(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for LabelSpace {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<LabelSpace> for Vec<String> {
    fn from(space: LabelSpace) -> Self {
        space.labels
    }
}

/// One labelled sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub label_index: usize,
}

impl Example {
    pub fn new(text: impl Into<String>, label_index: usize, labels: &LabelSpace) -> Result<Self> {
        let example = Self {
            text: text.into(),
            label_index,
        };
        example.validate(labels)?;
        Ok(example)
    }

    pub fn validate(&self, labels: &LabelSpace) -> Result<()> {
        if self.text.is_empty() {
            return Err(Error::Example("empty text".into()));
        }
        if self.label_index >= labels.len() {
            return Err(Error::Example(format!(
                "label index {} outside label space of size {}",
                self.label_index,
                labels.len()
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ExampleRecord {
    text: String,
    label: String,
}

/// Parses one `{"text": ..., "label": ...}` JSON object per line. Blank
/// lines are skipped.
pub fn parse_examples(reader: impl BufRead, labels: &LabelSpace) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading line {}", lineno + 1), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ExampleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("line {}", lineno + 1), e))?;
        let label_index = labels.index_of(&record.label).ok_or_else(|| {
            Error::Example(format!(
                "line {}: label {:?} is not in the label space",
                lineno + 1,
                record.label
            ))
        })?;
        let example = Example::new(record.text, label_index, labels)
            .map_err(|e| Error::Example(format!("line {}: {e}", lineno + 1)))?;
        out.push(example);
    }
    Ok(out)
}

pub fn load_examples(path: &Path, labels: &LabelSpace) -> Result<Vec<Example>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_examples(BufReader::new(file), labels).map_err(|e| match e {
        Error::Io { context, source } => Error::Io {
            context: format!("{}: {context}", path.display()),
            source,
        },
        other => other,
    })
}

/// Demonstration pattern, query pattern and separator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TemplateSpec", into = "TemplateSpec")]
pub struct Template {
    demo_pattern: String,
    query_pattern: String,
    separator: String,
}

#[derive(Serialize, Deserialize)]
struct TemplateSpec {
    demo_pattern: String,
    query_pattern: String,
    #[serde(default = "default_separator")]
    separator: String,
}

fn default_separator() -> String {
    "\n".to_string()
}

impl TryFrom<TemplateSpec> for Template {
    type Error = Error;

    fn try_from(spec: TemplateSpec) -> Result<Self> {
        Template::new(spec.demo_pattern, spec.query_pattern, spec.separator)
    }
}

impl From<Template> for TemplateSpec {
    fn from(t: Template) -> Self {
        TemplateSpec {
            demo_pattern: t.demo_pattern,
            query_pattern: t.query_pattern,
            separator: t.separator,
        }
    }
}

fn count_placeholder(pattern: &str, placeholder: &str) -> usize {
    pattern.matches(placeholder).count()
}

impl Template {
    pub fn new(
        demo_pattern: impl Into<String>,
        query_pattern: impl Into<String>,
        separator: impl Into<String>,
    ) -> Result<Self> {
        let demo_pattern = demo_pattern.into();
        let query_pattern = query_pattern.into();
        for (name, placeholder) in [("text", TEXT_PLACEHOLDER), ("label", LABEL_PLACEHOLDER)] {
            let n = count_placeholder(&demo_pattern, placeholder);
            if n != 1 {
                return Err(Error::Template(format!(
                    "demo pattern must contain exactly one {name} placeholder {placeholder}, found {n}"
                )));
            }
        }
        let n = count_placeholder(&query_pattern, TEXT_PLACEHOLDER);
        if n != 1 {
            return Err(Error::Template(format!(
                "query pattern must contain exactly one {TEXT_PLACEHOLDER}, found {n}"
            )));
        }
        if query_pattern.contains(LABEL_PLACEHOLDER) {
            return Err(Error::Template(
                "query pattern must not contain a label placeholder".into(),
            ));
        }
        Ok(Self {
            demo_pattern,
            query_pattern,
            separator: separator.into(),
        })
    }

    /// `Article: {x} Answer: {y}` / `Article: {x} Answer: ` joined by newlines.
    pub fn news_article() -> Self {
        Self::new("Article: {x} Answer: {y}", "Article: {x} Answer: ", "\n")
            .expect("built-in template is valid")
    }

    pub fn demo_pattern(&self) -> &str {
        &self.demo_pattern
    }

    pub fn query_pattern(&self) -> &str {
        &self.query_pattern
    }

    pub fn separator(&self) -> &str {
        &self.separator
    }

    fn render_query(&self, query_text: &str) -> String {
        // One placeholder, so the query text itself is never rescanned.
        let (head, tail) = self
            .query_pattern
            .split_once(TEXT_PLACEHOLDER)
            .expect("validated at construction");
        let mut out = String::with_capacity(head.len() + query_text.len() + tail.len());
        out.push_str(head);
        out.push_str(query_text);
        out.push_str(tail);
        out
    }
}

/// Renders one demonstration through the template's demo pattern.
pub fn render_demonstration(
    template: &Template,
    example: &Example,
    labels: &LabelSpace,
) -> Result<String> {
    example.validate(labels)?;
    let label = labels.get(example.label_index).expect("validated");
    let pattern = template.demo_pattern.as_str();
    let x_at = pattern.find(TEXT_PLACEHOLDER).expect("validated");
    let y_at = pattern.find(LABEL_PLACEHOLDER).expect("validated");
    let ((first_at, first_len, first), (second_at, second_len, second)) = if x_at < y_at {
        (
            (x_at, TEXT_PLACEHOLDER.len(), example.text.as_str()),
            (y_at, LABEL_PLACEHOLDER.len(), label),
        )
    } else {
        (
            (y_at, LABEL_PLACEHOLDER.len(), label),
            (x_at, TEXT_PLACEHOLDER.len(), example.text.as_str()),
        )
    };
    let mut out = String::with_capacity(pattern.len() + example.text.len() + label.len());
    out.push_str(&pattern[..first_at]);
    out.push_str(first);
    out.push_str(&pattern[first_at + first_len..second_at]);
    out.push_str(second);
    out.push_str(&pattern[second_at + second_len..]);
    Ok(out)
}

/// Ordered selection of distinct training-set indices. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PromptPlan {
    indices: Vec<usize>,
}

impl PromptPlan {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if !seen.insert(i) {
                return Err(Error::DuplicatePlanIndex(i));
            }
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    /// New plan with `index` placed before every existing demonstration.
    pub fn with_head(&self, index: usize) -> Result<Self> {
        if self.contains(index) {
            return Err(Error::DuplicatePlanIndex(index));
        }
        let mut indices = Vec::with_capacity(self.indices.len() + 1);
        indices.push(index);
        indices.extend_from_slice(&self.indices);
        Ok(Self { indices })
    }

    pub fn check_bounds(&self, train_len: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= train_len) {
            Some(&index) => Err(Error::PlanIndexOutOfRange {
                index,
                len: train_len,
            }),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for PromptPlan {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        Self::new(indices)
    }
}

impl From<PromptPlan> for Vec<usize> {
    fn from(plan: PromptPlan) -> Self {
        plan.indices
    }
}

impl std::fmt::Display for PromptPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (n, i) in self.indices.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

/// Renders the demonstrations of `plan` in order, joined by the separator,
/// followed by the query pattern instantiated with `query_text`.
pub fn render_prompt(
    template: &Template,
    plan: &PromptPlan,
    train: &[Example],
    query_text: &str,
    labels: &LabelSpace,
) -> Result<String> {
    plan.check_bounds(train.len())?;
    let mut out = String::new();
    for &i in plan.indices() {
        out.push_str(&render_demonstration(template, &train[i], labels)?);
        out.push_str(&template.separator);
    }
    out.push_str(&template.render_query(query_text));
    Ok(out)
}

/// Normalized label probabilities aligned with a [`LabelSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PredictiveDistribution {
    probs: Vec<f64>,
}

impl PredictiveDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no entries".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} = {p} is outside [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one entry");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PredictiveDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<PredictiveDistribution> for Vec<f64> {
    fn from(d: PredictiveDistribution) -> Self {
        d.probs
    }
}

/// Divides each raw model score by their sum.
pub fn normalize_scores(raw: &[f64]) -> Result<PredictiveDistribution> {
    if raw.is_empty() {
        return Err(Error::InvalidScore("no scores".into()));
    }
    for (i, &s) in raw.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidScore(format!("score {i} = {s}")));
        }
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateScores);
    }
    if !total.is_finite() {
        return Err(Error::InvalidScore("scores overflow when summed".into()));
    }
    let probs = raw.iter().map(|s| (s / total).min(1.0)).collect();
    PredictiveDistribution::new(probs)
}

/// Argmax label index; ties go to the lowest index.
pub fn predict_label(dist: &PredictiveDistribution) -> usize {
    let mut best = 0;
    for (i, &p) in dist.probs.iter().enumerate().skip(1) {
        if p > dist.probs[best] {
            best = i;
        }
    }
    best
}
