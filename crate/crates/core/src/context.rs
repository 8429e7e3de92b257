use crate::backend::{ScoreBackend, ScoreRequest};
use crate::error::{Error, Result};
use crate::prompt::{
    normalize_scores, render_prompt, Example, LabelSpace, PredictiveDistribution, PromptPlan,
    Template,
};

/// Everything needed to turn a plan and a query into a label distribution.
#[derive(Clone, Copy)]
pub struct PromptContext<'a> {
    pub backend: &'a dyn ScoreBackend,
    pub template: &'a Template,
    pub train: &'a [Example],
    pub labels: &'a LabelSpace,
}

impl<'a> PromptContext<'a> {
    pub fn new(
        backend: &'a dyn ScoreBackend,
        template: &'a Template,
        train: &'a [Example],
        labels: &'a LabelSpace,
    ) -> Self {
        Self {
            backend,
            template,
            train,
            labels,
        }
    }

    pub fn render(&self, plan: &PromptPlan, query_text: &str) -> Result<String> {
        render_prompt(self.template, plan, self.train, query_text, self.labels)
    }

    /// Renders, scores (one backend call) and normalizes.
    pub fn distribution(
        &self,
        plan: &PromptPlan,
        query_text: &str,
    ) -> Result<PredictiveDistribution> {
        let prompt = self.render(plan, query_text)?;
        let request = ScoreRequest::new(prompt, self.labels.labels().to_vec());
        let response = self.backend.score_labels(&request)?;
        if response.raw_scores.len() != self.labels.len() {
            return Err(Error::MalformedResponse(format!(
                "{} scores for {} labels",
                response.raw_scores.len(),
                self.labels.len()
            )));
        }
        normalize_scores(&response.raw_scores)
    }
}
