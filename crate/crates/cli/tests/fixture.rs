//! The shipped fixture's labels are the calibrated zero-shot predictions of
//! the run-seed-0 synthetic model, so accuracy measures how close a prompt
//! keeps the model to its own unbiased preference.

use std::path::Path;

use fairprompt::calibration::{calibrate, estimate_prior};
use fairprompt::fairness::ContentFreeInput;
use fairprompt::prompt::{predict_label, PromptPlan};
use fairprompt::PromptContext;
use fairprompt_cli::LoadedConfig;

#[test]
fn labels_follow_the_generating_model() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json");
    let loaded = LoadedConfig::load(&path).unwrap();
    let backend = loaded.backend(0).unwrap();
    let config = &loaded.config;
    let ctx = PromptContext::new(&*backend, &config.template, &[], &config.labels);
    let empty = PromptPlan::empty();
    let prior = estimate_prior(&ctx, &empty, &[ContentFreeInput::default()]).unwrap();
    for example in loaded.train_pool.iter().chain(&loaded.test) {
        let dist = ctx.distribution(&empty, &example.text).unwrap();
        let label = predict_label(&calibrate(&dist, &prior).unwrap());
        assert_eq!(label, example.label_index, "{:?}", example.text);
    }
    assert_eq!(loaded.train_pool.len(), 8);
    assert_eq!(loaded.test.len(), 24);
}
