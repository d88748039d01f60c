//! Runs in its own process so the request counter sees only this run.

use plaincheck_core::backend::requests_sent;
use plaincheck_core::service::{cmd_evaluate, cmd_index, cmd_perturb, cmd_score};
use plaincheck_core::synthetic::separation_fixture;
use plaincheck_core::RunConfig;

#[test]
fn default_config_never_touches_the_network() {
    let dir = tempfile::tempdir().unwrap();
    let fx = separation_fixture(5, 4);
    let (corpus, dataset) = fx.write(dir.path()).unwrap();
    let cfg = RunConfig::default();
    assert!(cfg.is_offline());

    let index = dir.path().join("index");
    cmd_index(&cfg, &[corpus], &index).unwrap();
    let scores = dir.path().join("scores.jsonl");
    cmd_score(&cfg, &dataset, &scores, Some(&index)).unwrap();
    let mut eval_cfg = cfg.clone();
    eval_cfg.eval.replicates = 200;
    cmd_evaluate(&eval_cfg, &dataset, &[scores], &dir.path().join("report")).unwrap();
    cmd_perturb(&cfg, &dataset, &dir.path().join("twins.jsonl"), false).unwrap();

    assert_eq!(requests_sent(), 0);
}
