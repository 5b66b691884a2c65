//! The cheaper catalog configs run end to end. The driven limit-cycle run
//! is exercised by the acceptance target.

use nlse::catalog::load;
use nlse::{run_config, RunOptions, RunReport};

fn run(name: &str) -> (tempfile::TempDir, RunReport) {
    let (entry, cfg) = load(name).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { output: dir.path().join(name), jobs: None };
    let report = run_config(&cfg, entry.source, &opts).unwrap();
    assert_eq!(report.failed(), 0, "{name}");
    (dir, report)
}

fn summary_f64(report: &RunReport, key: &str) -> f64 {
    report.members[0].outcome.summary[key].as_f64().unwrap_or_else(|| panic!("{key}"))
}

#[test]
fn fig1a_settles_on_the_omega_side() {
    let (_d, r) = run("fig1a");
    let k = &r.members[0].outcome.summary["final_k"];
    assert!(k[2].as_f64().unwrap() > 0.9, "{k}");
    assert!(summary_f64(&r, "final_residual") < 1e-6);
}

#[test]
fn fig1b_settles_near_minus_s_hat() {
    let (_d, r) = run("fig1b");
    assert!(summary_f64(&r, "angle_to_strong_prediction") < 0.05);
}

#[test]
fn fig2_hugs_minus_z() {
    let (_d, r) = run("fig2");
    assert_eq!(r.members.len(), 10);
    let agg = r.aggregate_of("kpar_mean").unwrap();
    assert_eq!(agg.n_members, 10);
    assert!(agg.mean < -0.5, "{agg:?}");
}

#[test]
fn fig3_panels_disentangle() {
    for name in ["fig3-1", "fig3-2"] {
        let (_d, r) = run(name);
        assert!(summary_f64(&r, "final_e_abs") < 1e-3, "{name}");
        let start = summary_f64(&r, "initial_e_abs");
        let expect_low_purity = name == "fig3-1";
        assert_eq!(start > 0.4, expect_low_purity, "{name}: |E|(0) = {start}");
    }
}
