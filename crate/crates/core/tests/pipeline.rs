use edgevo::config::Config;
use edgevo::pipeline::{run_pipeline, synthetic_dataset};
use edgevo::sim::Preset;

fn short_config() -> Config {
    let mut cfg = Config::default();
    cfg.pipeline.synthetic_frames = 30;
    cfg
}

#[test]
fn threaded_and_inline_mapping_agree() {
    let mut cfg = short_config();
    let data = synthetic_dataset(Preset::Corridor, &cfg.pipeline).unwrap();
    let threaded = run_pipeline(&data, &cfg).unwrap();
    cfg.pipeline.threaded = false;
    let inline = run_pipeline(&data, &cfg).unwrap();
    assert_eq!(threaded.keyframes, inline.keyframes);
    assert_eq!(threaded.trajectory.poses, inline.trajectory.poses);
    assert_eq!(threaded.matches, inline.matches);
}

#[test]
fn short_corridor_run_tracks() {
    let cfg = short_config();
    let data = synthetic_dataset(Preset::Corridor, &cfg.pipeline).unwrap();
    let out = run_pipeline(&data, &cfg).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.trajectory.len(), 30);
    assert_eq!(out.keyframes[0], 0);
    let report = out.report(&data.truth_trajectory().unwrap(), &cfg.pipeline).unwrap();
    assert!(report.ate_rmse < 0.01, "{}", report.ate_rmse);
    assert!(out.matches.ba_runs > 0);
}

#[test]
fn subsampling_keeps_every_third_frame() {
    let mut cfg = short_config();
    cfg.pipeline.subsample = 3;
    let data = synthetic_dataset(Preset::Corridor, &cfg.pipeline).unwrap();
    assert_eq!(data.len(), 10);
}
