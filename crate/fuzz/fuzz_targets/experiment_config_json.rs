#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy_cli::commands;
use wulff_hardy_cli::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(cfg) = serde_json::from_slice::<ExperimentConfig>(data) else { return };
    let v = cfg.params;
    let _ = serde_json::from_value::<commands::constants::Params>(v.clone());
    let _ = serde_json::from_value::<commands::norms::Params>(v.clone());
    let _ = serde_json::from_value::<commands::rearrange::Params>(v.clone());
    let _ = serde_json::from_value::<commands::lorentz::Params>(v.clone());
    let _ = serde_json::from_value::<commands::geometry::Params>(v.clone());
    let _ = serde_json::from_value::<commands::solve::Params>(v.clone());
    let _ = serde_json::from_value::<commands::sharpness::Params>(v.clone());
    let _ = serde_json::from_value::<commands::sweep::Params>(v);
});
