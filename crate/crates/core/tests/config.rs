use dsas_core::synthesis::Objective;
use dsas_core::Config;

fn root(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn defaults_round_trip_bit_exactly() {
    let cfg = Config::default();
    let text = cfg.to_toml();
    let back = Config::from_toml(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.vehicle.l_f.to_bits(), cfg.vehicle.l_f.to_bits());
    assert_eq!(back.design.r.to_bits(), cfg.design.r.to_bits());
    assert_eq!(back.to_toml(), text);
}

#[test]
fn empty_file_is_the_default() {
    assert_eq!(Config::from_toml("").unwrap(), Config::default());
}

#[test]
fn later_layers_win_key_by_key() {
    let base = "[vehicle]\nM = 1600.0\nC_f = 90000.0\n[design]\nu_max = 12.0\n";
    let top = "[vehicle]\nM = 1700.0\n[design]\nobjective = \"feasibility\"\n";
    let cfg = Config::from_layers(&[base, top]).unwrap();
    assert_eq!(cfg.vehicle.m, 1700.0);
    assert_eq!(cfg.vehicle.c_f, 90000.0);
    assert_eq!(cfg.vehicle.c_r, Config::default().vehicle.c_r);
    assert_eq!(cfg.design.u_max, 12.0);
    assert_eq!(cfg.design.objective, Objective::Feasibility);
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    assert!(Config::from_toml("[vehicle]\nmass = 3.0\n").is_err());
    assert!(Config::from_toml("[vehicle]\nM = -1.0\n").is_err());
    assert!(Config::from_toml("[scheduling]\nv_min = 25.0\nv_max = 9.0\n").is_err());
    assert!(Config::from_toml("[design]\nu_max = 0.0\n").is_err());
    assert!(Config::from_toml("not toml at all [").is_err());
}

#[test]
fn missing_file_names_the_path() {
    let err = Config::load(&["/nonexistent/dsas.toml"]).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dsas.toml"));
}

#[test]
fn shipped_configs_load() {
    let full = Config::load(&[root("configs/dsas_full_wind.toml")]).unwrap();
    assert_eq!(full.design.u_max, 15.0);
    assert_eq!(full.design.rho, 1.0);
    assert!((full.design.r - 1.0 / (1200.0f64 * 1200.0)).abs() < 1e-20);
    assert_eq!(full.design.objective, Objective::MaximizeTau1);
    assert_eq!(full.constraint_rows().len(), 8);

    let reduced = Config::load(&[root("configs/dsas_reduced_wind.toml")]).unwrap();
    assert_eq!(reduced.design.rho, 1.0 / 64.0);
    assert_eq!(reduced.design.objective, Objective::Feasibility);
}
