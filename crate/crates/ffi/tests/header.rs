use std::path::Path;
use std::process::Command;

#[test]
fn generated_header_declares_the_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/steercert.h"))
            .unwrap();
    for name in [
        "typedef struct SteercertState SteercertState;",
        "typedef struct SteercertMeasurementSet SteercertMeasurementSet;",
        "typedef struct SteercertReport SteercertReport;",
        "STEERCERT_STATUS_NOT_ENTANGLED = 4",
        "steercert_certify(",
        "steercert_last_error(void)",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"steercert.h\"\nint main(void) { SteercertState *s = 0; return steercert_state_phi_plus(2, &s) == STEERCERT_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
