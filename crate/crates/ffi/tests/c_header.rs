//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler or static archive is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "dephasing.h"

int main(void) {
    DphReservoir *res = NULL;
    if (dph_reservoir_new(1, 100.0, 1.0, 0.1, &res) != DPH_STATUS_OK) return 1;
    double g = 0.0;
    if (dph_gamma_quadrature(res, 1.0, &g) != DPH_STATUS_OK) return 2;
    if (fabs(g - 1.1787493076380683) > 1e-8) return 3;
    DphReservoir *bad = NULL;
    if (dph_reservoir_new(3, -1.0, 1.0, 0.1, &bad) != DPH_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    if (dph_last_error_message(msg, sizeof msg) == 0) return 5;
    uint64_t l = 0;
    if (dph_max_register_size(1e6, &l) != DPH_STATUS_OK || l != 99) return 6;
    dph_reservoir_free(res);
    printf("ok %.17g\n", g);
    return 0;
}
"#;

fn static_lib() -> Option<PathBuf> {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libdephasing_ffi.a");
    lib.exists().then_some(lib)
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dephasing.h")).unwrap();
    for symbol in [
        "typedef struct DphReservoir DphReservoir;",
        "typedef struct DphRegister DphRegister;",
        "DPH_STATUS_OK = 0",
        "dph_gamma_quadrature",
        "dph_hurwitz_zeta2",
        "dph_register_evolve",
        "dph_simulate_ensemble",
        "dph_last_error_message",
    ] {
        assert!(header.contains(symbol), "{symbol}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let (Some(cc), Some(lib)) = (compiler(), static_lib()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    let bin = tmp.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 1.17874930"));
}
