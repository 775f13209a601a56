//! Compiles and runs a small C program against the generated header and
//! the static library, exercising the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "msgfem.h"

int main(void) {
    double h = 0.0;
    if (msgfem_h_of_s(0.5, &h) != MsgfemStatus_Ok) return 1;
    if (h < 0.30 || h > 0.31) return 2;

    MsgfemWorkspace *ws = NULL;
    MsgfemStatus st = msgfem_workspace_new(20, "high-contrast", 0, 2, 2, 2, 12, &ws);
    if (st != MsgfemStatus_Ok) {
        fprintf(stderr, "new failed: %s\n", msgfem_last_error_message());
        return 3;
    }
    double err = -1.0;
    st = msgfem_solve(ws, 12, 4, &err);
    if (st != MsgfemStatus_Ok) {
        fprintf(stderr, "solve failed: %s\n", msgfem_last_error_message());
        return 4;
    }
    if (!(err >= 0.0 && err < 1.0)) return 5;
    msgfem_workspace_free(ws);
    printf("c-smoke error=%g\n", err);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    // artifacts of the workspace build for this profile
    let mut static_lib = None;
    for profile in ["debug", "release"] {
        let candidate = manifest
            .parent()
            .unwrap()
            .parent()
            .unwrap()
            .join("target")
            .join(profile)
            .join("libmsgfem_ffi.a");
        if candidate.exists() {
            static_lib = Some(candidate);
            break;
        }
    }
    let Some(static_lib) = static_lib else {
        panic!("libmsgfem_ffi.a not found; build the msgfem-ffi crate first");
    };

    let work = std::env::temp_dir().join(format!("msgfem_c_smoke_{}", std::process::id()));
    std::fs::create_dir_all(&work).unwrap();
    let c_path = work.join("smoke.c");
    let bin_path = work.join("smoke");
    std::fs::write(&c_path, C_SMOKE).unwrap();

    let compile = Command::new("cc")
        .arg(&c_path)
        .arg(&static_lib)
        .arg(format!("-I{}", include_dir.display()))
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin_path)
        .output()
        .expect("cc not available");
    assert!(
        compile.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&bin_path).output().expect("smoke binary failed to start");
    assert!(
        run.status.success(),
        "smoke run failed with {:?}:\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("c-smoke error="), "unexpected output: {stdout}");
    let _ = std::fs::remove_dir_all(&work);
}
