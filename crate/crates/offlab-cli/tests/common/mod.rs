//! Helpers for driving the built binary.

#![allow(dead_code)]

use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_offlab");

pub struct RunResult {
    pub status: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

pub fn run(args: &[&str], envs: &[(&str, &str)]) -> RunResult {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    cmd.env_remove("OFFLAB_SEED");
    cmd.env_remove("RAYON_NUM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("spawn offlab");
    RunResult {
        status: status.code(),
        stdout,
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

pub fn run_ok(args: &[&str], envs: &[(&str, &str)]) -> Vec<u8> {
    let r = run(args, envs);
    assert_eq!(r.status, Some(0), "offlab {args:?} failed: {}", r.stderr);
    r.stdout
}

pub fn json_of(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("stdout is JSON")
}
