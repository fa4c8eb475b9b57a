// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Plain-text reports: `[section]` headers, `key = value` lines, and CSV
//! blocks between `[csv name]` and `[end csv]`. Reals are printed with 17
//! significant digits so that reports diff cleanly.

use std::fmt::Write as _;

pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.field("command", command);
        r
    }

    pub fn section(&mut self, name: &str) {
        let _ = writeln!(self.text, "\n[{name}]");
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.field(key, real(value));
    }

    pub fn reals(&mut self, key: &str, values: &[f64]) {
        let list: Vec<String> = values.iter().map(|&v| real(v)).collect();
        self.field(key, format!("[{}]", list.join(", ")));
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) {
        let _ = writeln!(self.text, "[csv {name}]");
        let _ = writeln!(self.text, "{}", header.join(","));
        for row in rows {
            let _ = writeln!(self.text, "{}", row.join(","));
        }
        let _ = writeln!(self.text, "[end csv]");
    }

    pub fn render(&self) -> &str {
        &self.text
    }
}
